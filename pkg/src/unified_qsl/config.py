"""Run configuration for the command-line front end.

A config file (JSON, or YAML for any other suffix) holds one mapping; every
key is optional. Angular frequencies are in rad/s, times in seconds and
hbar = 1. Complex numbers may be written as a plain number, ``[re, im]`` or
``{abs: A, arg: phi}`` (``arg_pi`` gives the phase in units of pi).

Example::

    nu: 2.513e7
    state: {family: squeezed, r: 0.5, phi_pi: 1.5}
    p_grid: {min: 0.1, max: 10, n: 61}
    times: {n: 401, periods: 1.0}
    noise: {sigma: 0.0}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError

DEFAULT_NU = 2 * math.pi * 4e6
DEFAULT_OMEGA = 2 * math.pi * 13.5e6
FAMILIES = ("superposition", "two_level", "fock", "coherent", "squeezed", "squeezed_coherent")


def parse_complex(value, what: str = "value") -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict):
        _only(value, {"abs", "arg", "arg_pi"}, what)
        if "abs" not in value or ("arg" in value and "arg_pi" in value):
            raise ConfigError(f"{what}: polar form needs abs and at most one of arg / arg_pi")
        phase = _num(value, "arg", 0.0, what) + math.pi * _num(value, "arg_pi", 0.0, what)
        return complex(_num(value, "abs", 0.0, what) * np.exp(1j * phase))
    raise ConfigError(f"{what}: cannot read {value!r} as a complex number")


def _only(doc: dict, allowed: set, where: str):
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")


def _num(doc: dict, key: str, default, where: str, positive: bool = False, integer: bool = False):
    if key not in doc or doc[key] is None:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{where}.{key}: expected an integer")
        v = int(v)
    if not math.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"{where}.{key}: must be {'positive and ' if positive else ''}finite")
    return v


@dataclass(frozen=True)
class StateSpec:
    family: str = "superposition"
    amplitudes: tuple = (2.0, 1.0)
    rho1: float = 0.2
    n: int = 0
    alpha: complex = 0j
    zeta: complex = 0j

    @classmethod
    def from_dict(cls, doc) -> "StateSpec":
        if not isinstance(doc, dict):
            raise ConfigError("state: expected a mapping")
        family = doc.get("family", "superposition")
        if family not in FAMILIES:
            raise ConfigError(f"state.family: {family!r} is not one of {', '.join(FAMILIES)}")
        _only(doc, {"family", "amplitudes", "rho1", "n", "alpha", "zeta", "r", "phi", "phi_pi"}, "state")
        amps = (2.0, 1.0)
        if "amplitudes" in doc:
            raw = doc["amplitudes"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("state.amplitudes: expected a non-empty list")
            amps = tuple(parse_complex(a, "state.amplitudes") for a in raw)
            if not any(abs(a) > 0 for a in amps):
                raise ConfigError("state.amplitudes: all zero")
        rho1 = _num(doc, "rho1", 0.2, "state")
        if not 0.0 <= rho1 <= 1.0:
            raise ConfigError("state.rho1 must lie in [0, 1]")
        n = _num(doc, "n", 0, "state", integer=True)
        if n < 0:
            raise ConfigError("state.n must be non-negative")
        alpha = parse_complex(doc.get("alpha", 0.0), "state.alpha")
        if "zeta" in doc:
            if any(k in doc for k in ("r", "phi", "phi_pi")):
                raise ConfigError("state: give either zeta or r/phi, not both")
            zeta = parse_complex(doc["zeta"], "state.zeta")
        else:
            r = _num(doc, "r", 0.0, "state")
            if r < 0:
                raise ConfigError("state.r must be non-negative")
            if "phi" in doc and "phi_pi" in doc:
                raise ConfigError("state: give phi or phi_pi, not both")
            phi = _num(doc, "phi", 0.0, "state") + math.pi * _num(doc, "phi_pi", 0.0, "state")
            zeta = complex(r * np.exp(1j * phi))
        return cls(family, amps, float(rho1), n, alpha, zeta)

    @property
    def unbounded(self) -> bool:
        """Ideal coherent and squeezed states have no maximum energy."""
        return self.family in ("coherent", "squeezed", "squeezed_coherent")


@dataclass(frozen=True)
class TimeGrid:
    n: int = 401
    t_max: float | None = None
    periods: float = 1.0

    def times(self, nu: float) -> np.ndarray:
        t_max = self.t_max if self.t_max is not None else self.periods * 2 * math.pi / nu
        return np.linspace(0.0, t_max, self.n)


@dataclass(frozen=True)
class TomographySpec:
    omega: float = DEFAULT_OMEGA
    amplitudes: tuple | None = None
    phases: int | None = None
    records: str | None = None
    evolve_points: int = 0


@dataclass(frozen=True)
class RegimeMapSpec:
    resolution: int = 24
    n_levels: int = 65
    width: float = 1.0
    t_samples: int = 64


@dataclass(frozen=True)
class RunConfig:
    nu: float = DEFAULT_NU
    p_grid: tuple = tuple(np.geomspace(0.1, 10.0, 61))
    times: TimeGrid = field(default_factory=TimeGrid)
    reduced_points: int = 201
    state: StateSpec = field(default_factory=StateSpec)
    cutoff: int | None = None
    n_prime: int | None = None
    bounded: bool | None = None
    noise_sigma: float = 0.0
    shots: int | None = None
    tomography: TomographySpec = field(default_factory=TomographySpec)
    regime_map: RegimeMapSpec = field(default_factory=RegimeMapSpec)
    slack: float = 1e-9
    seed: int = 0
    format: str = "csv"
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, doc, base_dir: Path = Path(".")) -> "RunConfig":
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a mapping")
        _only(
            doc,
            {
                "nu", "p_grid", "times", "reduced_points", "state", "cutoff", "n_prime", "bounded",
                "noise", "tomography", "regime_map", "slack", "seed", "format",
            },
            "config",
        )
        nu = _num(doc, "nu", DEFAULT_NU, "config", positive=True)
        p_grid = _p_grid(doc.get("p_grid"))
        times = _times(doc.get("times") or {})
        reduced_points = _num(doc, "reduced_points", 201, "config", positive=True, integer=True)
        if reduced_points < 2:
            raise ConfigError("config.reduced_points must be at least 2")
        state = StateSpec.from_dict(doc.get("state") or {})
        cutoff = _num(doc, "cutoff", None, "config", integer=True)
        n_prime = _num(doc, "n_prime", None, "config", integer=True)
        for name, v in (("cutoff", cutoff), ("n_prime", n_prime)):
            if v is not None and v < 1:
                raise ConfigError(f"config.{name} must be at least 1")
        bounded = doc.get("bounded")
        if bounded is not None and not isinstance(bounded, bool):
            raise ConfigError("config.bounded must be true, false or null")
        noise = doc.get("noise") or {}
        if not isinstance(noise, dict):
            raise ConfigError("noise: expected a mapping")
        _only(noise, {"sigma", "shots"}, "noise")
        sigma = _num(noise, "sigma", 0.0, "noise")
        shots = _num(noise, "shots", None, "noise", positive=True, integer=True)
        if sigma < 0:
            raise ConfigError("noise.sigma must be non-negative")
        fmt = doc.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError("config.format must be csv or json")
        seed = _num(doc, "seed", 0, "config", integer=True)
        slack = _num(doc, "slack", 1e-9, "config")
        if slack < 0:
            raise ConfigError("config.slack must be non-negative")
        return cls(
            nu=float(nu),
            p_grid=p_grid,
            times=times,
            reduced_points=reduced_points,
            state=state,
            cutoff=cutoff,
            n_prime=n_prime,
            bounded=bounded,
            noise_sigma=float(sigma),
            shots=shots,
            tomography=_tomography(doc.get("tomography") or {}),
            regime_map=_regime_map(doc.get("regime_map") or {}),
            slack=float(slack),
            seed=seed,
            format=fmt,
            base_dir=base_dir,
        )


def _p_grid(spec) -> tuple:
    if spec is None:
        return tuple(np.geomspace(0.1, 10.0, 61))
    if isinstance(spec, list):
        vals = [_num({"p": v}, "p", None, "p_grid", positive=True) for v in spec]
        if not vals:
            raise ConfigError("p_grid: empty list")
        return tuple(float(v) for v in vals)
    if isinstance(spec, dict):
        _only(spec, {"min", "max", "n"}, "p_grid")
        lo = _num(spec, "min", 0.1, "p_grid", positive=True)
        hi = _num(spec, "max", 10.0, "p_grid", positive=True)
        n = _num(spec, "n", 61, "p_grid", positive=True, integer=True)
        if hi < lo:
            raise ConfigError("p_grid: max below min")
        return tuple(float(v) for v in np.geomspace(lo, hi, n))
    raise ConfigError("p_grid: expected a list or a {min, max, n} mapping")


def _times(doc) -> TimeGrid:
    if not isinstance(doc, dict):
        raise ConfigError("times: expected a mapping")
    _only(doc, {"n", "t_max", "periods"}, "times")
    n = _num(doc, "n", 401, "times", positive=True, integer=True)
    if n < 2:
        raise ConfigError("times.n must be at least 2")
    return TimeGrid(
        n=n,
        t_max=_num(doc, "t_max", None, "times", positive=True),
        periods=float(_num(doc, "periods", 1.0, "times", positive=True)),
    )


def _tomography(doc) -> TomographySpec:
    if not isinstance(doc, dict):
        raise ConfigError("tomography: expected a mapping")
    _only(doc, {"omega", "amplitudes", "phases", "records", "evolve_points"}, "tomography")
    amps = doc.get("amplitudes")
    if amps is not None:
        if not isinstance(amps, list) or not amps:
            raise ConfigError("tomography.amplitudes: expected a non-empty list")
        amps = tuple(float(_num({"a": a}, "a", None, "tomography.amplitudes", positive=True)) for a in amps)
    records = doc.get("records")
    if records is not None and not isinstance(records, str):
        raise ConfigError("tomography.records: expected a file path")
    points = _num(doc, "evolve_points", 0, "tomography", integer=True)
    if points < 0:
        raise ConfigError("tomography.evolve_points must be non-negative")
    return TomographySpec(
        omega=float(_num(doc, "omega", DEFAULT_OMEGA, "tomography", positive=True)),
        amplitudes=amps,
        phases=_num(doc, "phases", None, "tomography", positive=True, integer=True),
        records=records,
        evolve_points=points,
    )


def _regime_map(doc) -> RegimeMapSpec:
    if not isinstance(doc, dict):
        raise ConfigError("regime_map: expected a mapping")
    _only(doc, {"resolution", "n_levels", "width", "t_samples"}, "regime_map")
    res = _num(doc, "resolution", 24, "regime_map", positive=True, integer=True)
    if res < 16:
        raise ConfigError("regime_map.resolution must be at least 16")
    n_levels = _num(doc, "n_levels", 65, "regime_map", positive=True, integer=True)
    if n_levels < 3:
        raise ConfigError("regime_map.n_levels must be at least 3")
    return RegimeMapSpec(
        resolution=res,
        n_levels=n_levels,
        width=float(_num(doc, "width", 1.0, "regime_map", positive=True)),
        t_samples=_num(doc, "t_samples", 64, "regime_map", positive=True, integer=True),
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return RunConfig.from_dict(doc, base_dir=path.parent)
