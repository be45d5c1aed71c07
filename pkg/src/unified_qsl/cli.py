"""Command-line front end: ``qsl {bounds,evolve,regime-map,tomo}``.

Exit codes: 0 success, 1 configuration error, 2 a simulated overlap fell below
a bound, 3 the tomography records do not determine the density matrix.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, fock, spectra, tomography
from .config import RunConfig, StateSpec, load_config
from .errors import (
    BoundViolationError,
    ConfigError,
    InsufficientDataError,
    QSLError,
    UnderdeterminedError,
)

SCHEMA_PREFIX = "unified-qsl"
EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_TOMO = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not math.isfinite(v) else v
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def write_json(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")
    return path


def write_table(out: Path, name: str, kind: str, columns: dict, fmt: str, meta: dict | None = None) -> Path:
    """One table per file; CSV carries the schema in a leading comment line."""
    schema = f"{SCHEMA_PREFIX}/{kind}/1"
    if fmt == "json":
        return write_json(out / f"{name}.json", {"schema": schema, "meta": meta or {}, "columns": columns})
    names = list(columns)
    n_rows = len(next(iter(columns.values()))) if columns else 0
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n_rows):
        w.writerow([_cell(columns[c][i]) for c in names])
    path = out / f"{name}.csv"
    path.write_text(buf.getvalue())
    return path


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def build_state(spec: StateSpec, cutoff: int | None = None) -> fock.FockState:
    if spec.family == "superposition":
        amps = np.array(spec.amplitudes, dtype=complex)
        state = fock.FockState.from_unnormalized(amps)
    elif spec.family == "two_level":
        state = fock.FockState(np.array([math.sqrt(1 - spec.rho1), math.sqrt(spec.rho1)], complex))
    elif spec.family == "fock":
        state = fock.FockState.fock(spec.n, spec.n)
    elif spec.family == "coherent":
        return fock.coherent_state(spec.alpha, cutoff)
    else:
        return fock.squeezed_coherent_state(spec.zeta, spec.alpha if spec.family == "squeezed_coherent" else 0.0, cutoff)
    if cutoff is not None:
        if cutoff < state.cutoff:
            raise ConfigError(f"cutoff {cutoff} is below the highest prepared level {state.cutoff}")
        state = state.padded(cutoff)
    return state


def default_n_prime(spec: StateSpec, state: fock.FockState) -> int:
    if spec.family == "coherent":
        return fock.CUTOFF_COHERENT
    if spec.family in ("squeezed", "squeezed_coherent"):
        return fock.CUTOFF_SQUEEZED
    return max(fock.CUTOFF_FEW_LEVEL, state.cutoff)


def ideal_moments(spec: StateSpec, spectrum: spectra.EnergySpectrum, nu: float) -> spectra.MomentSummary:
    """Closed-form moments for the untruncated coherent / squeezed families."""
    if spec.family == "coherent":
        return spectra.coherent_moments(spec.alpha, nu)
    if spec.family == "squeezed":
        return spectra.squeezed_moments(abs(spec.zeta), nu)
    return spectra.moments(spectrum)


def _describe(spec: StateSpec) -> dict:
    doc = {"family": spec.family}
    if spec.family == "superposition":
        doc["amplitudes"] = [complex(a) for a in spec.amplitudes]
    elif spec.family == "two_level":
        doc["rho1"] = spec.rho1
    elif spec.family == "fock":
        doc["n"] = spec.n
    if spec.family in ("coherent", "squeezed_coherent"):
        doc["alpha"] = complex(spec.alpha)
    if spec.family in ("squeezed", "squeezed_coherent"):
        doc["zeta"] = complex(spec.zeta)
    return doc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_bounds(cfg: RunConfig, out: Path) -> list[Path]:
    """O_p on the reduced-time grid for every p, plus MT, the O_2 fit and cos(pi t/2)."""
    t = np.linspace(0.0, 1.0, cfg.reduced_points)
    cols = {
        "t_tilde": t,
        "MT": bounds.cos_reference(t),  # MT in its own reduced time t / tau_MT
        "cos_reference": bounds.cos_reference(t),
        "QuadraticGMLClosedForm": bounds.quadratic_gml_closed_form(t),
    }
    for p in cfg.p_grid:
        cols[bounds.BoundKind(bounds.BoundFamily.GML, p).label] = bounds.gml_overlap_bound(p, t)
    meta = {"n_curves": len(cfg.p_grid), "p_grid": list(cfg.p_grid)}
    return [write_table(out, "bounds", "bounds", cols, cfg.format, meta)]


def _check_bounds(times, overlap, curves, slack) -> None:
    """Raise on the earliest sample where the overlap dips below a bound inside its window."""
    first = None
    for fam, vals in curves:
        inside = times <= fam.tau
        bad = np.flatnonzero(inside & (overlap < vals - slack))
        if bad.size and (first is None or times[bad[0]] < first[1]):
            i = bad[0]
            first = (fam.kind.label, float(times[i]), float(overlap[i]), float(vals[i]))
    if first is not None:
        raise BoundViolationError(*first)


def cmd_evolve(cfg: RunConfig, out: Path) -> list[Path]:
    """Overlap under free evolution against every bound; refuses to write violating data."""
    spec = cfg.state
    state = build_state(spec, cfg.cutoff)
    bounded = (not spec.unbounded) if cfg.bounded is None else cfg.bounded
    spectrum = fock.spectrum_of_state(state, cfg.nu, bounded=bounded)
    times = cfg.times.times(cfg.nu)
    overlap = fock.overlap_curve(state, cfg.nu, times)

    curves = [(fam, fam.values(times)) for fam in bounds.applicable_families(spectrum, cfg.p_grid)]
    extra = [(fam, fam.values(times)) for fam in bounds.applicable_families(spectrum, (1.0, 2.0), mt=False)]
    _check_bounds(times, overlap, curves + extra, cfg.slack)

    def envelope(kinds):
        env = np.zeros_like(times)
        for fam, vals in curves:
            if fam.kind.family in kinds:
                np.maximum(env, vals, out=env)
        return env

    nan = np.full_like(times, np.nan)
    cols = {
        "t": times,
        "overlap": overlap,
        "MT": envelope({bounds.BoundFamily.MT}),
        "GML": envelope({bounds.BoundFamily.GML}),
        "DualGML": envelope({bounds.BoundFamily.DUAL_GML}) if bounded else nan,
        "unified": envelope(set(bounds.BoundFamily)),
    }
    for fam, vals in extra:
        cols[fam.kind.label] = vals

    summary = ideal_moments(spec, spectrum, cfg.nu)
    regime = spectra.classify_regime(summary)
    print(f"regime: {regime.value}")
    sim = spectra.moments(spectrum)
    report = {
        "schema": f"{SCHEMA_PREFIX}/evolve-report/1",
        "regime": regime.value,
        "state": _describe(spec),
        "cutoff": state.cutoff,
        "nu": cfg.nu,
        "bounded": bounded,
        "moments": {"mean": sim.mean, "std": sim.std, "e0": sim.e0, "emax": sim.emax},
        "regime_moments": {"mean": summary.mean, "std": summary.std},
        "orthogonality_times": _orthogonality_report(spectrum),
        "min_margin": float(np.min(overlap - cols["unified"])),
    }
    paths = [write_table(out, "evolve", "evolve", cols, cfg.format, {"regime": regime.value})]
    if cfg.tomography.evolve_points:
        paths.append(_evolve_tomography(cfg, state, times, overlap, out))
    paths.append(write_json(out / "evolve_report.json", report))
    return paths


def _orthogonality_report(spectrum) -> dict:
    doc = {}
    try:
        doc["tau_MT"] = spectra.mt_time(spectrum)
    except QSLError:
        doc["tau_MT"] = None
    for p in (1.0, 2.0):
        try:
            doc[f"tau_{p:g}"] = spectra.gml_time(spectrum, p)
        except QSLError:
            doc[f"tau_{p:g}"] = None
        if spectrum.max_energy is not None:
            try:
                doc[f"tau_{p:g}_dual"] = spectra.dual_gml_time(spectrum, p)
            except QSLError:
                doc[f"tau_{p:g}_dual"] = None
    return doc


def _evolve_tomography(cfg, state, times, overlap, out: Path) -> Path:
    """density_overlap between reconstructions at t = 0 and at sampled times."""
    n_prime = cfg.n_prime or default_n_prime(cfg.state, state)
    idx = np.unique(np.linspace(0, times.size - 1, cfg.tomography.evolve_points).round().astype(int))
    rho0 = None
    rec_overlap = []
    for k, i in enumerate(idx):
        st = fock.evolve_free(state, cfg.nu, times[i])
        rho_hat = _reconstruct(cfg, st, n_prime, cfg.seed + k)[0]
        if rho0 is None:
            rho0 = rho_hat
        rec_overlap.append(fock.density_overlap(rho0, rho_hat))
    cols = {"t": times[idx], "overlap": overlap[idx], "overlap_tomography": np.array(rec_overlap)}
    return write_table(out, "evolve_tomography", "evolve-tomography", cols, cfg.format, {"n_prime": n_prime})


def _displacements(cfg: RunConfig, state: fock.FockState, n_prime: int) -> np.ndarray:
    tomo = cfg.tomography
    if tomo.amplitudes is None and tomo.phases is None:
        return tomography.default_displacements(state.mean_photon_number(), n_prime)
    n_phase = tomo.phases or 4 * (n_prime + 1)
    amps = tomo.amplitudes
    if amps is None:
        a = max(math.sqrt(state.mean_photon_number()), 0.5)
        amps = (a, 2 * a)
    ring = np.exp(2j * np.pi * np.arange(n_phase) / n_phase)
    return np.concatenate([a * ring for a in amps])


def _reconstruct(cfg: RunConfig, state: fock.FockState, n_prime: int, seed: int):
    alphas = _displacements(cfg, state, n_prime)
    recs = tomography.measure_records(
        state.density(),
        alphas,
        cfg.tomography.omega,
        noise_sigma=cfg.noise_sigma,
        shots=cfg.shots,
        seed=seed,
        n_prime=n_prime,
    )
    return tomography.reconstruct_density(recs.records(), n_prime), recs


def cmd_tomo(cfg: RunConfig, out: Path) -> list[Path]:
    """Simulate (or load) displaced records, reconstruct, report fidelity and element errors."""
    spec = cfg.state
    state = build_state(spec, cfg.cutoff)
    if cfg.tomography.records:
        path = Path(cfg.tomography.records)
        if not path.is_absolute():
            path = cfg.base_dir / path
        try:
            recs = tomography.RecordSet.loads(path.read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read record set {path}: {exc}") from exc
        n_prime = cfg.n_prime or recs.n_prime
        rho_hat = tomography.reconstruct_density(recs.records(), n_prime)
    else:
        n_prime = cfg.n_prime or default_n_prime(spec, state)
        rho_hat, recs = _reconstruct(cfg, state, n_prime, cfg.seed)

    psi = state.amplitudes
    target = np.zeros((n_prime + 1, n_prime + 1), complex)
    k = min(psi.size, n_prime + 1)
    target[:k, :k] = np.outer(psi[:k], psi[:k].conj())
    err = np.abs(rho_hat.entries - target)
    fid = tomography.fidelity(rho_hat, state)
    print(f"fidelity: {fid:.10f}")
    report = {
        "schema": f"{SCHEMA_PREFIX}/tomo-report/1",
        "state": _describe(spec),
        "fidelity": fid,
        "seed": cfg.seed,
        "noise_sigma": cfg.noise_sigma,
        "shots": cfg.shots,
        "n_prime": n_prime,
        "n_records": len(recs.alphas),
        "max_element_error": float(err.max()),
        "element_error": err,
        "density_real": rho_hat.entries.real,
        "density_imag": rho_hat.entries.imag,
        "records": recs.to_dict(),
    }
    paths = [write_json(out / "tomo_report.json", report)]
    paths.append(write_json(out / "tomo_records.json", recs.to_dict()))
    return paths


def _mt_dominated(mean, std, rm, p_grid):
    """MT dominance of the ladder representative; None when no ladder spectrum fits."""
    try:
        spec = spectra.ladder_spectrum(mean, std, rm.n_levels, rm.width)
    except QSLError:
        return None
    tau = spectra.mt_time(spec)
    t_grid = np.linspace(0.0, tau, rm.t_samples + 1)[1:]
    return spectra.mt_dominance_scan(spec, p_grid, t_grid)


def _boundary_std(mean, stds, rm, p_grid, iters: int = 40):
    """Largest std below which the column is MT dominated (bisection), or None.

    The bisection starts from the lowest grid std that has a ladder spectrum.
    """
    w = rm.width
    top = min(mean, w - mean)  # the MT regime ends at the critical lines
    hi = top * (1 - 1e-9)
    lo = next((s for s in stds if s < hi and _mt_dominated(mean, s, rm, p_grid) is not None), None)
    if lo is None or not _mt_dominated(mean, lo, rm, p_grid):
        return None
    if _mt_dominated(mean, hi, rm, p_grid):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _mt_dominated(mean, mid, rm, p_grid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9 * w:
            break
    return 0.5 * (lo + hi)


def cmd_regime_map(cfg: RunConfig, out: Path) -> list[Path]:
    """Label a grid over the (mean, std) moment plane and trace the MT-dominated boundary.

    Cell centres sit on a res x res grid over 0 < mean < W, 0 < std < W / 2.
    MT cells are tested for MT dominance on a maximum-entropy ladder spectrum
    with those moments; the boundary is bisected in std for every mean column.
    """
    rm = cfg.regime_map
    w, res = rm.width, rm.resolution
    means = (np.arange(res) + 0.5) / res * w
    stds = (np.arange(res) + 0.5) / res * (0.5 * w)
    rows = {"mean": [], "std": [], "regime": [], "mt_dominated": []}
    for m in means:
        for s in stds:
            dom = None
            if not spectra.semicircle_feasible(m, s, w, 0.0):
                label = "infeasible"
            else:
                label = spectra.classify_regime(spectra.MomentSummary(m, s, 0.0, w)).value
                if label == spectra.Regime.MT.value:
                    dom = _mt_dominated(m, s, rm, cfg.p_grid)
            rows["mean"].append(m)
            rows["std"].append(s)
            rows["regime"].append(label)
            rows["mt_dominated"].append("" if dom is None else dom)
    edge = [(m, _boundary_std(m, stds, rm, cfg.p_grid)) for m in means]
    edge = [(m, s) for m, s in edge if s is not None]
    line = {"mean": np.array([m for m, _ in edge]), "std": np.array([s for _, s in edge])}
    meta = {"width": w, "resolution": res, "n_levels": rm.n_levels}
    return [
        write_table(out, "regime_map", "regime-map", rows, cfg.format, meta),
        write_table(out, "regime_boundary", "regime-boundary", line, cfg.format, meta),
    ]


COMMANDS = {
    "bounds": cmd_bounds,
    "evolve": cmd_evolve,
    "regime-map": cmd_regime_map,
    "tomo": cmd_tomo,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for bound violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsl", description="Unified quantum speed limit bounds and simulations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--config", metavar="PATH", help="JSON or YAML run configuration")
        p.add_argument("--out", metavar="DIR", default="qsl-out", help="output directory (default: qsl-out)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--format", choices=("csv", "json"), help="table format (overrides the config)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.format is not None:
            overrides["format"] = args.format
        if overrides:
            cfg = RunConfig(**{**cfg.__dict__, **overrides})
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[args.command](cfg, out)
    except BoundViolationError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (InsufficientDataError, UnderdeterminedError) as exc:
        print(
            f"insufficient tomography data: {exc}\n"
            "hint: add displacement rings (tomography.amplitudes) or phases (tomography.phases)",
            file=sys.stderr,
        )
        return EXIT_TOMO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QSLError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
