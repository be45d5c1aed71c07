"""Hot numeric kernels with interchangeable numba / numpy implementations.

Two kernels dominate runtime:

* ``gml_min_sq`` minimises the squared two-level overlap objective

      f(z) = 1 - 2 z (1 - z) (1 - cos(pi t (2z)^(-1/p)))
           = (1 - 2z)^2 + 4 z (1 - z) cos^2(pi t (2z)^(-1/p) / 2)

  over ``z`` for one order ``p`` and a batch of reduced times ``t``. The
  second form is a sum of non-negative terms, so f keeps full relative
  precision near its zero at t = 1.
* ``wigner_grid`` evaluates the displaced-parity Wigner function of a density
  matrix over a rectangular phase-space grid.

Each has a ``_numba`` and a ``_numpy`` variant; the public wrappers dispatch
on :func:`unified_qsl._accel.get_backend`.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# numpy path works on (batch x scan) blocks of at most this many elements
_BLOCK = 1 << 21


# ---------------------------------------------------------------------------
# GML overlap minimisation
#
# Search domain: z in (0, 1/2]. For z > 1/2 both 2z(1-z) and 1 - cos(angle)
# are smaller than at z = 1/2 (the angle stays inside [0, pi]), so those z never
# win. Inside (0, 1/2] any z whose angle exceeds pi is beaten by the z' > z
# with angle exactly pi, so the scan skips those grid points.
#
# The useful domain is therefore 2z >= t^p. For small t and small p its lower
# end falls under the first uniform grid point, and the kernels then also
# scan [t^p / 2, zs[1]] geometrically.
# ---------------------------------------------------------------------------


@njit
def _objective(z, p, t):
    half = 0.5 * math.pi * t * (2.0 * z) ** (-1.0 / p)
    c = math.cos(half)
    return (1.0 - 2.0 * z) ** 2 + 4.0 * z * (1.0 - z) * c * c


@njit
def _low_scan(p, t, zhi, n_scan):
    # z and the angle both run as geometric progressions from the z where the
    # angle is exactly pi, so each point costs two products and one cosine
    zlo = max(0.5 * t ** p, 1e-300)
    ratio = (zhi / zlo) ** (1.0 / (n_scan - 1))
    aratio = ratio ** (-1.0 / p)
    z = zlo
    angle = math.pi * t * (2.0 * zlo) ** (-1.0 / p)
    best = 2.0
    jbest = -1
    for j in range(n_scan):
        if angle <= math.pi:
            c = math.cos(0.5 * angle)
            v = (1.0 - 2.0 * z) ** 2 + 4.0 * z * (1.0 - z) * c * c
            if v < best:
                best = v
                jbest = j
        z *= ratio
        angle *= aratio
    if jbest < 0:
        return best, zhi, zhi, zhi
    zb = zlo * ratio ** jbest
    lo = zlo * ratio ** max(jbest - 1, 0)
    hi = min(zlo * ratio ** min(jbest + 1, n_scan - 1), zhi)
    return best, zb, lo, hi


@njit
def _gml_min_numba(p, t_tilde, n_scan, ztol):
    n_t = t_tilde.shape[0]
    fmin = np.empty(n_t)
    zmin = np.empty(n_t)

    zs = np.empty(n_scan)
    stretch = np.empty(n_scan)
    gap = np.empty(n_scan)
    weight = np.empty(n_scan)
    for j in range(n_scan):
        z = 0.5 * (j + 1) / n_scan
        zs[j] = z
        stretch[j] = (2.0 * z) ** (-1.0 / p)
        gap[j] = (1.0 - 2.0 * z) ** 2
        weight[j] = 4.0 * z * (1.0 - z)

    for i in range(n_t):
        t = t_tilde[i]
        if t == 0.0:
            fmin[i] = 1.0
            zmin[i] = 0.5
            continue
        base = math.pi * t
        best = 2.0
        jbest = n_scan - 1
        for j in range(n_scan - 1, -1, -1):
            angle = base * stretch[j]
            if angle > math.pi and j < n_scan - 1:
                break
            c = math.cos(0.5 * angle)
            v = gap[j] + weight[j] * c * c
            if v < best:
                best = v
                jbest = j

        lo = zs[jbest - 1] if jbest > 0 else 0.25 * zs[0]
        hi = zs[jbest + 1] if jbest < n_scan - 1 else 0.5
        zb = zs[jbest]
        if n_scan > 2 and 0.5 * t ** p < zs[1]:
            lbest, lz, llo, lhi = _low_scan(p, t, zs[1], n_scan)
            if lbest < best:
                best, zb, lo, hi = lbest, lz, llo, lhi
        x1 = hi - INV_PHI * (hi - lo)
        x2 = lo + INV_PHI * (hi - lo)
        f1 = _objective(x1, p, t)
        f2 = _objective(x2, p, t)
        while hi - lo > ztol * hi:
            if f1 < f2:
                hi = x2
                x2 = x1
                f2 = f1
                x1 = hi - INV_PHI * (hi - lo)
                f1 = _objective(x1, p, t)
            else:
                lo = x1
                x1 = x2
                f1 = f2
                x2 = lo + INV_PHI * (hi - lo)
                f2 = _objective(x2, p, t)
        zc = 0.5 * (lo + hi)
        fc = _objective(zc, p, t)
        if fc < best:
            best = fc
            zb = zc
        fmin[i] = best if best > 0.0 else 0.0
        zmin[i] = zb
    return fmin, zmin


def _objective_np(z, p, t):
    c = np.cos(0.5 * np.pi * t * (2.0 * z) ** (-1.0 / p))
    return (1.0 - 2.0 * z) ** 2 + 4.0 * z * (1.0 - z) * c * c


def _low_scan_np(p, t, zhi, n_scan):
    zs = np.geomspace(max(0.5 * t ** p, 1e-300), zhi, n_scan)
    with np.errstate(over="ignore", invalid="ignore"):
        angle = np.pi * t * (2.0 * zs) ** (-1.0 / p)
        vals = (1.0 - 2.0 * zs) ** 2 + 4.0 * zs * (1.0 - zs) * np.cos(0.5 * angle) ** 2
    vals[~(angle <= np.pi)] = np.inf
    j = int(np.argmin(vals))
    if not np.isfinite(vals[j]):
        return 2.0, zhi, zhi, zhi
    return vals[j], zs[j], zs[max(j - 1, 0)], zs[min(j + 1, n_scan - 1)]


def _gml_min_numpy(p, t_tilde, n_scan, ztol):
    t_tilde = np.asarray(t_tilde, dtype=float)
    zs = 0.5 * np.arange(1, n_scan + 1) / n_scan
    stretch = (2.0 * zs) ** (-1.0 / p)
    gap = (1.0 - 2.0 * zs) ** 2
    weight = 4.0 * zs * (1.0 - zs)

    fmin = np.ones_like(t_tilde)
    zmin = np.full_like(t_tilde, 0.5)
    active = np.flatnonzero(t_tilde != 0.0)
    rows = max(1, _BLOCK // n_scan)
    for start in range(0, active.size, rows):
        idx = active[start:start + rows]
        t = t_tilde[idx][:, None]
        angle = np.pi * t * stretch[None, :]
        vals = gap[None, :] + weight[None, :] * np.cos(0.5 * angle) ** 2
        last = vals[:, -1].copy()
        vals[angle > np.pi] = np.inf
        vals[:, -1] = last
        jbest = np.argmin(vals, axis=1)
        best = vals[np.arange(idx.size), jbest]

        lo = np.where(jbest > 0, zs[np.maximum(jbest - 1, 0)], 0.25 * zs[0])
        hi = np.where(jbest < n_scan - 1, zs[np.minimum(jbest + 1, n_scan - 1)], 0.5)
        tt = t[:, 0]
        zb = zs[jbest]
        if n_scan > 2:
            for r in np.flatnonzero(0.5 * tt ** p < zs[1]):
                lbest, lz, llo, lhi = _low_scan_np(p, tt[r], zs[1], n_scan)
                if lbest < best[r]:
                    best[r], zb[r], lo[r], hi[r] = lbest, lz, llo, lhi
        x1 = hi - INV_PHI * (hi - lo)
        x2 = lo + INV_PHI * (hi - lo)
        f1 = _objective_np(x1, p, tt)
        f2 = _objective_np(x2, p, tt)
        while np.any(hi - lo > ztol * hi):
            left = f1 < f2
            # left branch: keep [lo, x2]; right branch: keep [x1, hi]
            hi = np.where(left, x2, hi)
            lo = np.where(left, lo, x1)
            nx1 = np.where(left, hi - INV_PHI * (hi - lo), x2)
            nx2 = np.where(left, x1, lo + INV_PHI * (hi - lo))
            fresh = np.where(left, nx1, nx2)
            ff = _objective_np(fresh, p, tt)
            f1, f2 = np.where(left, ff, f2), np.where(left, f1, ff)
            x1, x2 = nx1, nx2
        zc = 0.5 * (lo + hi)
        fc = _objective_np(zc, p, tt)
        better = fc < best
        fmin[idx] = np.maximum(np.where(better, fc, best), 0.0)
        zmin[idx] = np.where(better, zc, zb)
    return fmin, zmin


def gml_min_sq(p: float, t_tilde, n_scan: int = 4096, ztol: float = 1e-12):
    """Minimum of the squared overlap objective and its argmin, per reduced time.

    ``t_tilde`` must already be validated to lie in [0, 1].
    """
    t_tilde = np.ascontiguousarray(np.atleast_1d(t_tilde), dtype=float)
    if _accel.get_backend() == "numba":
        return _gml_min_numba(float(p), t_tilde, int(n_scan), float(ztol))
    return _gml_min_numpy(float(p), t_tilde, int(n_scan), float(ztol))


# ---------------------------------------------------------------------------
# Wigner function
#
# Tr[D(-a) rho D(a) Pi] = Tr[rho D(2a) Pi], and rho has finite support, so the
# sum only needs <m|D(2a)|n> for m, n <= cutoff (associated Laguerre form).
# For each offset k = m - n the pair of mirrored elements combines into
# 2 Re(rho_{n,n+k} beta^k).
# ---------------------------------------------------------------------------


@njit
def _wigner_point(rho, bre, bim):
    dim = rho.shape[0]
    x = bre * bre + bim * bim
    total = 0.0
    # beta^k accumulated as a complex pair
    pre = 1.0
    pim = 0.0
    for k in range(dim):
        # r_i = sqrt(i!/(i+k)!) for i = 0
        ratio = 1.0
        for j in range(1, k + 1):
            ratio /= math.sqrt(j)
        lag_prev = 0.0
        lag = 1.0
        acc = 0.0
        for i in range(dim - k):
            if i == 1:
                lag_prev = lag
                lag = 1.0 + k - x
            elif i > 1:
                nxt = ((2.0 * (i - 1) + 1.0 + k - x) * lag - (i - 1 + k) * lag_prev) / i
                lag_prev = lag
                lag = nxt
            if i > 0:
                ratio *= math.sqrt(i / (i + k))
            sign = 1.0 if i % 2 == 0 else -1.0
            if k == 0:
                term = rho[i, i].real
            else:
                c = rho[i, i + k]
                term = 2.0 * (c.real * pre - c.imag * pim)
            acc += sign * ratio * lag * term
        total += acc
        nre = pre * bre - pim * bim
        pim = pre * bim + pim * bre
        pre = nre
    return (2.0 / math.pi) * math.exp(-0.5 * x) * total


@njit
def _wigner_numba(rho, xs, ps):
    out = np.empty((ps.shape[0], xs.shape[0]))
    for a in range(ps.shape[0]):
        for b in range(xs.shape[0]):
            out[a, b] = _wigner_point(rho, 2.0 * xs[b], 2.0 * ps[a])
    return out


def _wigner_numpy(rho, xs, ps):
    dim = rho.shape[0]
    beta = 2.0 * (xs[None, :] + 1j * ps[:, None])
    x = np.abs(beta) ** 2
    total = np.zeros(beta.shape)
    beta_k = np.ones_like(beta)
    for k in range(dim):
        ratio = 1.0 / math.sqrt(math.factorial(k))
        lag_prev = np.zeros_like(x)
        lag = np.ones_like(x)
        for i in range(dim - k):
            if i == 1:
                lag_prev, lag = lag, 1.0 + k - x
            elif i > 1:
                lag_prev, lag = lag, ((2 * (i - 1) + 1 + k - x) * lag - (i - 1 + k) * lag_prev) / i
            if i > 0:
                ratio *= math.sqrt(i / (i + k))
            sign = 1.0 if i % 2 == 0 else -1.0
            if k == 0:
                term = rho[i, i].real
            else:
                term = 2.0 * np.real(rho[i, i + k] * beta_k)
            total += sign * ratio * lag * term
        beta_k = beta_k * beta
    return (2.0 / np.pi) * np.exp(-0.5 * x) * total


def wigner_grid(rho, xs, ps):
    """W(x + i p) on the outer grid, rows indexed by ``ps``, columns by ``xs``."""
    rho = np.ascontiguousarray(rho, dtype=complex)
    xs = np.ascontiguousarray(xs, dtype=float)
    ps = np.ascontiguousarray(ps, dtype=float)
    if _accel.get_backend() == "numba":
        return _wigner_numba(rho, xs, ps)
    return _wigner_numpy(rho, xs, ps)
