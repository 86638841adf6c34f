"""Two-hop achievable rate regions: end-to-end coding against hop-by-hop coding.

Rates are realised as block lengths ``n`` at fixed ``k``, from
``ceil(k / r_max)`` to ``floor(k / r_min)``. For each pair of link erasure
rates the largest rate (smallest ``n``) meeting the residual target
``eta0`` is chosen, and the achievable rate is ``r (1 - eta)``.
"""
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .analytics import residual_snc_vec
from .exceptions import DomainError

SCHEMES = ("e2e", "nc")
CSV_COLUMNS = ("eps1", "eps2", "scheme", "r_star", "eta", "R", "feasible")


def n_grid(k, r_min, r_max):
    """Block lengths whose rate ``k/n`` lies in ``[r_min, r_max]``."""
    if not 0.0 < r_min < r_max <= 1.0:
        raise DomainError(f"need 0 < r_min < r_max <= 1, got {r_min}, {r_max}")
    lo = math.ceil(k / r_max - 1e-9)
    hi = math.floor(k / r_min + 1e-9)
    if lo > hi:
        raise DomainError(f"no block length realises a rate in [{r_min}, {r_max}] at k={k}")
    return np.arange(lo, hi + 1)


@dataclass(frozen=True)
class RatePoint:
    r_star: float
    n: int
    eta: float
    R: float
    feasible: bool

    @classmethod
    def infeasible(cls):
        return cls(math.nan, 0, math.nan, math.nan, False)


def _eta_table(k, ns, q, eps):
    # rows: block length, cols: erasure rate
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    return np.stack([residual_snc_vec(k, int(n), q, eps) for n in ns])


def _combine_e2e(k, ns, q, e1, e2):
    total = 1.0 - (1.0 - e1) * (1.0 - e2)
    return _eta_table(k, ns, q, total.ravel()).reshape((len(ns),) + total.shape)


def _combine_nc(k, ns, q, e1, e2):
    t1 = _eta_table(k, ns, q, e1.ravel()).reshape((len(ns),) + e1.shape)
    t2 = _eta_table(k, ns, q, e2.ravel()).reshape((len(ns),) + e2.shape)
    return 1.0 - (1.0 - t1) * (1.0 - t2)


def _pick(k, ns, eta, eta0):
    # eta: (len(ns), ...) ; smallest n meeting the target wins
    ok = eta <= eta0
    feasible = ok.any(axis=0)
    idx = np.argmax(ok, axis=0)
    chosen_n = ns[idx]
    chosen_eta = np.take_along_axis(eta, idx[None, ...], axis=0)[0]
    r = np.where(feasible, k / chosen_n, np.nan)
    e = np.where(feasible, chosen_eta, np.nan)
    return r, np.where(feasible, chosen_n, 0), e, r * (1.0 - e), feasible


def _point(k, ns, eta, eta0):
    r, n, e, R, f = _pick(k, ns, eta[:, None], eta0)
    if not f[0]:
        return RatePoint.infeasible()
    return RatePoint(float(r[0]), int(n[0]), float(e[0]), float(R[0]), True)


def max_rate_e2e(eps1, eps2, eta0, r_min=0.5, r_max=1.0, k=50, q=8):
    """Coding at the source only; the channel is the total erasure of both hops."""
    ns = n_grid(k, r_min, r_max)
    eta = _combine_e2e(k, ns, q, np.array([eps1]), np.array([eps2]))[:, 0]
    return _point(k, ns, eta, eta0)


def max_rate_nc(eps1, eps2, eta0, r_min=0.5, r_max=1.0, k=50, q=8):
    """Decode and re-encode at the relay; ``eta = 1 - (1-eta1)(1-eta2)``."""
    ns = n_grid(k, r_min, r_max)
    eta = _combine_nc(k, ns, q, np.array([eps1]), np.array([eps2]))[:, 0]
    return _point(k, ns, eta, eta0)


@dataclass
class RegionGrid:
    """Per-cell optimal rate over an ``eps1 x eps2`` grid (``[i, j]`` = ``eps1[i], eps2[j]``)."""

    scheme: str
    eps1_axis: np.ndarray
    eps2_axis: np.ndarray
    ns: np.ndarray
    k: int
    q: int
    eta0: float
    r_star: np.ndarray
    n_star: np.ndarray
    eta: np.ndarray
    R: np.ndarray
    feasible: np.ndarray

    @property
    def feasible_count(self):
        return int(self.feasible.sum())

    def rows(self):
        for i, e1 in enumerate(self.eps1_axis):
            for j, e2 in enumerate(self.eps2_axis):
                f = bool(self.feasible[i, j])
                yield {
                    "eps1": f"{e1:.6g}",
                    "eps2": f"{e2:.6g}",
                    "scheme": self.scheme,
                    "r_star": f"{self.r_star[i, j]:.10g}" if f else "",
                    "eta": f"{self.eta[i, j]:.10g}" if f else "",
                    "R": f"{self.R[i, j]:.10g}" if f else "",
                    "feasible": int(f),
                }


def default_axis(points=61, hi=0.6):
    return np.round(np.linspace(0.0, hi, points), 12)


def region_grid(eps1_axis, eps2_axis, eta0, r_min=0.5, r_max=1.0, k=50, q=8, scheme="nc"):
    """Evaluate a scheme on the full grid."""
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    a1 = np.asarray(eps1_axis, dtype=float)
    a2 = np.asarray(eps2_axis, dtype=float)
    if np.any((a1 < 0) | (a1 > 1)) or np.any((a2 < 0) | (a2 > 1)):
        raise DomainError("erasure axes must lie in [0, 1]")
    ns = n_grid(k, r_min, r_max)
    e1, e2 = np.meshgrid(a1, a2, indexing="ij")
    combine = _combine_nc if scheme == "nc" else _combine_e2e
    eta = combine(k, ns, q, e1, e2)
    r, n, e, R, f = _pick(k, ns, eta, eta0)
    return RegionGrid(scheme, a1, a2, ns, k, q, eta0, r, n, e, R, f)


def write_region_csv(grids, fh):
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for g in grids:
        w.writerows(g.rows())


def region_csv(grids):
    buf = io.StringIO()
    write_region_csv(grids, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class AreaRatio:
    ratio: float
    nc_cells: int
    e2e_cells: int
    undefined: bool


def area_ratio(grid_nc, grid_e2e):
    """Feasible-cell count of the first grid over that of the second."""
    if grid_nc.feasible.shape != grid_e2e.feasible.shape:
        raise DomainError("grids must share their axes")
    a, b = grid_nc.feasible_count, grid_e2e.feasible_count
    if b == 0:
        return AreaRatio(math.nan, a, 0, True)
    return AreaRatio(a / b, a, b, False)


def iso_product_curve(A, eps1_samples, hi=0.6):
    """Pairs ``(eps1, eps2)`` on ``(1-eps1)(1-eps2) = A`` inside ``[0, hi]^2``.

    :returns: ``(eps1, eps2)`` arrays; samples with ``eps1 = 1`` or an
        out-of-range ``eps2`` are dropped.
    """
    if not 0.0 < A <= 1.0:
        raise DomainError(f"A must lie in (0, 1], got {A}")
    e1 = np.asarray(eps1_samples, dtype=float)
    e1 = e1[e1 != 1.0]
    e2 = (e1 + A - 1.0) / (e1 - 1.0)
    keep = (e2 >= -1e-12) & (e2 <= hi + 1e-12)
    return e1[keep], np.clip(e2[keep], 0.0, hi)


@dataclass(frozen=True)
class SquareDiagnostic:
    eps1: float
    r0: float
    n0: int
    eta1: float
    eps2: np.ndarray
    eta2: np.ndarray
    eta_nc: np.ndarray
    R_nc: np.ndarray
    r_star: np.ndarray
    breakpoint: float

    def rows(self):
        for i, e2 in enumerate(self.eps2):
            yield {
                "eps2": f"{e2:.6g}",
                "eta2": f"{self.eta2[i]:.10g}",
                "eta_nc": f"{self.eta_nc[i]:.10g}",
                "R_nc": f"{self.R_nc[i]:.10g}",
                "r_star": f"{self.r_star[i]:.10g}",
            }


def square_diagnostic(eps1, eta0, r_min=0.3, r_max=1.0, k=70, q=8, eps2_samples=None):
    """Hold the rate chosen at ``(eps1, 0)`` and sweep ``eps2``.

    ``breakpoint`` is the first sampled ``eps2`` where the combined residual
    exceeds ``eta0`` (``nan`` if none); below it the optimal rate stays at
    ``r0``.

    :raises DomainError: when no rate is feasible at ``(eps1, 0)``.
    """
    if eps2_samples is None:
        eps2_samples = np.round(np.arange(0.0, eps1 + 0.05 + 1e-9, 0.01), 12)
    base = max_rate_nc(eps1, 0.0, eta0, r_min, r_max, k, q)
    if not base.feasible:
        raise DomainError(f"no feasible rate at eps1={eps1}, eps2=0")
    e2 = np.asarray(eps2_samples, dtype=float)
    n0 = base.n
    eta1 = float(residual_snc_vec(k, n0, q, eps1)[0])
    eta2 = residual_snc_vec(k, n0, q, e2)
    eta_nc = 1.0 - (1.0 - eta1) * (1.0 - eta2)
    over = np.nonzero(eta_nc > eta0)[0]
    bp = float(e2[over[0]]) if len(over) else math.nan
    ns = n_grid(k, r_min, r_max)
    r_star, *_ = _pick(k, ns, _combine_nc(k, ns, q, np.full_like(e2, eps1), e2), eta0)
    return SquareDiagnostic(eps1, base.r_star, n0, eta1, e2, eta2, eta_nc, base.r_star * (1.0 - eta_nc), r_star, bp)
