"""Complexity-constrained choice of the coding rate along a line path.

Every node uses the same block length ``n``. The source pays the encoding
cost, relays pay decoding plus re-encoding and the sink pays decoding.
A candidate ``n`` is feasible when relay and sink costs fit the budget
``beta0``; among feasible candidates the one with the largest utility
``(rho_pred - rho0) / beta_s`` wins, ties going to the smallest ``n``.
"""
import logging
import math
from dataclasses import dataclass, field

from .analytics import PathProfile, reliability_nc, residual_snc, reliability_uncoded
from .exceptions import DomainError, InfeasibleBudget

log = logging.getLogger(__name__)

# above this many candidates the default search switches to ternary
EXHAUSTIVE_LIMIT = 512


def _check(k, n, m):
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")


def beta_enc(k, n, m):
    """Encoding operations: ``(n-k) k m`` products plus ``(n-k)(k-1) m`` sums."""
    _check(k, n, m)
    return (n - k) * m * (2 * k - 1)


def beta_dec(k, n, m):
    """Decoding operations, modelled as ``2 n k (k+m)``.

    Each of up to ``n`` processed packets is eliminated against up to ``k``
    pivots at ``k+m`` products and ``k+m`` sums.
    """
    _check(k, n, m)
    return 2 * n * k * (k + m)


@dataclass(frozen=True)
class NodeCosts:
    beta_s: int
    beta_r: int
    beta_d: int


@dataclass(frozen=True)
class ComplexityModel:
    """Swappable per-node cost model; defaults to :func:`beta_enc` / :func:`beta_dec`."""

    enc: object = beta_enc
    dec: object = beta_dec

    def node_costs(self, k, n, m):
        e = self.enc(k, n, m)
        d = self.dec(k, n, m)
        return NodeCosts(beta_s=e, beta_r=e + d, beta_d=d)


DEFAULT_MODEL = ComplexityModel()

# reference budgets for k=50, m=100: relay cost at n=61 and n=64
BETA0_LOW = DEFAULT_MODEL.node_costs(50, 61, 100).beta_r
BETA0_HIGH = DEFAULT_MODEL.node_costs(50, 64, 100).beta_r


def node_costs(k, n, m, model=DEFAULT_MODEL):
    """Source, relay and sink costs at block length ``n``."""
    return model.node_costs(k, n, m)


@dataclass(frozen=True)
class ComplexityBudget:
    beta0: float

    def __post_init__(self):
        if not self.beta0 > 0:
            raise DomainError(f"beta0 must be positive, got {self.beta0}")


def _budget(budget):
    return budget if isinstance(budget, ComplexityBudget) else ComplexityBudget(budget)


def _path(path):
    return path if isinstance(path, PathProfile) else PathProfile(path)


@dataclass(frozen=True)
class UtilityPoint:
    n: int
    r: float
    rho_pred: float
    utility: float
    beta_s: int
    beta_r: int
    beta_d: int
    feasible: bool
    target_met: bool


def utility(k, n, m, q, path, rho0, beta0=math.inf, model=DEFAULT_MODEL):
    """Evaluate one candidate block length.

    :param path: per-hop erasure rates or a :class:`PathProfile`.
    :param beta0: per-node budget used for the ``feasible`` flag.
    :raises DomainError: for ``n == k`` (no coding cost to divide by).
    """
    if n <= k:
        raise DomainError(f"utility needs n > k, got k={k}, n={n}")
    if not 0.0 <= rho0 <= 1.0:
        raise DomainError(f"rho0 must lie in [0, 1], got {rho0}")
    c = model.node_costs(k, n, m)
    rho = reliability_nc(k, n, q, _path(path))
    u = (rho - rho0) / c.beta_s if c.beta_s > 0 else math.nan
    feasible = c.beta_d <= beta0 and c.beta_r <= beta0
    return UtilityPoint(n, k / n, rho, u, c.beta_s, c.beta_r, c.beta_d, feasible, rho >= rho0)


def max_feasible_n(k, m, budget, model=DEFAULT_MODEL):
    """Largest ``n`` whose relay and sink costs fit ``budget`` (``k`` if none)."""
    beta0 = _budget(budget).beta0
    ok = lambda n: max(model.node_costs(k, n, m).beta_r, model.node_costs(k, n, m).beta_d) <= beta0
    if not ok(k + 1):
        return k
    lo, hi = k + 1, k + 2
    while ok(hi):
        lo, hi = hi, 2 * hi
    # costs increase with n, so bisect the boundary
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def candidates(k, m, budget, model=DEFAULT_MODEL):
    n_max = max_feasible_n(k, m, budget, model)
    if n_max <= k:
        raise InfeasibleBudget(
            f"beta0={_budget(budget).beta0} is below the cost of n={k + 1} for k={k}, m={m}"
        )
    return range(k + 1, n_max + 1)


def is_quasi_concave(values):
    """True when ``values`` never rise again after falling."""
    falling = False
    for a, b in zip(values, values[1:]):
        if b < a:
            falling = True
        elif b > a and falling:
            return False
    return True


def _score(pt, any_met):
    # target met somewhere: rank by utility; otherwise by predicted reliability
    return pt.utility if any_met else pt.rho_pred


def _exhaustive(points):
    any_met = any(p.target_met for p in points)
    best = points[0]
    for p in points[1:]:
        if _score(p, any_met) > _score(best, any_met):
            best = p
    return best


def ternary_search(f, lo, hi):
    """Argmax of ``f`` over integers ``lo..hi`` assuming quasi-concavity.

    ``f`` values are compared as ``(f(n), -n)`` so ties favour small ``n``.
    """
    key = lambda n: (f(n), -n)
    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if key(m1) < key(m2):
            lo = m1 + 1
        else:
            hi = m2
    return max(range(lo, hi + 1), key=key)


def scan(k, m, q, path, rho0, budget, model=DEFAULT_MODEL):
    """Every feasible candidate, in increasing ``n``."""
    beta0 = _budget(budget).beta0
    path = _path(path)
    return [utility(k, n, m, q, path, rho0, beta0, model) for n in candidates(k, m, budget, model)]


def optimize_rate(k, m, q, path, rho0, budget, method="auto", model=DEFAULT_MODEL):
    """Best feasible block length for ``path`` under a per-node budget.

    Returns the utility maximiser when some candidate meets ``rho0``,
    otherwise the most reliable candidate with ``target_met=False``.

    :param method: ``"exhaustive"``, ``"ternary"`` or ``"auto"`` (exhaustive
        up to :data:`EXHAUSTIVE_LIMIT` candidates).
    :raises InfeasibleBudget: when even ``n = k+1`` exceeds the budget.
    """
    if method not in ("auto", "exhaustive", "ternary"):
        raise ValueError(f"unknown method {method!r}")
    beta0 = _budget(budget).beta0
    path = _path(path)
    cand = candidates(k, m, budget, model)
    if method == "exhaustive" or (method == "auto" and len(cand) <= EXHAUSTIVE_LIMIT):
        return _exhaustive([utility(k, n, m, q, path, rho0, beta0, model) for n in cand])

    cache = {}

    def pt(n):
        if n not in cache:
            cache[n] = utility(k, n, m, q, path, rho0, beta0, model)
        return cache[n]

    # reliability grows with n, so the target is met somewhere iff at n_max
    any_met = pt(cand[-1]).target_met
    n = ternary_search(lambda n: _score(pt(n), any_met), cand[0], cand[-1])
    return pt(n)


def optimize_checked(k, m, q, path, rho0, budget, model=DEFAULT_MODEL):
    """Ternary search cross-checked against the full scan.

    :returns: ``(point, quasi_concave)``; the exhaustive answer is returned
        whenever the utility sequence is not quasi-concave.
    """
    points = scan(k, m, q, path, rho0, budget, model)
    any_met = any(p.target_met for p in points)
    qc = is_quasi_concave([_score(p, any_met) for p in points])
    best = _exhaustive(points)
    if not qc:
        log.warning("utility not quasi-concave for k=%d m=%d q=%d path=%s; using full scan", k, m, q, tuple(_path(path)))
        return best, False
    return optimize_rate(k, m, q, path, rho0, budget, method="ternary", model=model), True


@dataclass(frozen=True)
class OperativeRange:
    n_opt: int
    u_max: float
    u_min: float
    acceptable: tuple
    best: UtilityPoint

    def activate(self, u_accept=None):
        """Whether the service should switch coding on.

        :param u_accept: smallest utility the caller accepts; ``None`` only
            requires the acceptable set to be nonempty.
        """
        if not self.acceptable:
            return False
        return u_accept is None or self.u_max >= u_accept


def operative_range(k, m, q, path, rho0, budget, u_min=None, model=DEFAULT_MODEL):
    """Maximal utility and the set of acceptable ``(n, utility)`` points.

    :param u_min: floor override; by default the smallest utility among
        feasible candidates that still meet ``rho0``.
    """
    points = scan(k, m, q, path, rho0, budget, model)
    best = _exhaustive(points)
    met = [p for p in points if p.target_met]
    if not met:
        return OperativeRange(best.n, best.utility, math.nan, (), best)
    floor = min(p.utility for p in met) if u_min is None else u_min
    acceptable = tuple((p.n, p.utility) for p in met if floor <= p.utility <= best.utility)
    return OperativeRange(best.n, best.utility, floor, acceptable, best)


@dataclass(frozen=True)
class ConnectivityResult:
    h_nc: int
    h_unc: int
    gamma: float
    undefined_flag: bool
    n_at_h_nc: int = None


def uncoded_horizon(eps, rho0):
    """Deepest ``h`` with ``(1-eps)^h >= rho0`` (0 when one hop already fails)."""
    if not 0.0 <= eps <= 1.0 or not 0.0 < rho0 <= 1.0:
        raise DomainError(f"need eps in [0, 1] and rho0 in (0, 1], got {eps}, {rho0}")
    h = 0
    rho = 1.0
    while True:
        rho *= 1.0 - eps
        if rho < rho0 or h > 10**6:
            return h
        h += 1


def _horizon(eta, rho0, h_max):
    # deepest h <= h_max with (1 - eta)^h >= rho0
    if eta <= 0.0:
        return h_max
    if eta >= 1.0:
        return 0
    h = int(math.floor(math.log(rho0) / math.log1p(-eta)))
    # guard the floor against rounding at exact boundaries
    while h + 1 <= h_max and (1.0 - eta) ** (h + 1) >= rho0:
        h += 1
    while h > 0 and (1.0 - eta) ** h < rho0:
        h -= 1
    return max(0, min(h, h_max))


def coded_horizon(k, m, q, eps, rho0, budget, h_max, model=DEFAULT_MODEL):
    """Deepest ``h <= h_max`` at which :func:`optimize_rate` meets ``rho0``.

    With a uniform path the best reliability at depth ``h`` is
    ``max_n (1 - eta_n)^h``, so the horizon is the largest per-``n`` horizon.

    :returns: ``(h, n)`` with the block length achieving it.
    """
    best = (0, None)
    for n in candidates(k, m, budget, model):
        h = _horizon(residual_snc(k, n, q, eps), rho0, h_max)
        if h > best[0]:
            best = (h, n)
    return best


def connectivity(k, m, q, eps, rho0, budget, h_max=10000, model=DEFAULT_MODEL):
    """Hop horizons with and without coding and their ratio ``gamma``."""
    h_unc = uncoded_horizon(eps, rho0)
    h_nc, n_best = coded_horizon(k, m, q, eps, rho0, budget, h_max, model)
    if h_unc == 0:
        return ConnectivityResult(h_nc, 0, math.nan, True, n_best)
    return ConnectivityResult(h_nc, h_unc, h_nc / h_unc, False, n_best)


def nc_beats_uncoded(point, path):
    """Reliability of a chosen point compared with sending uncoded."""
    return point.rho_pred >= reliability_uncoded(_path(path))
