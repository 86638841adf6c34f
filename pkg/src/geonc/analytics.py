"""Closed-form reliability and rate formulas.

``q`` arguments are field exponents (field size ``2**q``) except in
:func:`prob_full_rank`, which takes the field size itself.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from .exceptions import DomainError


def _check_prob(p, name="eps"):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {p}")


def _check_code(k, n):
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")


@dataclass(frozen=True)
class CodeOperatingPoint:
    k: int
    n: int
    q: int
    eps: float

    def __post_init__(self):
        _check_code(self.k, self.n)
        _check_prob(self.eps)
        if self.q < 1:
            raise DomainError(f"q must be >= 1, got {self.q}")

    @property
    def rate(self):
        return self.k / self.n

    @property
    def eta(self):
        return residual_snc(self.k, self.n, self.q, self.eps)


@dataclass(frozen=True)
class PathProfile:
    """Per-hop erasure probabilities along a line path."""

    eps: tuple

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if not eps:
            raise DomainError("a path needs at least one hop")
        for e in eps:
            _check_prob(e)
        object.__setattr__(self, "eps", eps)

    @property
    def hops(self):
        return len(self.eps)

    def __iter__(self):
        return iter(self.eps)

    def __len__(self):
        return len(self.eps)


def pmf_alpha(j, v, p):
    """``C(v, j) (1-p)^j p^(v-j)``: probability that exactly ``j`` of ``v`` packets survive erasure rate ``p``."""
    if not 0 <= j <= v:
        raise DomainError(f"need 0 <= j <= v, got j={j}, v={v}")
    _check_prob(p, "p")
    return float(binom.pmf(j, v, 1.0 - p))


@lru_cache(maxsize=256)
def _rank_failure_weights(k, n, field_size):
    # w[l1, l2] = 1 - prod_{l3=0}^{k-l1-1} (1 - Q^(l3-l2)) for l2 >= k-l1, else 0
    w = np.zeros((k, n - k + 1))
    Q = float(field_size)
    for l1 in range(k):
        u = k - l1
        if u > n - k:
            continue
        l2 = np.arange(u, n - k + 1)[:, None]
        l3 = np.arange(u)[None, :]
        w[l1, u:] = -np.expm1(np.log1p(-(Q ** (l3 - l2))).sum(axis=1))
    w.setflags(write=False)
    return w


def residual_snc_vec(k, n, q, eps):
    """Vectorised :func:`residual_snc` over an array of erasure rates."""
    _check_code(k, n)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any((eps < 0) | (eps > 1)):
        raise DomainError("eps must lie in [0, 1]")
    surv = 1.0 - eps
    phi1 = binom.cdf(k - 1, n - 1, surv)
    a1 = binom.pmf(np.arange(k)[:, None], k, surv[None, :])
    a2 = binom.pmf(np.arange(n - k + 1)[:, None], n - k, surv[None, :])
    w = _rank_failure_weights(k, n, 2**q)
    phi2 = np.einsum("ie,ij,je->e", a1, w, a2)
    # over tiny fields phi1 + phi2 can exceed 1; it stands for a probability
    return eps * np.clip(phi1 + phi2, 0.0, 1.0)


@lru_cache(maxsize=65536)
def residual_snc(k, n, q, eps):
    """Residual erasure rate after systematic-NC decoding on one hop.

    ``eps * (phi1 + phi2)``: ``phi1`` is the chance that fewer than ``k`` of
    the other ``n-1`` slots arrive, ``phi2`` the chance that enough arrive
    but the received coded columns are rank deficient over GF(2^q).
    """
    _check_prob(eps)
    return float(residual_snc_vec(k, n, q, eps)[0])


def prob_full_rank(k, field_size):
    """Probability that a uniform ``k x k`` matrix over GF(field_size) is invertible."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if field_size < 2:
        raise DomainError(f"field size must be >= 2, got {field_size}")
    i = np.arange(1, k + 1, dtype=float)
    return float(np.exp(np.log1p(-(float(field_size) ** -i)).sum()))


def eta_subspace(k, n, q, eps):
    """Residual erasure rate of lifted random subspace coding on one link.

    ``eps * (P(lambda < k) + P(lambda >= k) * (1 - P(full rank)))`` where
    ``lambda`` counts surviving packets and the rank term does not depend
    on how many packets beyond ``k`` arrived.
    """
    _check_code(k, n)
    _check_prob(eps)
    surv = 1.0 - eps
    short = float(binom.cdf(k - 1, n, surv))
    rank_def = 1.0 - prob_full_rank(k, 2**q)
    return float(np.clip(eps * (short + (1.0 - short) * rank_def), 0.0, eps))


def achievable_rate(r, eta):
    """Decoded information per transmitted packet, ``r * (1 - eta)``."""
    if not 0.0 < r <= 1.0:
        raise DomainError(f"rate must lie in (0, 1], got {r}")
    _check_prob(eta, "eta")
    return r * (1.0 - eta)


def reliability_nc(k, n, q, path):
    """Packet delivery probability with per-hop decode and re-encode."""
    path = path if isinstance(path, PathProfile) else PathProfile(path)
    out = 1.0
    for e in path:
        out *= 1.0 - residual_snc(k, n, q, e)
    return out


def reliability_uncoded(path):
    """Packet delivery probability without coding, ``prod(1 - eps_i)``."""
    path = path if isinstance(path, PathProfile) else PathProfile(path)
    return float(np.prod([1.0 - e for e in path]))
