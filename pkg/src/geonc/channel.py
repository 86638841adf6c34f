"""Monte Carlo simulation of coded generations over erasure line networks.

Each trial draws its randomness from independent sub-streams keyed by the
trial seed: one stream per hop for erasures and one for the data and
coding coefficients. Erasure masks of a longer block extend those of a shorter
block and coefficient columns are drawn in slot order, so sweeps over
``eps`` or ``n`` with a common master seed share random numbers.
"""
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .exceptions import ConfigError
from .gf import FieldMatrix, ReductionState, random_symbols
from .rng import StreamPool, derive_trial_seed
from .snc import CodedPacket, SncParams, _unit_headers, build_reencode_matrix, encode, reencode
from .subspace import LiftedGenerator, subspace_encode

CODECS = ("systematic", "subspace")
RELAY_MODES = ("decode_reencode", "t_matrix")

# sub-stream tag passed to derive_trial_seed; hop i uses tag i
_CODE_STREAM = 1 << 32


@dataclass(frozen=True)
class ChannelScenario:
    """Line network of ``len(eps)`` erasure hops carrying one generation per trial.

    ``mixing`` makes every transmitter send uniformly random combinations
    of the rows it holds instead of its structured code (the fully
    non-coherent linear channel).
    """

    params: SncParams
    eps: tuple
    codec: str = "systematic"
    relay_mode: str = "decode_reencode"
    seed: int = 0
    mixing: bool = False

    def __post_init__(self):
        eps = tuple(float(e) for e in np.atleast_1d(self.eps))
        object.__setattr__(self, "eps", eps)
        if not eps:
            raise ConfigError("scenario needs at least one hop")
        if any(not 0.0 <= e <= 1.0 for e in eps):
            raise ConfigError(f"erasure probabilities must lie in [0, 1]: {eps}")
        if self.codec not in CODECS:
            raise ConfigError(f"codec must be one of {CODECS}, got {self.codec!r}")
        if self.relay_mode not in RELAY_MODES:
            raise ConfigError(f"relay_mode must be one of {RELAY_MODES}, got {self.relay_mode!r}")
        if self.relay_mode == "t_matrix" and len(eps) != 2:
            raise ConfigError("t_matrix relay mode models exactly two hops")

    @property
    def hops(self):
        return len(self.eps)


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    received_per_hop: tuple
    final_rank: int
    ops_count: int
    lost: int


@dataclass(frozen=True)
class McEstimate:
    trials: int
    mean: float
    stderr: float

    @classmethod
    def bernoulli(cls, hits, trials):
        p = hits / trials
        return cls(trials, p, sqrt(p * (1.0 - p) / trials))

    def within(self, value, n_sigma=3.0):
        return abs(self.mean - value) <= n_sigma * self.stderr


@dataclass
class TrialStats:
    """Integer-valued running sums; merging is exact, associative and commutative."""

    k: int
    trials: int = 0
    failures: int = 0
    lost: int = 0
    lost_sq: int = 0
    ops: int = 0
    outcomes: list = field(default_factory=list, repr=False)

    def add(self, out, keep=False):
        self.trials += 1
        self.failures += not out.success
        self.lost += out.lost
        self.lost_sq += out.lost * out.lost
        self.ops += out.ops_count
        if keep:
            self.outcomes.append(out)

    def merge(self, other):
        if other.k != self.k:
            raise ValueError("cannot merge statistics of different generation sizes")
        return TrialStats(
            self.k,
            self.trials + other.trials,
            self.failures + other.failures,
            self.lost + other.lost,
            self.lost_sq + other.lost_sq,
            self.ops + other.ops,
            self.outcomes + other.outcomes,
        )

    __add__ = merge

    @property
    def failure(self):
        """Per-generation decoding failure probability."""
        return McEstimate.bernoulli(self.failures, self.trials)

    @property
    def residual(self):
        """Fraction of source packets not recovered at the sink."""
        n, k = self.trials, self.k
        mean = self.lost / (n * k)
        var = max(self.lost_sq / (n * k * k) - mean * mean, 0.0)
        se = sqrt(var / (n - 1)) if n > 1 else 0.0
        return McEstimate(n, mean, se)

    @property
    def delivery(self):
        r = self.residual
        return McEstimate(r.trials, 1.0 - r.mean, r.stderr)

    @property
    def mean_ops(self):
        return self.ops / self.trials


def sample_erasure_mask(n, eps, rng):
    """Per-slot received flags, each slot surviving with probability ``1 - eps``."""
    return rng.random(n) >= eps


def _coef_columns(count, k, field, rng):
    # column-major draw: a longer block extends a shorter one
    return random_symbols((count, k), field, rng).T


def _mix(rows, n, field, rng):
    # n uniform combinations of the given (header, payload) rows
    live = [h + b for h, b in rows if h is not None]
    if not live:
        return [(None, None)] * n
    k = len(next(h for h, _ in rows if h is not None))
    mat = np.frombuffer(b"".join(live), dtype=np.uint8).reshape(len(live), -1)
    w = random_symbols((n, len(live)), field, rng)
    mixed = np.bitwise_xor.reduce(field.mul_table[w[:, :, None], mat[None, :, :]], axis=1)
    return [(mixed[t, :k].tobytes(), mixed[t, k:].tobytes()) for t in range(n)]


class _Node:
    """Transmitter encoding one generation into ``n`` (header, payload) rows."""

    def __init__(self, scn, coef_rng):
        self.scn = scn
        self.p = scn.params
        self.rng = coef_rng

    def encode(self, S):
        p = self.p
        field = p.field
        k = p.k
        Hc = _coef_columns(p.n - k, k, field, self.rng).T.copy()
        if self.scn.codec == "systematic":
            cols = np.ascontiguousarray(S.data.T)
            units = _unit_headers(k)
            rows = [(units[t], cols[t].tobytes()) for t in range(k)]
            if p.n > k:
                coded = np.bitwise_xor.reduce(field.mul_table[Hc[:, :, None], cols[None, :, :]], axis=1)
                rows.extend((Hc[j].tobytes(), coded[j].tobytes()) for j in range(p.n - k))
        else:
            pkts = subspace_encode(S.T, LiftedGenerator(FieldMatrix._trusted(Hc, field)))
            rows = [(pkt.coeffs, pkt.payload) for pkt in pkts]
        ops = (p.n - k) * p.m * (2 * k - 1)
        if self.scn.mixing:
            rows = _mix(rows, p.n, field, self.rng)
            ops += 2 * p.n * p.n * (k + p.m)
        return rows, ops


def _deliver(rows, mask):
    return [
        (t, h, b) for t, ((h, b), ok) in enumerate(zip(rows, mask)) if ok and h is not None and h.strip(b"\0")
    ]


def _lost(state, k):
    if state.complete:
        return 0
    return k - len(state.recovered())


def simulate_trial(scn, seed, pool=None):
    """Push one generation through every hop of the scenario.

    :param seed: trial seed (int) or a ``numpy`` Generator to draw it from.
    :param pool: optional :class:`StreamPool` to reuse generator objects.
    """
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(0, 2**63))
    if pool is None:
        pool = StreamPool(len(scn.eps) + 1)
    p = scn.params
    field = p.field
    masks = [
        sample_erasure_mask(p.n, e, pool.get(hop + 1, derive_trial_seed(seed, hop)))
        for hop, e in enumerate(scn.eps)
    ]
    # data first, then coefficients in slot order, from one stream
    coef_rng = pool.get(0, derive_trial_seed(seed, _CODE_STREAM))
    S = FieldMatrix._trusted(random_symbols((p.m, p.k), field, coef_rng), field)

    if scn.relay_mode == "t_matrix":
        return _two_hop_t_matrix(scn, S, masks, coef_rng)

    node = _Node(scn, coef_rng)
    rows, ops = node.encode(S)
    counts = []
    state = None
    last = len(masks) - 1
    for hop, mask in enumerate(masks):
        received = _deliver(rows, mask)
        counts.append(len(received))
        state = ReductionState(p.k, p.m, field)
        insert = state._push
        for _, h, b in received:
            if not insert(h, b) and state.complete:
                break
        ops += state.ops
        if hop == last:
            break
        if state.complete:
            rows, enc_ops = node.encode(state.solution())
            ops += enc_ops
        else:
            # undecodable relay forwards its buffer unchanged
            rows = [(None, None)] * p.n
            for t, h, b in received:
                rows[t] = (h, b)
    return TrialOutcome(state.complete, tuple(counts), state.rank, ops, _lost(state, p.k))


def _two_hop_t_matrix(scn, S, masks, coef_rng):
    p = scn.params
    node = _Node(scn, coef_rng)
    rows, ops = node.encode(S)
    d1, d2 = masks
    at_relay = [CodedPacket(t, h, b, p.q) for t, h, b in _deliver(rows, d1)]
    # slots holding a null row count as erased for T's construction
    held = np.zeros(p.n, dtype=bool)
    held[[pkt.slot for pkt in at_relay]] = True
    rt = build_reencode_matrix(held, p, coef_rng)
    relay_out = reencode(at_relay, rt, p)
    forwarded = int(np.count_nonzero(held[: p.k]))
    ops += 2 * (p.k + p.m) * (int(np.count_nonzero(rt.T.data)) - forwarded)
    at_sink = _deliver([(pkt.coeffs, pkt.payload) for pkt in relay_out], d2)
    state = ReductionState(p.k, p.m, p.field)
    for _, h, b in at_sink:
        if not state._push(h, b) and state.complete:
            break
    ops += state.ops
    counts = (len(at_relay), len(at_sink))
    return TrialOutcome(state.complete, counts, state.rank, ops, _lost(state, p.k))


def run_trials(scn, indices, keep=False):
    """Simulate the given trial indices of ``scn`` and return their sums."""
    stats = TrialStats(scn.params.k)
    pool = StreamPool(len(scn.eps) + 1)
    for i in indices:
        stats.add(simulate_trial(scn, derive_trial_seed(scn.seed, i), pool), keep=keep)
    return stats


def monte_carlo(scn, trials, keep=False):
    """Run trials ``0..trials-1`` of ``scn``.

    :returns: :class:`TrialStats`; ``.failure`` estimates the per-generation
        decoding failure probability and ``.residual`` the fraction of
        source packets still missing after decoding.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    return run_trials(scn, range(trials), keep=keep)
