"""Systematic network coding: encoder, relay re-encoder, progressive decoder.

A generation ``S`` is an ``m x k`` matrix whose columns are the source
packets. The source sends ``X = S G`` with ``G = [I_k C]``; a two-hop relay
applies the erasure pattern ``D1`` and re-encoding matrix ``T``; the sink
sees ``Y = S G D1 T D2``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import ConsistencyError, DecodeIncomplete, ShapeError
from .gf import FieldMatrix, ReductionState, get_field, mat_mul, random_matrix, random_symbols


@dataclass(frozen=True)
class SncParams:
    """Generation geometry: ``k`` source packets sent in ``n`` slots of ``m`` symbols."""

    k: int
    n: int
    m: int = 1
    q: int = 8

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.m < 1:
            raise ValueError(f"need m >= 1, got {self.m}")
        get_field(self.q)

    @property
    def field(self):
        return get_field(self.q)

    @property
    def rate(self):
        return self.k / self.n


@dataclass(slots=True)
class CodedPacket:
    """Coefficient header plus payload, both as raw symbol bytes."""

    slot: int
    coeffs: bytes
    payload: bytes
    q: int = 8

    @property
    def k(self):
        return len(self.coeffs)

    @property
    def m(self):
        return len(self.payload)

    @property
    def is_null(self):
        return not any(self.coeffs)

    def coeff_array(self):
        return np.frombuffer(self.coeffs, dtype=np.uint8)

    def payload_array(self):
        return np.frombuffer(self.payload, dtype=np.uint8)


@dataclass
class GeneratorMatrix:
    """Redundancy block ``C`` (k x (n-k)) of the systematic generator ``G = [I_k C]``."""

    C: FieldMatrix

    @classmethod
    def random(cls, params, rng):
        return cls(random_matrix(params.k, params.n - params.k, params.field, rng))

    @property
    def k(self):
        return self.C.rows

    @property
    def n(self):
        return self.C.rows + self.C.cols

    @property
    def G(self):
        eye = np.eye(self.k, dtype=np.uint8)
        return FieldMatrix(np.hstack([eye, self.C.data]), self.C.field)


@dataclass
class ReencodeMatrix:
    """Relay operation ``T`` (n x n) together with the erasure mask it was built for."""

    T: FieldMatrix
    mask: np.ndarray


def random_generation(params, rng):
    """Uniformly random ``m x k`` data matrix."""
    return random_matrix(params.m, params.k, params.field, rng)


def encode(S, gen):
    """Systematic encoding of ``S`` into ``n`` coded packets.

    Packets ``0..k-1`` carry unit headers and the raw columns of ``S``;
    packets ``k..n-1`` carry the columns of ``C`` and ``S C``.
    """
    if S.cols != gen.k:
        raise ShapeError(f"generation has {S.cols} packets, generator expects k={gen.k}")
    if S.field != gen.C.field:
        raise ShapeError("generation and generator use different fields")
    k, q = gen.k, S.field.q
    units = _unit_headers(k)
    cols = np.ascontiguousarray(S.data.T)
    out = [CodedPacket(t, units[t], cols[t].tobytes(), q) for t in range(k)]
    if gen.n > k:
        Ct = np.ascontiguousarray(gen.C.data.T)
        coded = mat_mul(FieldMatrix._trusted(Ct, S.field), FieldMatrix._trusted(cols, S.field)).data
        out.extend(
            CodedPacket(k + j, Ct[j].tobytes(), coded[j].tobytes(), q) for j in range(gen.n - k)
        )
    return out


@lru_cache(maxsize=64)
def _unit_headers(k):
    eye = np.eye(k, dtype=np.uint8)
    return tuple(eye[t].tobytes() for t in range(k))


def _random_column(support, n, field, rng):
    col = np.zeros(n, dtype=np.uint8)
    if len(support) == 0:
        return col
    vals = random_symbols(len(support), field, rng)
    while not vals.any():
        vals = random_symbols(len(support), field, rng)
    col[support] = vals
    return col


def build_reencode_matrix(mask, params, rng):
    """Relay matrix ``T`` for a source-to-relay erasure pattern.

    Received systematic slots are forwarded (column ``e_t``). Lost systematic
    slots and every non-systematic slot get a random combination of the
    packets buffered before slot ``t``; an empty buffer yields a zero column.
    """
    mask = np.asarray(mask, dtype=bool)
    n, k = params.n, params.k
    if mask.shape != (n,):
        raise ShapeError(f"mask length {mask.size} != n={n}")
    field = params.field
    T = np.zeros((n, n), dtype=np.uint8)
    for t in range(n):
        if t < k and mask[t]:
            T[t, t] = 1
        else:
            support = np.flatnonzero(mask[:t])
            T[:, t] = _random_column(support, n, field, rng)
    return ReencodeMatrix(FieldMatrix(T, field), mask)


def _combine(packets, weights, k, m, field):
    head = np.zeros(k, dtype=np.uint8)
    body = np.zeros(m, dtype=np.uint8)
    mul = field.mul_table
    for pkt, w in zip(packets, weights):
        if w:
            head ^= mul[w, pkt.coeff_array()]
            body ^= mul[w, pkt.payload_array()]
    return head, body


def reencode(received, rt, params):
    """Apply the relay matrix to the packets that reached the relay.

    :param received: packets that survived the first hop (any iterable of
        :class:`CodedPacket`; their ``slot`` fields index rows of ``T``).
    :param rt: :class:`ReencodeMatrix` built for the same erasure mask.
    :param params: :class:`SncParams` of the generation.
    :returns: ``n`` packets, one per slot; slots the relay cannot fill are
        null (all-zero) packets.
    """
    T = rt.T.data
    n = T.shape[0]
    by_slot = {p.slot: p for p in received}
    slots = set(np.flatnonzero(rt.mask).tolist())
    if set(by_slot) != slots:
        raise ConsistencyError(f"received slots {sorted(by_slot)} do not match mask {sorted(slots)}")
    used = np.flatnonzero(T.any(axis=1))
    stray = [int(s) for s in used if s not in by_slot]
    if stray:
        raise ConsistencyError(f"T combines slots {stray} that never reached the relay")
    if n != params.n:
        raise ShapeError(f"T is {n}x{n} but n={params.n}")
    if not by_slot:
        return null_packets(params)
    field = rt.T.field
    k, m, q = params.k, params.m, params.q
    order = sorted(by_slot)
    pkts = [by_slot[s] for s in order]
    out = []
    for t in range(n):
        head, body = _combine(pkts, T[order, t], k, m, field)
        out.append(CodedPacket(t, head.tobytes(), body.tobytes(), q))
    return out


def null_packets(params):
    """``n`` all-zero packets (what a relay with an empty buffer emits)."""
    z_h = bytes(params.k)
    z_p = bytes(params.m)
    return [CodedPacket(t, z_h, z_p, params.q) for t in range(params.n)]


def decode_progressive(packets, params, state=None):
    """Feed packets into a :class:`ReductionState` and return it."""
    if state is None:
        state = ReductionState(params.k, params.m, params.field)
    for pkt in packets:
        if state.complete:
            break
        state.insert(pkt.coeffs, pkt.payload)
    return state


def decode(packets, params):
    """Recover the generation from received packets.

    :raises DecodeIncomplete: when fewer than ``k`` innovative packets arrived.
    """
    state = decode_progressive(packets, params)
    if not state.complete:
        raise DecodeIncomplete(state.rank, params.k)
    return state.solution()


def erasure_matrix(mask, field):
    """Diagonal 0/1 matrix for a per-slot received mask."""
    mask = np.asarray(mask, dtype=bool)
    return FieldMatrix(np.diag(mask.astype(np.uint8)), field)


def loc_transfer(G, D1, T, D2):
    """Global coding matrix ``G H`` with ``H = D1 T D2``."""
    n = G.cols
    for name, M in (("D1", D1), ("T", T), ("D2", D2)):
        if M.shape != (n, n):
            raise ShapeError(f"{name} must be {n}x{n}, got {M.shape}")
    return mat_mul(mat_mul(mat_mul(G, D1), T), D2)
