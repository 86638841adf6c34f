"""Lifted random-matrix subspace coding for non-coherent transmission.

The source sends the rows of ``[Gs | Gs X]`` where ``Gs = [I_k ; H]`` is
``n x k``. Any invertible in-network mixing of those rows leaves the row
space unchanged, so reducing the received rows to RREF recovers ``X``.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import DecodeIncomplete, DomainError, ShapeError
from .gf import FieldMatrix, ReductionState, mat_mul, random_matrix
from .snc import CodedPacket


@dataclass
class LiftedGenerator:
    """Random block ``H`` ((n-k) x k) of the lifted encoder ``Gs = [I_k ; H]``."""

    H: FieldMatrix

    @classmethod
    def random(cls, k, n, field, rng):
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        return cls(random_matrix(n - k, k, field, rng))

    @property
    def k(self):
        return self.H.cols

    @property
    def n(self):
        return self.H.rows + self.H.cols

    @property
    def Gs(self):
        eye = np.eye(self.k, dtype=np.uint8)
        return FieldMatrix(np.vstack([eye, self.H.data]), self.H.field)


def subspace_encode(X, gen):
    """Rows of ``[Gs | Gs X]`` as packets (header = row of ``Gs``).

    :param X: ``k x m`` data matrix, one packet per row.
    """
    if X.rows != gen.k:
        raise ShapeError(f"X has {X.rows} rows, generator expects k={gen.k}")
    if X.field != gen.H.field:
        raise ShapeError("data and generator use different fields")
    Gs = gen.Gs
    Y = mat_mul(Gs, X)
    q = X.field.q
    return [CodedPacket(i, Gs.data[i].tobytes(), Y.data[i].tobytes(), q) for i in range(gen.n)]


def transmit_matrix(packets, field):
    """Stack packets into the ``n x (k+m)`` matrix ``[headers | payloads]``."""
    rows = [np.frombuffer(p.coeffs + p.payload, dtype=np.uint8) for p in packets]
    return FieldMatrix(np.array(rows, dtype=np.uint8), field)


def mix(packets, M, k):
    """Apply an ``l x n`` mixing matrix to the transmitted rows."""
    field = M.field
    Y = mat_mul(M, transmit_matrix(packets, field))
    return [
        CodedPacket(i, Y.data[i, :k].tobytes(), Y.data[i, k:].tobytes(), field.q)
        for i in range(Y.rows)
    ]


def subspace_decode(packets, k, m, field):
    """Progressive Gauss-Jordan on the received rows.

    :returns: ``k x m`` matrix ``X``.
    :raises DecodeIncomplete: when the header block has rank below ``k``.
    """
    state = ReductionState(k, m, field)
    for p in packets:
        if state.complete:
            break
        state.insert(p.coeffs, p.payload)
    if not state.complete:
        raise DecodeIncomplete(state.rank, k)
    return state.solution().T


def singleton_bound(q, n, m, d):
    """Rank-metric Singleton bound ``q ** (max(n, m) * (min(n, m) - d + 1))``.

    ``q`` is the field size. The result is an exact Python integer.
    """
    if not 1 <= d <= min(n, m):
        raise DomainError(f"need 1 <= d <= min(n, m) = {min(n, m)}, got d={d}")
    return q ** (max(n, m) * (min(n, m) - d + 1))
