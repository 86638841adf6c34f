"""Arithmetic and dense linear algebra over GF(2^q), 1 <= q <= 8.

Every field is built from a fixed primitive polynomial so results are
bit-exact across runs and platforms:

====  ==========================  =======
q     polynomial                  value
====  ==========================  =======
1     x + 1                       0x3
2     x^2 + x + 1                 0x7
3     x^3 + x + 1                 0xB
4     x^4 + x + 1                 0x13
5     x^5 + x^2 + 1               0x25
6     x^6 + x + 1                 0x43
7     x^7 + x^3 + 1               0x89
8     x^8 + x^4 + x^3 + x^2 + 1   0x11D
====  ==========================  =======

Symbols are stored as ``uint8``. Matrices are numpy arrays wrapped in
:class:`FieldMatrix`; the progressive decoder keeps its rows as ``bytes``
so that row scaling is a single ``bytes.translate`` call.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import prod

import numpy as np

from .exceptions import ShapeError

PRIMITIVE_POLYS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
}


class GaloisField:
    """GF(2^q) with exp/log tables and a full multiplication table.

    :param q: field exponent, the field has ``2**q`` elements.
    """

    def __init__(self, q):
        if q not in PRIMITIVE_POLYS:
            raise ValueError(f"field exponent must be in 1..8, got {q}")
        self.q = q
        self.poly = PRIMITIVE_POLYS[q]
        self.size = 1 << q
        order = self.size - 1

        exp = np.zeros(2 * order, dtype=np.int64)
        log = np.zeros(self.size, dtype=np.int64)
        x = 1
        for i in range(order):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.size:
                x ^= self.poly
        # x+1 reduces x to 1, so GF(2) needs no primitivity check
        if q > 1 and len(set(exp[:order].tolist())) != order:
            raise ValueError(f"polynomial {self.poly:#x} is not primitive")
        exp[order:] = exp[:order]
        self.exp = exp
        self.log = log

        a = np.arange(self.size)
        nz = a[1:]
        mul = np.zeros((self.size, self.size), dtype=np.uint8)
        mul[1:, 1:] = exp[log[nz][:, None] + log[nz][None, :]]
        self.mul_table = mul
        inv = np.zeros(self.size, dtype=np.uint8)
        inv[1:] = exp[(order - log[nz]) % order]
        self.inv_table = inv

        # 256-byte translate tables; entries >= size never occur in valid rows
        self._translate = []
        for c in range(self.size):
            t = np.zeros(256, dtype=np.uint8)
            t[: self.size] = mul[c]
            self._translate.append(t.tobytes())

    def __repr__(self):
        return f"GaloisField(q={self.q}, poly={self.poly:#x})"

    def __eq__(self, other):
        return isinstance(other, GaloisField) and other.q == self.q

    def __hash__(self):
        return hash(("GF", self.q))

    def __reduce__(self):
        return (get_field, (self.q,))

    def check(self, value):
        if not 0 <= value < self.size:
            raise ValueError(f"{value} is not an element of GF(2^{self.q})")
        return value

    def add(self, a, b):
        return a ^ b

    def mul(self, a, b):
        return int(self.mul_table[a, b])

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in GF(2^q)")
        return int(self.inv_table[a])

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e):
        if a == 0:
            return 1 if e == 0 else 0
        return int(self.exp[(int(self.log[a]) * e) % (self.size - 1)])

    def scale_bytes(self, row, c):
        """Multiply every symbol of a ``bytes`` row by ``c``."""
        return row.translate(self._translate[c])


@lru_cache(maxsize=None)
def get_field(q):
    """Return the shared :class:`GaloisField` instance for exponent ``q``."""
    return GaloisField(q)


def gf_mul(a, b, q):
    return get_field(q).mul(a, b)


def gf_inv(a, q):
    return get_field(q).inv(a)


@dataclass(eq=False)
class FieldMatrix:
    """Dense matrix of GF(2^q) symbols."""

    data: np.ndarray
    field: GaloisField

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ShapeError(f"FieldMatrix needs 2-D data, got ndim={data.ndim}")
        if data.size and (data.min() < 0 or data.max() >= self.field.size):
            raise ValueError(f"symbols out of range for GF(2^{self.field.q})")
        self.data = data.astype(np.uint8, copy=False)

    @classmethod
    def _trusted(cls, data, field):
        # skips range validation for data produced by field operations
        obj = object.__new__(cls)
        obj.data = data
        obj.field = field
        return obj

    @classmethod
    def from_rows(cls, rows, q):
        return cls(np.array(rows, dtype=np.int64).reshape(len(rows), -1), get_field(q))

    @classmethod
    def zeros(cls, rows, cols, field):
        return cls(np.zeros((rows, cols), dtype=np.uint8), field)

    @classmethod
    def identity(cls, n, field):
        return cls(np.eye(n, dtype=np.uint8), field)

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self):
        return FieldMatrix(self.data.T.copy(), self.field)

    def __matmul__(self, other):
        return mat_mul(self, other)

    def __add__(self, other):
        _same_field(self, other)
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        return FieldMatrix(self.data ^ other.data, self.field)

    def __eq__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.field == other.field and np.array_equal(self.data, other.data)

    def __getitem__(self, idx):
        out = self.data[idx]
        if np.ndim(out) == 2:
            return FieldMatrix(out.copy(), self.field)
        return out

    def tolist(self):
        return self.data.tolist()


def _same_field(a, b):
    if a.field != b.field:
        raise ShapeError(f"field mismatch: GF(2^{a.field.q}) vs GF(2^{b.field.q})")


def mat_mul(a, b):
    """Matrix product over the common field of ``a`` and ``b``."""
    _same_field(a, b)
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if a.rows == 0 or b.cols == 0 or a.cols == 0:
        return FieldMatrix.zeros(a.rows, b.cols, a.field)
    prods = a.field.mul_table[a.data[:, :, None], b.data[None, :, :]]
    return FieldMatrix._trusted(np.bitwise_xor.reduce(prods, axis=1), a.field)


def row_reduce(data, field, ncols=None):
    """Reduced row-echelon form of ``data`` over ``field``.

    Pivots are searched only in the first ``ncols`` columns (default all),
    which lets callers reduce an augmented matrix by its left block.

    :returns: ``(rref, pivot_columns)``
    """
    m = np.array(data, dtype=np.uint8, copy=True)
    rows, cols = m.shape
    ncols = cols if ncols is None else ncols
    mul = field.mul_table
    pivots = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = mul[field.inv_table[m[r, c]], m[r]]
        others = np.nonzero(m[:, c])[0]
        others = others[others != r]
        if others.size:
            m[others] ^= mul[m[others, c][:, None], m[r][None, :]]
        pivots.append(c)
        r += 1
    return m, pivots


def mat_rank(a):
    """Rank of a :class:`FieldMatrix`."""
    if a.rows == 0 or a.cols == 0:
        return 0
    return len(row_reduce(a.data, a.field)[1])


def mat_inverse(a):
    """Inverse by Gauss-Jordan elimination of ``[A | I]``.

    :raises ShapeError: when ``a`` is not square.
    :raises ZeroDivisionError: when ``a`` is singular.
    """
    if a.rows != a.cols:
        raise ShapeError(f"cannot invert a {a.shape} matrix")
    n = a.rows
    aug = np.hstack([a.data, np.eye(n, dtype=np.uint8)])
    red, pivots = row_reduce(aug, a.field, ncols=n)
    if len(pivots) < n:
        raise ZeroDivisionError("matrix is singular")
    return FieldMatrix(red[:, n:], a.field)


def random_symbols(shape, field, rng):
    """Uniform field symbols: the low ``q`` bits of ``rng.bytes``."""
    count = prod(shape) if isinstance(shape, tuple) else shape
    raw = np.frombuffer(rng.bytes(count), dtype=np.uint8)
    return (raw & (field.size - 1)).reshape(shape)


def random_matrix(rows, cols, field, rng):
    """Matrix of i.i.d. uniform symbols drawn from ``rng``."""
    return FieldMatrix._trusted(random_symbols((rows, cols), field, rng), field)


def _as_bytes(vec):
    if isinstance(vec, bytes):
        return vec
    return np.asarray(vec, dtype=np.uint8).tobytes()


def _xor(a, b):
    n = len(a)
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(n, "little")


class ReductionState:
    """Incremental Gauss-Jordan state for one generation.

    Stored rows are ``header || payload`` byte strings kept in reduced
    row-echelon form after every insertion, keyed by their pivot column.

    :param k: header length, i.e. target rank.
    :param m: payload length in symbols.
    :param field: the :class:`GaloisField` symbols live in.
    """

    def __init__(self, k, m, field):
        self.target_rank = k
        self.m = m
        self.field = field
        self.pivot_rows = {}
        self.ops = 0

    @property
    def rank(self):
        return len(self.pivot_rows)

    @property
    def complete(self):
        return self.rank == self.target_rank

    def insert(self, header, payload=b""):
        """Reduce one received packet into the state.

        :returns: True if the packet was innovative.
        """
        k = self.target_rank
        if type(header) is not bytes:
            header = _as_bytes(header)
        if type(payload) is not bytes:
            payload = _as_bytes(payload)
        if len(header) != k:
            raise ShapeError(f"header length {len(header)} != k={k}")
        if len(payload) != self.m:
            raise ShapeError(f"payload length {len(payload)} != m={self.m}")
        return self._push(header, payload)

    def _push(self, header, payload):
        # insert without argument validation; header and payload are bytes
        k = self.target_rank
        rows = self.pivot_rows
        if len(rows) == k:
            return False
        table = self.field._translate
        row = header + payload
        width = len(row)
        ops = 0

        lead = k - len(header.lstrip(b"\0"))
        if lead < k and lead not in rows and header.count(0) == k - 1:
            # single nonzero outside the pivot set: nothing to eliminate
            piv = lead
        else:
            acc = int.from_bytes(row, "little")
            for p, prow in rows.items():
                c = row[p]
                if c:
                    acc ^= int.from_bytes(prow.translate(table[c]), "little")
                    ops += 2 * width
            row = acc.to_bytes(width, "little")
            stripped = row[:k].lstrip(b"\0")
            if not stripped:
                self.ops += ops
                return False
            piv = k - len(stripped)

        c = row[piv]
        if c != 1:
            row = row.translate(table[self.field.inv(c)])
            ops += width
        for p, prow in rows.items():
            c = prow[piv]
            if c:
                rows[p] = _xor(prow, row.translate(table[c]))
                ops += 2 * width
        rows[piv] = row
        self.ops += ops
        return True

    def header_matrix(self):
        """Stored rows' coefficient block, ordered by pivot column."""
        k = self.target_rank
        rows = [np.frombuffer(self.pivot_rows[p][:k], dtype=np.uint8) for p in sorted(self.pivot_rows)]
        data = np.array(rows, dtype=np.uint8).reshape(len(rows), k)
        return FieldMatrix(data, self.field)

    def recovered(self):
        """Indices of source packets already isolated (unit-header rows)."""
        k = self.target_rank
        out = []
        for p, row in self.pivot_rows.items():
            if row[:k].count(0) == k - 1:
                out.append(p)
        return sorted(out)

    def solution(self):
        """Decoded data as an ``m x k`` matrix (column ``t`` is packet ``t``)."""
        if not self.complete:
            return None
        k = self.target_rank
        cols = [np.frombuffer(self.pivot_rows[t][k:], dtype=np.uint8) for t in range(k)]
        data = np.array(cols, dtype=np.uint8).reshape(k, self.m).T.copy()
        return FieldMatrix(data, self.field)


def progressive_insert(state, header, payload=b""):
    """Functional alias for :meth:`ReductionState.insert`."""
    return state.insert(header, payload)
