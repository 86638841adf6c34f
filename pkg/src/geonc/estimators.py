"""scikit-learn style wrappers around the codec and the rate optimizer."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ShapeError
from .gf import FieldMatrix, get_field
from .optimizer import BETA0_LOW, optimize_rate
from .rng import make_rng
from .snc import CodedPacket, GeneratorMatrix, SncParams, decode, encode


class SystematicCoder(TransformerMixin, BaseEstimator):
    """Systematic encoder with a generator drawn at ``fit`` time.

    ``X`` holds one source packet per row (``k x m`` symbols). ``transform``
    returns the ``n`` coded rows as ``[header | payload]`` and
    ``inverse_transform`` decodes any subset of them with rank ``k``.

    :param n: block length.
    :param q: field exponent.
    :param seed: seed for the coding coefficients.
    """

    def __init__(self, n=8, q=8, seed=0):
        self.n = n
        self.q = q
        self.seed = seed

    def _check(self, X, k=None):
        X = check_array(X, dtype=np.int64)
        if X.min(initial=0) < 0 or X.max(initial=0) >= 1 << self.q:
            raise ValueError(f"symbols must lie in [0, {(1 << self.q) - 1}]")
        if k is not None and X.shape[0] != k:
            raise ShapeError(f"expected {k} source rows, got {X.shape[0]}")
        return X.astype(np.uint8)

    def fit(self, X, y=None):
        X = self._check(X)
        k, m = X.shape
        self.params_ = SncParams(k, self.n, m, self.q)
        self.generator_ = GeneratorMatrix.random(self.params_, make_rng(self.seed))
        self.n_features_in_ = m
        return self

    def transform(self, X):
        check_is_fitted(self, "generator_")
        p = self.params_
        X = self._check(X, p.k)
        if X.shape[1] != p.m:
            raise ShapeError(f"expected {p.m} symbols per packet, got {X.shape[1]}")
        S = FieldMatrix(X.T.copy(), get_field(self.q))
        pkts = encode(S, self.generator_)
        return np.array([np.frombuffer(pk.coeffs + pk.payload, dtype=np.uint8) for pk in pkts])

    def inverse_transform(self, Y):
        """Decode coded rows back to the ``k x m`` source block."""
        check_is_fitted(self, "generator_")
        p = self.params_
        Y = check_array(Y, dtype=np.uint8)
        if Y.shape[1] != p.k + p.m:
            raise ShapeError(f"coded rows need {p.k + p.m} columns, got {Y.shape[1]}")
        pkts = [CodedPacket(i, row[: p.k].tobytes(), row[p.k :].tobytes(), p.q) for i, row in enumerate(Y)]
        return decode(pkts, p).data.T.copy()


class RateOptimizer(BaseEstimator):
    """Chooses a block length per path; ``X`` rows are per-hop erasure rates.

    NaN entries pad shorter paths. ``fit`` only validates; the choice is a
    pure function of the row and the parameters.
    """

    def __init__(self, k=50, m=100, q=8, rho0=0.8, beta0=BETA0_LOW, method="auto"):
        self.k = k
        self.m = m
        self.q = q
        self.rho0 = rho0
        self.beta0 = beta0
        self.method = method

    def fit(self, X, y=None):
        X = check_array(X, ensure_all_finite="allow-nan")
        self.n_features_in_ = X.shape[1]
        return self

    def predict_points(self, X):
        X = check_array(X, ensure_all_finite="allow-nan")
        out = []
        for row in X:
            path = tuple(float(e) for e in row if not np.isnan(e))
            out.append(optimize_rate(self.k, self.m, self.q, path, self.rho0, self.beta0, self.method))
        return out

    def predict(self, X):
        return np.array([p.n for p in self.predict_points(X)])
