import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geonc.analytics import (
    CodeOperatingPoint,
    PathProfile,
    achievable_rate,
    eta_subspace,
    pmf_alpha,
    prob_full_rank,
    reliability_nc,
    reliability_uncoded,
    residual_snc,
    residual_snc_vec,
)
from geonc.exceptions import DomainError
from geonc.gf import FieldMatrix, get_field, mat_rank


def test_pmf_alpha_examples():
    assert pmf_alpha(3, 3, 0.0) == 1.0
    assert pmf_alpha(0, 3, 1.0) == 1.0
    assert pmf_alpha(2, 2, 0.1) == pytest.approx(0.81)
    assert sum(pmf_alpha(j, 7, 0.3) for j in range(8)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        pmf_alpha(4, 3, 0.1)


def test_residual_hand_value():
    # k=1, n=2: 0.5 * (0.5 + 0.25/256)
    assert residual_snc(1, 2, 8, 0.5) == pytest.approx(0.5 * (0.5 + 0.25 / 256), rel=1e-14)


def test_residual_frozen_values():
    assert residual_snc(20, 24, 8, 0.1) == pytest.approx(0.019324096045104492, rel=1e-12)
    assert residual_snc(20, 22, 8, 0.15) == pytest.approx(0.12686241301736664, rel=1e-12)
    assert residual_snc(50, 60, 8, 0.1) == pytest.approx(0.006674287807112646, rel=1e-12)


@pytest.mark.parametrize("k", [1, 5, 50])
def test_residual_uncoded_and_lossless(k):
    assert residual_snc(k, k, 8, 0.3) == pytest.approx(0.3)
    assert residual_snc(k, k + 3, 8, 0.0) == 0.0
    assert CodeOperatingPoint(k, k + 1, 8, 0.2).eta == residual_snc(k, k + 1, 8, 0.2)


def test_residual_bounded_and_monotone_on_grid():
    eps = np.array([0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    bad = []
    for q in (1, 4, 8):
        for k in (1, 2, 5, 10, 20, 40, 60):
            prev = None
            for n in range(k, min(90, int(1.5 * k) + 4) + 1):
                eta = residual_snc_vec(k, n, q, eps)
                assert np.all(eta <= eps + 1e-15)
                if prev is not None and np.any(eta > prev + 1e-12):
                    bad.append((q, k, n))
                prev = eta
    assert not bad, bad


def test_vectorised_matches_scalar():
    eps = [0.0, 0.12, 0.33, 1.0]
    v = residual_snc_vec(10, 14, 4, eps)
    assert v.tolist() == pytest.approx([residual_snc(10, 14, 4, e) for e in eps])


def enumerate_full_rank(k):
    f = get_field(1)
    hits = 0
    for bits in itertools.product((0, 1), repeat=k * k):
        hits += mat_rank(FieldMatrix(np.array(bits, np.uint8).reshape(k, k), f)) == k
    return hits / 2 ** (k * k)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_prob_full_rank_enumeration(k):
    assert prob_full_rank(k, 2) == pytest.approx(enumerate_full_rank(k), abs=1e-15)


def test_prob_full_rank_values():
    assert prob_full_rank(2, 2) == 0.375
    assert prob_full_rank(1, 2) == 0.5
    assert prob_full_rank(2, 256) == pytest.approx((1 - 1 / 256) * (1 - 1 / 65536))


def test_eta_subspace():
    assert eta_subspace(3, 5, 8, 0.0) == 0.0
    e = 0.3
    assert eta_subspace(1, 1, 8, e) == pytest.approx(e * (e + (1 - e) / 256))
    for k, n in ((2, 3), (4, 6), (8, 8)):
        assert eta_subspace(k, n, 1, 0.2) > eta_subspace(k, n, 8, 0.2)
        assert 0 <= eta_subspace(k, n, 8, 0.2) <= 0.2


def test_rates_and_reliability():
    assert achievable_rate(0.88, 0.05) == pytest.approx(0.836)
    assert achievable_rate(1.0, 0.2) == pytest.approx(0.8)
    assert reliability_uncoded((0.1, 0.1)) == pytest.approx(0.81)
    assert reliability_uncoded((0.0, 0.3)) == pytest.approx(0.7)
    eta = residual_snc(50, 60, 8, 0.1)
    assert reliability_nc(50, 60, 8, (0.1, 0.1)) == pytest.approx((1 - eta) ** 2)
    assert reliability_nc(5, 6, 8, (0.1, 1.0)) == 0.0
    with pytest.raises(DomainError):
        reliability_uncoded(())
    assert PathProfile([0.1, 0.2]).hops == 2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10), st.sampled_from([1, 2, 8]), st.floats(0, 1))
def test_residual_in_range(k, extra, q, e):
    eta = residual_snc(k, k + extra, q, e)
    assert 0.0 <= eta <= e + 1e-15
