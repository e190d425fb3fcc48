import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distlearn.core import FamilySpec, from_family, make_sample_set, sample
from distlearn.estimators import EMPIRICAL, EstimatorKind, add_constant, empirical, estimate
from distlearn.metrics import kl_divergence, total_variation
from distlearn.utils import InvalidParam, OutOfDomain

def test_empirical():
    s = make_sample_set([1, 2, 2, 3])
    assert empirical(s, 3).pmf.tolist() == [0.25, 0.5, 0.25]
    assert empirical(s, 5).pmf.tolist() == [0.25, 0.5, 0.25, 0.0, 0.0]
    assert empirical(make_sample_set([1, 1, 1]), 1).pmf.tolist() == [1.0]

def test_add_constant():
    s = make_sample_set([1, 1, 2])
    assert add_constant(s, 3, 1.0).pmf.tolist() == pytest.approx([3 / 6, 2 / 6, 1 / 6])
    assert add_constant(s, 3, 0.5).pmf.tolist() == pytest.approx([2.5 / 4.5, 1.5 / 4.5, 0.5 / 4.5])
    assert min(add_constant(make_sample_set([1]), 100, 1e-3).pmf.tolist()) > 0

def test_out_of_domain():
    s = make_sample_set([1, 4])
    with pytest.raises(OutOfDomain, match=r"Sample 4"):
        empirical(s, 3)
    with pytest.raises(OutOfDomain):
        add_constant(s, 3, 1.0)

def test_invalid_constant():
    s = make_sample_set([1])
    with pytest.raises(InvalidParam):
        add_constant(s, 2, 0.0)
    with pytest.raises(InvalidParam):
        add_constant(s, 2, -1.0)
    with pytest.raises(InvalidParam):
        EstimatorKind("add-constant", 0.0)
    with pytest.raises(InvalidParam):
        EstimatorKind("add-constant")

def test_estimator_kind_parse():
    assert EstimatorKind.parse("empirical") == EMPIRICAL
    assert EstimatorKind.parse("add-constant:1") == EstimatorKind("add-constant", 1.0)
    assert str(EstimatorKind.parse("add-constant:0.5")) == "add-constant:0.5"
    assert str(EMPIRICAL) == "empirical"
    for text in ("add-constant", "add-constant:", "add-constant:x", "add-constant:-1", "laplace", ""):
        with pytest.raises(InvalidParam):
            EstimatorKind.parse(text)

def test_estimate_dispatch():
    s = make_sample_set([1, 2])
    assert estimate(EMPIRICAL, s, 2) == empirical(s, 2)
    assert estimate(EstimatorKind("add-constant", 1.0), s, 2) == add_constant(s, 2, 1.0)

def test_empirical_converges():
    p = from_family(FamilySpec("zipf", 5, {"exponent": 1.0}))
    p_hat = empirical(sample(p, 200_000, 5), 5)
    assert p_hat.pmf.tolist() == pytest.approx(p.pmf.tolist(), abs=5e-3)

@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=10), min_size=1, max_size=50),
       st.floats(min_value=1e-3, max_value=10.0))
def test_estimates_are_distributions(samples, c):
    s = make_sample_set(samples, k=10)
    for p_hat in (empirical(s, 10), add_constant(s, 10, c)):
        assert p_hat.k == 10
        assert math.isclose(math.fsum(p_hat.pmf.tolist()), 1.0, abs_tol=1e-12)
    assert all(x > 0 for x in add_constant(s, 10, c).pmf.tolist())
    assert empirical(s, 10).pmf.tolist() == pytest.approx([samples.count(i) / len(samples) for i in range(1, 11)])

@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=20), min_size=1, max_size=100))
def test_tiny_constant_is_close_to_empirical(samples):
    s = make_sample_set(samples, k=20)
    smoothed, plain = add_constant(s, 20, 1e-12).pmf, empirical(s, 20).pmf
    assert float(np.max(np.abs(smoothed - plain))) < 1e-10

@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=50), st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=2**32))
def test_kl_to_add_constant_estimate_is_finite(k, n, seed):
    p = from_family(FamilySpec("dirichlet", k, {"concentration": 0.3}, seed))
    p_hat = add_constant(sample(p, n, seed), k, 0.5)
    assert math.isfinite(kl_divergence(p, p_hat))

def test_empirical_is_consistent():
    p = from_family(FamilySpec("uniform", 10))
    errors = [total_variation(p, empirical(sample(p, n, 42), 10)) for n in (1_000, 10_000, 100_000)]
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] < 0.02
