import cmath
import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfveil.analysis import (BIAS_MU_DEG, EstimatorTheoryInput, bias_curves, bias_sq, empirical_estimator_stats,
                             estimator_mse, estimator_variance, mcrb, mcrb_bounds, mse, mse_curves)
from rfveil.obfuscation import DistributionSpec

FIXTURES = Path(__file__).parent / "fixtures"


def expanded_mse(h_sq, sigma2, xi2, mu, N):
    """MSE written term by term with the complex cross terms kept separate."""
    a = h_sq / N + h_sq * math.exp(-xi2) - h_sq * math.exp(-xi2) / N + sigma2 / N
    cross = h_sq * math.exp(-xi2 / 2) * (cmath.exp(1j * mu) + cmath.exp(-1j * mu))
    val = a - cross + h_sq
    assert abs(val.imag) < 1e-12
    return val.real


# --- closed forms ---------------------------------------------------------

def test_mcrb_examples():
    assert mcrb(1.0, 100) == 0.01
    assert mcrb(0.0, 7) == 0.0
    for n in (1, 3, 50, 1000):
        assert mcrb(0.7, 2 * n) * 2 == mcrb(0.7, n)


def test_bias_examples():
    assert bias_sq(1.0, 0.0, 0.0) == 0.0
    assert bias_sq(1.0, 1.0, 0.0) == pytest.approx((1 - math.exp(-0.5)) ** 2, rel=1e-14)
    assert bias_sq(1.0, 1.0, 0.0) == pytest.approx(0.15482, abs=1e-5)
    assert bias_sq(1.0, 1e-12, math.pi) == pytest.approx(4.0, abs=1e-9)


def test_variance_examples():
    for n in (1, 10, 100):
        assert estimator_variance(2.0, 0.3, 0.0, n) == pytest.approx(mcrb(0.3, n), rel=1e-15)
    assert estimator_variance(1.0, 1.0, 50.0, 10) == pytest.approx(2 / 10, rel=1e-12)
    assert estimator_variance(1.0, 1.0, 1.0, 100) == pytest.approx((1 - math.exp(-1) + 1) / 100, rel=1e-15)
    assert estimator_variance(1.0, 1.0, 1.0, 100) == pytest.approx(0.016321, abs=1e-6)


def test_mse_examples():
    assert estimator_mse(EstimatorTheoryInput(1.0, 0.5, 0.0, 0.0, 20)) == pytest.approx(0.5 / 20, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 5), st.floats(-2 * math.pi, 2 * math.pi),
       st.integers(1, 10_000))
def test_mse_matches_expanded_form(h_sq, sigma2, xi2, mu, N):
    got = estimator_mse(EstimatorTheoryInput(h_sq, sigma2, xi2, mu, N))
    assert got == pytest.approx(expanded_mse(h_sq, sigma2, xi2, mu, N), abs=1e-12, rel=1e-12)
    assert got >= estimator_variance(h_sq, sigma2, xi2, N) - 1e-15
    assert mse(h_sq, sigma2, xi2, mu, N) == got


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 10), st.floats(0, 5), st.floats(-math.pi, math.pi))
def test_bias_ordering(h_sq, xi2, mu):
    assert bias_sq(h_sq, xi2, 0.0) <= bias_sq(h_sq, xi2, mu) + 1e-12


def test_input_validation():
    with pytest.raises(ValueError):
        EstimatorTheoryInput(1.0, 1.0, 1.0, 0.0, 0)
    with pytest.raises(ValueError):
        EstimatorTheoryInput(-1.0, 1.0, 1.0, 0.0, 1)
    with pytest.raises(ValueError):
        EstimatorTheoryInput(1.0, float("nan"), 1.0, 0.0, 1)


def test_mcrb_bounds():
    m, p, z = mcrb_bounds(1.0, 1.0, 0.5, 50)
    assert m == 0.01 and p == m
    m, p, z = mcrb_bounds(2.0, 1.0, 1e12, 50)
    assert z == pytest.approx(p, rel=1e-9)
    assert mcrb_bounds(1.0, 1.0, 1.0, 10)[2] == pytest.approx(1 / (2 * 10 + 10), rel=1e-15)
    with pytest.raises(ValueError):
        mcrb_bounds(0.0, 1.0, 1.0, 10)


# --- curves ---------------------------------------------------------------

def test_bias_curves_golden():
    with open(FIXTURES / "bias_curves.csv") as fh:
        gold = [(float(r["xi2"]), r["series"], float(r["bias_sq"])) for r in csv.DictReader(fh)]
    got = bias_curves([i / 100 for i in range(101)])
    assert [(x, s) for x, s, _ in got] == [(x, s) for x, s, _ in gold]
    np.testing.assert_allclose([v for *_, v in got], [v for *_, v in gold], rtol=1e-12, atol=1e-15)
    assert len({s for _, s, _ in got}) == len(BIAS_MU_DEG)


def test_mse_curves_mcrb_exact():
    rows = mse_curves(range(1, 101))
    for n, series, v in rows:
        if series == "mcrb":
            assert v == 1.0 / n


# --- Monte Carlo ----------------------------------------------------------

def test_empirical_degenerate_is_exact():
    st_ = empirical_estimator_stats(0.8 + 0.3j, 0.0, DistributionSpec("gaussian", 0.0), 10, 100)
    assert st_.bias_sq == 0.0 and st_.variance == 0.0 and st_.mse == 0.0


def test_empirical_needs_trials():
    with pytest.raises(ValueError):
        empirical_estimator_stats(1.0, 1.0, DistributionSpec("gaussian", 0.1), 10, 99)


def test_empirical_variance_legitimate():
    st_ = empirical_estimator_stats(1.0, 1.0, DistributionSpec("gaussian", 1.0), 100, 10_000, seed=1)
    assert st_.variance == pytest.approx(estimator_variance(1.0, 1.0, 1.0, 100), rel=0.1)


def test_empirical_bias_shifted():
    st_ = empirical_estimator_stats(1.0, 1.0, DistributionSpec("gaussian", 0.4, 30.0), 100, 10_000, seed=2)
    assert st_.bias_sq == pytest.approx(bias_sq(1.0, 0.4, math.radians(30)), rel=0.1)


def test_empirical_mse_close_to_theory_small_variance():
    st_ = empirical_estimator_stats(1.0, 1.0, DistributionSpec("gaussian", 0.1), 100, 10_000, seed=3)
    assert st_.mse == pytest.approx(mse(1.0, 1.0, 0.1, 0.0, 100), rel=0.1)


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_mcrb_lower_bounds_empirical_mse(N):
    st_ = empirical_estimator_stats(1.0, 1.0, DistributionSpec("gaussian", 0.1), N, 2000, seed=N)
    assert st_.mse >= 0.95 * mcrb(1.0, N)


def test_empirical_other_kinds_match_their_rotation():
    """Non-gaussian laws: bias follows |E[e^{jZ}] - 1|^2, not the gaussian closed form."""
    from rfveil.obfuscation import expected_rotation
    spec = DistributionSpec("uniform", 1.0)
    st_ = empirical_estimator_stats(1.0, 0.1, spec, 50, 10_000, seed=4)
    assert st_.bias_sq == pytest.approx(abs(expected_rotation(spec) - 1) ** 2, rel=0.05)
