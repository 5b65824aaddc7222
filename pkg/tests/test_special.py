import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from supbounds.special import log_gamma, log_normal_cdf, normal_cdf, normal_pdf, normal_sf

mp.mp.dps = 40


def mp_cdf(x):
    return float(mp.ncdf(x))


def test_cdf_at_zero():
    assert normal_cdf(0.0) == 0.5


def test_cdf_saturates():
    assert normal_cdf(40.0) == 1.0
    assert normal_cdf(-40.0) < 1e-300


def test_cdf_minus_two_against_mpmath():
    assert normal_cdf(-2.0) == pytest.approx(0.0227501319481792, rel=1e-13)
    assert normal_cdf(-2.0) == pytest.approx(mp_cdf(-2), rel=1e-13)


@pytest.mark.parametrize("x", np.linspace(-8, 8, 33))
def test_cdf_relative_accuracy(x):
    assert normal_cdf(x) == pytest.approx(mp_cdf(x), rel=1e-12)


def test_sf_and_pdf():
    assert normal_sf(3.0) == pytest.approx(float(mp.ncdf(-3)), rel=1e-13)
    assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_log_cdf_small_values():
    assert log_normal_cdf(0.0) == pytest.approx(math.log(0.5), rel=1e-15)
    assert log_normal_cdf(5.0) == pytest.approx(math.log(normal_cdf(5.0)), rel=1e-12)


def test_log_cdf_far_tail_against_asymptotic():
    x = -30.0
    val = log_normal_cdf(x)
    assert math.isfinite(val)
    # the leading Mills term alone is off by ~2e-6 relative here; keep two correction terms
    asym = -x * x / 2 - math.log(abs(x) * math.sqrt(2 * math.pi)) + math.log(1 - 1 / x**2 + 3 / x**4)
    assert val == pytest.approx(asym, rel=1e-6)
    assert val == pytest.approx(float(mp.log(mp.ncdf(x))), rel=1e-12)


def test_log_cdf_finite_down_to_minus_40():
    assert all(math.isfinite(log_normal_cdf(x)) for x in np.linspace(-40, 0, 81))


@given(st.floats(-8, 8))
def test_symmetry(x):
    assert abs(normal_cdf(x) + normal_cdf(-x) - 1) <= 1e-12


@given(st.floats(-8, 8))
def test_log_pair_consistency(x):
    lhs = log_normal_cdf(x) + log_normal_cdf(-x)
    assert lhs == pytest.approx(math.log(normal_cdf(x)) + math.log(normal_cdf(-x)), abs=1e-10)


def test_log_gamma_known_values():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)
    assert log_gamma(10.0) == pytest.approx(math.log(362880), rel=1e-14)


@pytest.mark.parametrize("x", [0.5, 0.7, 1.5, 3.3, 17.0, 99.5, 200.0])
def test_log_gamma_against_mpmath(x):
    assert log_gamma(x) == pytest.approx(float(mp.loggamma(x)), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_log_gamma_domain(x):
    with pytest.raises(ValueError):
        log_gamma(x)


@given(st.floats(0.5, 100))
def test_gamma_recurrence(x):
    assert abs(math.exp(log_gamma(x + 1) - log_gamma(x)) - x) <= 1e-9 * x


def test_stirling_ratio_tends_to_one():
    ratios = []
    for a in (0.05, 0.02, 0.01):
        z = 1 / a
        stirling = 0.5 * math.log(2 * math.pi) + (z - 0.5) * math.log(z) - z
        ratios.append(math.exp(log_gamma(z) - stirling))
    assert all(0.9 <= r <= 1.1 for r in ratios)
    assert abs(ratios[2] - 1) < abs(ratios[1] - 1) < abs(ratios[0] - 1)


def test_array_inputs():
    out = normal_cdf(np.array([0.0, 1.0]))
    assert isinstance(out, np.ndarray) and out.shape == (2,)
