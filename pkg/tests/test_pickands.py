import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from supbounds.pickands import (
    CURVE_BASE,
    CURVE_HEADER,
    curve_csv,
    curve_point,
    emit_halpha_curve,
    f_kappa,
    gamma_sum_bound_check,
    halpha_crossover,
    log_objective_g,
    objective_g,
    optimize,
    read_curve_csv,
    weighted_sum_maximizer,
    weighted_sum_maximizer_check,
)

mp.mp.dps = 40


@pytest.fixture(scope="module")
def res():
    return optimize()


# -- objective --------------------------------------------------------------

def test_f_at_zero():
    assert f_kappa(0.0) == pytest.approx(math.e / 2, rel=1e-15)


def test_f_at_optimum():
    assert f_kappa(1.18267) == pytest.approx(6.02449, abs=1e-5)


@pytest.mark.parametrize("kappa", [10.0, 100.0, 0.37])
def test_f_against_high_precision(kappa):
    s = mp.sqrt(1 + mp.mpf(kappa) ** 2)
    ref = mp.exp(kappa + s) / (1 + s)
    assert f_kappa(kappa) == pytest.approx(float(ref), rel=1e-13)


def test_f_domain():
    with pytest.raises(ValueError):
        f_kappa(-0.1)


@given(st.floats(0, 50), st.floats(1e-6, 10))
def test_f_increasing(kappa, step):
    assert f_kappa(kappa + step) > f_kappa(kappa)


def test_g_near_left_end():
    assert objective_g(1e-3) == pytest.approx(math.e / 2, rel=2e-3)


def test_g_at_optimum():
    assert objective_g(1.18267) == pytest.approx(3.13362, abs=1e-5)
    assert objective_g(1.3) < objective_g(1.18267)


def test_g_domain():
    with pytest.raises(ValueError):
        objective_g(1e-4)
    with pytest.raises(ValueError):
        objective_g(2000.0)


def test_g_underflows_cleanly_at_right_end():
    assert objective_g(1000.0) == 0.0
    logs = log_objective_g(np.array([1e-3, 1.0, 1000.0]))
    assert not np.isnan(logs).any() and logs[-1] == -math.inf


# -- optimiser --------------------------------------------------------------

def test_optimizer_values(res):
    assert res.kappa_star == pytest.approx(1.18267, abs=1e-4)
    assert res.b_chosen == pytest.approx(6.02448, abs=1e-4)
    assert res.Y_chosen == pytest.approx(6.446, abs=1e-2)
    assert res.f_at_kappa == pytest.approx(6.02449, abs=1e-4)


def test_optimizer_constraints(res):
    assert all(res.constraints.values())
    assert res.b_chosen < res.f_at_kappa
    assert 1 + res.kappa_star * res.b_chosen / res.Y_chosen == pytest.approx(
        math.sqrt(2 * res.b_chosen / math.e), abs=1e-9)
    assert 1 <= res.Y_chosen <= 1000 and 1e-3 <= res.kappa_star <= 1e3


def test_optimizer_pins_constant(res):
    assert res.base >= CURVE_BASE
    assert res.g_star <= 3.1337
    assert res.as_dict()["g_star_over_e"] == res.base


def test_unimodal_from_many_brackets(res):
    from scipy.optimize import minimize_scalar
    for lo, hi in [(1e-3, 10.0), (0.1, 3.0), (1.0, 1.5), (0.5, 8.0)]:
        k = minimize_scalar(lambda x: -float(log_objective_g(x)), bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-10}).x
        assert abs(k - res.kappa_star) <= 1e-6
    assert res.search["brackets_agree"] and res.search["method"] == "golden"


def test_optimum_is_global_on_grid(res):
    grid = np.geomspace(1e-3, 1e3, 200_001)
    assert np.max(log_objective_g(grid)) <= math.log(res.g_star) + 1e-12


# -- gamma sum --------------------------------------------------------------

def test_gamma_sum_geometric():
    rep = gamma_sum_bound_check(1.0, 1.0)
    assert rep.lhs == pytest.approx(1 / (math.e - 1), rel=1e-12)
    assert rep.rhs == pytest.approx(1.0, rel=1e-15)
    assert rep.holds


def test_gamma_sum_sqrt_power():
    rep = gamma_sum_bound_check(2.0, 0.5)
    assert rep.rhs == pytest.approx(2.0 ** -2 * 0.5 * math.gamma(2.0), rel=1e-14)
    ref = mp.nsum(lambda j: mp.exp(-2 * mp.sqrt(j) / mp.mpf(0.5)), [1, mp.inf])
    assert rep.lhs == pytest.approx(float(ref), rel=1e-10)
    assert rep.holds


def test_gamma_sum_small_alpha():
    rep = gamma_sum_bound_check(0.5, 0.25)
    assert 0 < rep.ratio <= 1


@given(st.floats(0.05, 10.0), st.floats(0.1, 1.0))
def test_gamma_sum_always_below(lam, alpha):
    rep = gamma_sum_bound_check(lam, alpha)
    assert rep.holds and 0 < rep.ratio <= 1


def test_gamma_sum_domain():
    with pytest.raises(ValueError):
        gamma_sum_bound_check(0.0, 0.5)
    with pytest.raises(ValueError):
        gamma_sum_bound_check(1.0, 1.5)


# -- weighted sum -----------------------------------------------------------

def test_weighted_sum_unit():
    y, v = weighted_sum_maximizer(1.0, 1.0)
    phi = (1 + math.sqrt(5)) / 2
    assert y == pytest.approx(phi, rel=1e-15)
    assert v == pytest.approx(math.exp(-math.sqrt(5)) * phi, rel=1e-15)
    assert weighted_sum_maximizer_check(1.0, 1.0)["agree"]


def test_weighted_sum_vanishing_mu():
    y, v = weighted_sum_maximizer(1.0, 1e-12)
    assert y == pytest.approx(1.0, rel=1e-10)
    assert v == pytest.approx(math.exp(-1), rel=1e-10)


def test_weighted_sum_actual_instance():
    b, k = 6.02448, 1.18267
    rep = weighted_sum_maximizer_check(1 / (2 * b), k * k * b / 2)
    assert rep["agree"] and rep["relative_gap"] <= 1e-8


@given(st.floats(1e-3, 100.0), st.floats(1e-3, 100.0))
def test_weighted_sum_property(lam, mu):
    assert weighted_sum_maximizer_check(lam, mu, points=20_001)["agree"]


def test_weighted_sum_domain():
    with pytest.raises(ValueError):
        weighted_sum_maximizer(0.0, 1.0)


# -- curve ------------------------------------------------------------------

def test_curve_unit_alpha():
    p = curve_point(1.0)
    assert p["conjecture"] == 1.0
    assert p["michna"] == pytest.approx(1 / 16, rel=1e-15)
    assert p["prior_bound"] == pytest.approx(0.5, rel=1e-15)
    assert p["lower_bound_shape"] == pytest.approx(CURVE_BASE, rel=1e-15)


def test_curve_two():
    assert curve_point(2.0)["conjecture"] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)


def test_curve_positive_finite(res):
    rows = emit_halpha_curve(np.linspace(0.01, 2.0, 100), 0.3, res)
    assert all(math.isfinite(v) and v > 0 for row in rows for v in row.values())


def test_curve_domain(res):
    with pytest.raises(ValueError):
        curve_point(0.0)
    with pytest.raises(ValueError):
        emit_halpha_curve([1.0], -1.0, res)


def test_csv_round_trip(res):
    rows = emit_halpha_curve(np.linspace(0.05, 2.0, 40), 1.0, res)
    text = curve_csv(rows)
    assert text.splitlines()[0] == ",".join(CURVE_HEADER)
    assert read_curve_csv(text) == rows
    with pytest.raises(ValueError):
        read_curve_csv("a,b\n1,2\n")


def test_crossover():
    a = halpha_crossover()
    assert a == pytest.approx(0.013125092253554613, abs=1e-6)
    h = lambda x: 2.5 * math.log(x) + math.log(CURVE_BASE) / x
    assert h(a - 1e-6) > 0 > h(a + 1e-6)
    # below the crossover the shape beats the conjecture line
    p = curve_point(a / 2)
    assert p["lower_bound_shape"] > p["conjecture"]
