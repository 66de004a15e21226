import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcbopt.curvature import (GaugeConfig, HoelderModel, QuadraticModel, SumModel,
                              TableModel, build_model, delta_plus_and_lip,
                              example_1_1_model, gamma_hat, gamma_simple, invert_mu,
                              invert_sigma, model_from_dict, mu_hat, sigma_hat,
                              sum_class_radius)
from gcbopt.errors import (ConfigurationError, DomainError, NumericalError,
                           UnattainableAccuracyError)

MODELS = [
    QuadraticModel(L=0.5), QuadraticModel(L=1.0), QuadraticModel(L=4.0),
    HoelderModel(nu=0.0, L=1.0), HoelderModel(nu=0.25, L=1.0),
    HoelderModel(nu=0.5, L=1.0), HoelderModel(nu=1.0, L=1.0),
    example_1_1_model(),
]
GRID = np.linspace(0.05, 3.2, 64)


def quad_table(L=1.0, n=64, tmax=2.0):
    t = np.linspace(0.0, tmax, n)
    return TableModel(t_grid=tuple(t), mu_values=tuple(0.5 * L * t * t))


# closed forms --------------------------------------------------------------

def test_mu_hat_quadratic():
    assert mu_hat(QuadraticModel(L=2.0), 3.0) == 9.0


def test_mu_hat_hoelder_nu_one():
    assert mu_hat(HoelderModel(nu=1.0, L=1.0), 2.0) == 2.0


@pytest.mark.parametrize("model", MODELS + [quad_table()])
def test_zero_at_origin(model):
    assert mu_hat(model, 0.0) == 0.0
    assert sigma_hat(model, 0.0) == 0.0


def test_sigma_hat_closed_forms():
    assert sigma_hat(QuadraticModel(L=4.0), 1.0) == 1.0
    assert sigma_hat(HoelderModel(nu=0.5, L=3.0), 1.0) == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_sum_model_adds_members():
    m = SumModel(members=(HoelderModel(nu=0.0, L=0.7), QuadraticModel(L=3.0)))
    t = 0.4
    assert mu_hat(m, t) == pytest.approx(0.7 * t + 1.5 * t * t, rel=1e-15)
    assert sigma_hat(m, t) == pytest.approx(0.7 * t + 0.75 * t * t, rel=1e-15)


def test_example_model_components():
    m = example_1_1_model()
    assert isinstance(m.members[0], QuadraticModel) and m.members[0].L == 1.0
    assert m.members[1].nu == 0.5
    assert m.members[1].L == pytest.approx(math.sqrt(2.0))


def test_example_model_bounds_the_sampled_quotient():
    # the 3/2-power part has quotient sup 0.9428 r^1.5 at x = -y; the model must cover it
    f = lambda x: 2.0 / 3.0 * abs(x) ** 1.5
    r = 1.0
    worst = 0.0
    for x in np.linspace(-1, 1, 401):
        y = x - r
        z = 0.5 * (x + y)
        worst = max(worst, abs(0.5 * f(x) + 0.5 * f(y) - f(z)) / 0.25)
    assert worst == pytest.approx(8 / 3 * 0.5 ** 1.5, rel=1e-3)
    assert worst <= mu_hat(example_1_1_model().members[1], r)


def test_domain_errors():
    with pytest.raises(DomainError):
        mu_hat(QuadraticModel(L=1.0), -1.0)
    with pytest.raises(DomainError):
        sigma_hat(QuadraticModel(L=1.0), float("nan"))
    with pytest.raises(DomainError):
        mu_hat(QuadraticModel(L=1.0, diameter=1.0), 2.0)
    with pytest.raises(DomainError):
        delta_plus_and_lip(QuadraticModel(L=1.0), 0.0)


def test_configuration_errors():
    with pytest.raises(ConfigurationError):
        TableModel(t_grid=(), mu_values=())
    with pytest.raises(ConfigurationError):
        TableModel(t_grid=(0.0, 1.0), mu_values=(0.0, -1.0))
    with pytest.raises(ConfigurationError):
        TableModel(t_grid=(0.0, 2.0, 1.0), mu_values=(0.0, 1.0, 2.0))
    with pytest.raises(ConfigurationError):
        HoelderModel(nu=1.5, L=1.0)
    with pytest.raises(ConfigurationError):
        HoelderModel(nu=0.5, L=0.0)
    with pytest.raises(ConfigurationError):
        GaugeConfig(rel_tol=0.0)
    with pytest.raises(ConfigurationError):
        build_model("nope")


# shift and slope ---------------------------------------------------------------

def test_delta_plus_quadratic_exact():
    assert delta_plus_and_lip(QuadraticModel(L=5.0), 2.0) == (0.0, 5.0)


def test_delta_plus_hoelder_nu_zero():
    d, lip = delta_plus_and_lip(HoelderModel(nu=0.0, L=1.0), 2.0)
    assert d == pytest.approx(2.0, rel=1e-15)
    assert lip == pytest.approx(1.0, rel=1e-15)


def test_delta_plus_table_of_quadratic():
    d, lip = delta_plus_and_lip(quad_table(), 1.0)
    assert lip == pytest.approx(1.0, abs=1e-3)
    assert 0.0 <= d < 1e-3


def test_table_sigma_matches_closed_form():
    tab = quad_table(L=1.0, n=2001)
    for r in (0.3, 1.0, 1.7):
        assert sigma_hat(tab, r) == pytest.approx(r * r / 4, rel=1e-3)


# gauges --------------------------------------------------------------------------

def test_invert_examples():
    assert invert_mu(QuadraticModel(L=2.0), 4.0) == pytest.approx(2.0, rel=1e-10)
    assert invert_mu(HoelderModel(nu=0.0, L=2.0), 1.0) == pytest.approx(0.5, rel=1e-10)
    assert invert_sigma(QuadraticModel(L=4.0), 9.0) == pytest.approx(3.0, rel=1e-10)
    assert invert_sigma(HoelderModel(nu=1.0, L=1.0), 1.0) == pytest.approx(2.0, rel=1e-10)


def test_invert_table_of_quadratic():
    assert invert_mu(quad_table(), 0.5) == pytest.approx(1.0, rel=1e-3)
    tab = quad_table()
    r = invert_sigma(tab, 0.3)
    assert sigma_hat(tab, r) == pytest.approx(0.3, rel=1e-9)


def test_invert_unattainable():
    with pytest.raises(UnattainableAccuracyError):
        invert_mu(QuadraticModel(L=1.0, diameter=1.0), 10.0)
    with pytest.raises(UnattainableAccuracyError):
        invert_mu(QuadraticModel(L=0.0), 1.0)
    with pytest.raises(DomainError):
        invert_mu(QuadraticModel(L=1.0), 0.0)


def test_invert_at_diameter_edge():
    m = QuadraticModel(L=2.0, diameter=1.0)
    assert invert_mu(m, 1.0) == 1.0


def test_gamma_examples():
    for L in (0.3, 1.0, 7.0):
        for t in (1e-3, 0.1, 2.0):
            assert gamma_simple(QuadraticModel(L=L), t) == pytest.approx(L, rel=1e-9)
            assert gamma_hat(QuadraticModel(L=L), t) == pytest.approx(L, rel=1e-9)
    L, t = 1.5, 0.2
    assert gamma_simple(HoelderModel(nu=0.0, L=L), t) == pytest.approx(4 * L * L / t, rel=1e-9)
    assert gamma_hat(HoelderModel(nu=0.0, L=L), t) == pytest.approx(8 * L * L / t, rel=1e-9)


def test_gamma_table_of_quadratic():
    assert gamma_simple(quad_table(), 0.1) == pytest.approx(1.0, rel=2e-2)


def test_sum_class_radius():
    assert sum_class_radius(1.0, 2.0, 1.0) == pytest.approx(0.6180339887, abs=1e-10)
    assert sum_class_radius(1.0, 1e-12, 1.0) == pytest.approx(1.0, rel=1e-9)
    r = sum_class_radius(0.5, 4.0, 2.0)
    assert 0.5 * r + 2.0 * r * r == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(DomainError):
        sum_class_radius(0.0, 1.0, 1.0)


def test_model_dict_round_trip():
    for m in MODELS + [quad_table()]:
        assert model_from_dict(m.to_dict()) == m


# properties --------------------------------------------------------------------------

models = st.sampled_from(MODELS)
radii = st.floats(min_value=1e-3, max_value=10.0)
betas = st.floats(min_value=0.0, max_value=1.0)


@settings(max_examples=200, deadline=None)
@given(models, radii, betas)
def test_growth_law(model, t, beta):
    assert mu_hat(model, beta * t) >= beta * beta * mu_hat(model, t) - 1e-12 * (1 + mu_hat(model, t))


@settings(max_examples=200, deadline=None)
@given(models, radii, betas)
def test_convex_case_relations(model, r, beta):
    tol = 1e-12 * (1 + mu_hat(model, r))
    assert mu_hat(model, beta * r) <= beta * mu_hat(model, r) + tol
    assert sigma_hat(model, r) <= mu_hat(model, r) + tol
    assert mu_hat(model, r) <= 2 * sigma_hat(model, r) + tol


@settings(max_examples=200, deadline=None)
@given(models, radii, radii)
def test_tangent_bound(model, t, r):
    mu_r = mu_hat(model, r)
    rhs = sigma_hat(model, r) - 0.5 * mu_r + 0.5 * (t / r) ** 2 * mu_r
    assert sigma_hat(model, t) <= rhs + 1e-10 * (1 + abs(rhs))


@settings(max_examples=200, deadline=None)
@given(models, radii, radii)
def test_sigma_of_sqrt_is_midpoint_concave(model, a, b):
    lhs = sigma_hat(model, math.sqrt((a + b) / 2))
    rhs = 0.5 * (sigma_hat(model, math.sqrt(a)) + sigma_hat(model, math.sqrt(b)))
    assert lhs >= rhs - 1e-10 * (1 + rhs)


@settings(max_examples=100, deadline=None)
@given(models, st.floats(min_value=1e-3, max_value=5.0),
       st.floats(min_value=0.01, max_value=1.0))
def test_gauge_sandwich(model, eps, beta):
    s, sb = invert_mu(model, eps), invert_mu(model, beta * eps)
    assert beta * s <= sb * (1 + 1e-9)
    assert sb <= math.sqrt(beta) * s * (1 + 1e-9)
    assert invert_sigma(model, beta * eps) <= math.sqrt(beta) * invert_sigma(model, eps) * (1 + 1e-9)


@settings(max_examples=100, deadline=None)
@given(models, st.floats(min_value=1e-4, max_value=100.0))
def test_inversion_residual(model, eps):
    r = invert_mu(model, eps)
    assert abs(mu_hat(model, r) - eps) <= 1e-10 * eps
    r = invert_sigma(model, eps)
    assert abs(sigma_hat(model, r) - eps) <= 1e-10 * eps


@pytest.mark.parametrize("model", MODELS)
def test_derived_quantities_monotone(model):
    dp = np.array([delta_plus_and_lip(model, r)[0] for r in GRID])
    lip = np.array([delta_plus_and_lip(model, r)[1] for r in GRID])
    assert np.all(np.diff(dp) >= -1e-10 * (1 + np.abs(dp[1:])))
    assert np.all(np.diff(lip) <= 1e-10 * (1 + np.abs(lip[1:])))
    ts = np.geomspace(1e-3, 5.0, 30)
    g = np.array([gamma_simple(model, t) for t in ts])
    gh = np.array([gamma_hat(model, t) for t in ts])
    assert np.all(np.diff(g) <= 1e-8 * g[1:])
    assert np.all(np.diff(gh) <= 1e-8 * gh[1:])


def test_bisection_stall_reports_residual():
    # a table with a jump cannot be inverted to tolerance at the jump value
    tab = TableModel(t_grid=(0.0, 1.0, 1.0 + 1e-15, 2.0),
                     mu_values=(0.0, 0.0, 1.0, 1.0))
    with pytest.raises(NumericalError) as err:
        invert_mu(tab, 0.5, GaugeConfig(rel_tol=1e-14))
    assert err.value.residual is not None
