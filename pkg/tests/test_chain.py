import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaledamp.chain import (GridCoverageError, WindowTooShort, boundary_term, c_fg,
                             check_integral_inequality, check_key_inequality, f_coefficient, g1_functional,
                             g_functional, initial_flux, lambda_ratio, lp_lower_bound,
                             lp_slope_check, pre_blowup)
from scaledamp.exponents import ModelParams, lp_decay_exponent
from scaledamp.solver import DataPair, SolverConfig, Status, bump, radial_weights, run, zero
from scaledamp.special import bessel_k_array
from scaledamp.testfunctions import TestFunctionSpec, lambda_eta, phi_eta

MUS = [0.25, 0.5, 1.0, 1.5]


@pytest.fixture(scope="module")
def critical_run():
    params = ModelParams.critical(2, 1.0, 0.6)
    trace, est = run(params, cfg=SolverConfig(dr=0.02, t_max=40.0, store_fields=True))
    assert est.status is Status.BLEW_UP
    return pre_blowup(trace)


@pytest.fixture(scope="module")
def functional(critical_run):
    return g_functional(critical_run, TestFunctionSpec.critical(critical_run.params))


@pytest.mark.parametrize("mu", MUS)
def test_f_coefficient_positive_and_consistent(mu):
    assert f_coefficient(mu) > 0
    assert f_coefficient(mu) == pytest.approx(mu - 2 * float(lambda_ratio(0.0, mu)), rel=1e-6)


@pytest.mark.parametrize("mu", MUS)
def test_c_fg_positive_for_displacement_only(mu):
    assert c_fg(DataPair(bump, zero), 2, mu) > 0


@pytest.mark.parametrize("mu", MUS)
def test_c_fg_velocity_only(mu):
    r = np.linspace(0, 0.5, 2001)
    w = radial_weights(r.size, r[1] - r[0], 3)
    expected = float(lambda_eta(1.0, 0.0, mu)) * (w @ (bump(r) * phi_eta(1.0, r, 3)))
    assert c_fg(DataPair(zero, bump), 3, mu) == pytest.approx(expected, rel=1e-4)
    assert expected > 0


def test_flux_is_positive_and_below_c_fg():
    data = DataPair()
    assert 0 < initial_flux(data, 2, 1.0) < c_fg(data, 2, 1.0)


@settings(max_examples=30)
@given(st.floats(0.05, 5.0), st.floats(0.5, 50.0))
def test_lp_bound_homogeneity(eps, t):
    params = ModelParams.critical(2, 1.0, eps)
    doubled = ModelParams.critical(2, 1.0, 2 * eps)
    ratio = lp_lower_bound(t, doubled) / lp_lower_bound(t, params)
    assert ratio == pytest.approx(2 ** params.p, rel=1e-12)


def test_lp_bound_exponent_and_domain():
    params = ModelParams(2, 1.0, 1 + np.sqrt(2), 1.0)
    assert lp_decay_exponent(2, 1.0, 1 + np.sqrt(2)) == pytest.approx(-np.sqrt(2), abs=1e-12)
    assert lp_lower_bound(3.0, params) == pytest.approx(4.0 ** -np.sqrt(2))
    with pytest.raises(ValueError):
        lp_lower_bound(0.5, params, t0=1.0)


def test_g_functional_start(functional):
    assert functional.G[0] == 0 and functional.G_prime[0] == 0
    assert np.all(functional.G_second >= 0)
    assert np.all(np.diff(functional.G) >= -1e-12 * functional.G.max())


def test_g_prime_consistent(functional):
    num = np.gradient(functional.G, functional.times, edge_order=2)
    scale = np.max(np.abs(functional.G_prime))
    assert np.max(np.abs(num - functional.G_prime)) / scale < 1e-2


def test_triple_identity(functional):
    assert np.max(functional.triple_identity_residual()) < 0.01


def test_key_inequality(functional):
    rep = check_key_inequality(functional, functional.p)
    assert np.all(rep.ratio > 0) and rep.inf_ratio > 0
    assert rep.seed_coefficient > 0
    again = check_key_inequality(functional, functional.p)
    np.testing.assert_array_equal(rep.ratio, again.ratio)


def test_key_inequality_window(critical_run):
    short = critical_run.truncated(2.3)
    ft = g_functional(short, TestFunctionSpec.critical(short.params))
    with pytest.raises(WindowTooShort):
        check_key_inequality(ft, ft.p)


def test_g1_functional(critical_run):
    rep = g1_functional(critical_run, 2, 1.0)
    r = critical_run.r
    w = radial_weights(r.size, critical_run.dr, 2)
    g10 = critical_run.params.epsilon * float(lambda_eta(1.0, 0.0, 1.0)) * (w @ (critical_run.data_f * phi_eta(1.0, r, 2)))
    assert rep.G1[0] == pytest.approx(g10, rel=1e-12) and rep.G1[0] > 0
    assert rep.min_scaled_residual() >= -1e-6
    assert rep.min_scaled_gap() >= 0


def test_g1_lower_bound_vanishes_at_start(critical_run):
    rep = g1_functional(critical_run, 2, 1.0)
    assert rep.lower_bound[0] == 0
    nu = 0.0
    k2 = bessel_k_array(nu, 1.0 + rep.times) ** 2
    assert np.all(k2 > 0)


def test_g1_parameter_mismatch(critical_run):
    with pytest.raises(ValueError):
        g1_functional(critical_run, 3, 1.0)


def test_ineq(critical_run):
    rep = check_integral_inequality(critical_run, TestFunctionSpec.critical(critical_run.params))
    assert rep.holds and rep.min_scaled_gap() >= 0
    assert rep.identity_residual < 0.01
    assert rep.boundary_term > 0


@pytest.mark.parametrize("n,mu", [(2, 1.0), (3, 0.5), (3, 1.5)])
@pytest.mark.parametrize("data", [DataPair(), DataPair(bump, zero), DataPair(zero, bump)])
def test_boundary_term_positive(n, mu, data):
    spec = TestFunctionSpec.critical(ModelParams.critical(n, mu, 1.0))
    assert boundary_term(data, spec) > 0


def test_lp_slope(critical_run):
    check = lp_slope_check(critical_run)
    assert check.passed and check.fitted_constant > 0


def test_grid_coverage_error(critical_run):
    keep = critical_run.r <= 5.0
    narrow = dataclasses.replace(critical_run, r=critical_run.r[keep], u=critical_run.u[:, keep])
    with pytest.raises(GridCoverageError):
        g_functional(narrow, TestFunctionSpec.critical(narrow.params))


def test_fields_required():
    trace, _ = run(ModelParams.critical(2, 1.0, 1.0), cfg=SolverConfig(dr=0.05, t_max=1.0))
    with pytest.raises(ValueError, match="store_fields"):
        g1_functional(trace, 2, 1.0)


def test_pre_blowup_fraction(critical_run):
    with pytest.raises(ValueError):
        pre_blowup(critical_run, 0.0)
    assert pre_blowup(critical_run, 0.5).times[-1] <= 0.5 * critical_run.times[-1]


def test_fitted_k_stable_across_eps(functional):
    # the fitted K may move with eps only within a factor of two
    params = ModelParams.critical(2, 1.0, 0.8)
    trace, _ = run(params, cfg=SolverConfig(dr=0.02, t_max=20.0, store_fields=True))
    other = g_functional(pre_blowup(trace), TestFunctionSpec.critical(params))
    k1 = check_key_inequality(functional, functional.p).inf_ratio
    k2 = check_key_inequality(other, other.p).inf_ratio
    assert 0.5 <= k1 / k2 <= 2.0
