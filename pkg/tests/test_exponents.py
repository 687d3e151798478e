import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaledamp.exponents import (ModelParams, check_admissible, conjugate_exponent, critical_q,
                                 fujita_exponent, gamma_quadratic, lp_decay_exponent, mu_star,
                                 strauss_exponent, subcritical_lifespan_slope,
                                 InadmissibleParameters)


def quadratic_root(n):
    # independent oracle: numpy root of (n-1) p^2 - (n+1) p - 2
    roots = np.roots([n - 1.0, -(n + 1.0), -2.0])
    return float(max(roots.real))


@pytest.mark.parametrize("n", range(2, 9))
def test_gamma_vanishes_at_strauss(n):
    assert abs(gamma_quadratic(strauss_exponent(n), n)) < 1e-12


def test_gamma_examples():
    assert gamma_quadratic(2.0, 4.0) == 0.0
    for n in (2.0, 3.5, 7.0):
        assert gamma_quadratic(1.0, n) == pytest.approx(4.0, abs=1e-14)


def test_strauss_examples():
    assert strauss_exponent(4) == pytest.approx(2.0, abs=1e-14)
    assert strauss_exponent(3) == pytest.approx(1 + math.sqrt(2), abs=1e-14)
    for n in (2, 3, 5.5, 10):
        assert strauss_exponent(n) == pytest.approx(quadratic_root(n), rel=1e-12)


@pytest.mark.parametrize("n", [1, 0.5, -2])
def test_strauss_domain(n):
    with pytest.raises(ValueError):
        strauss_exponent(n)


def test_fujita():
    assert fujita_exponent(2) == 2
    assert fujita_exponent(1) == 3
    with pytest.raises(ValueError):
        fujita_exponent(0)


def test_mu_star_examples():
    assert mu_star(2) == 2
    assert fujita_exponent(2) == pytest.approx(strauss_exponent(4), abs=1e-14)
    assert mu_star(3) == pytest.approx(2.8)
    assert fujita_exponent(3) == pytest.approx(strauss_exponent(5.8), abs=1e-10)


@given(st.floats(1.1, 10.0))
def test_conjugate_exponent(p):
    pc = conjugate_exponent(p)
    assert 1 / p + 1 / pc == pytest.approx(1.0, abs=1e-15)


@given(st.floats(2.0, 10.0))
def test_strauss_root_property(n):
    assert abs(gamma_quadratic(strauss_exponent(n), n)) < 1e-10


@given(st.floats(2.0, 10.0))
def test_fujita_equals_shifted_strauss(n):
    assert abs(fujita_exponent(n) - strauss_exponent(n + mu_star(n))) < 1e-10


@settings(max_examples=60)
@given(st.integers(2, 8), st.floats(0.01, 0.99))
def test_critical_identities(n, frac):
    mu = frac * mu_star(n)
    p = strauss_exponent(n + mu)
    q = (n - mu - 1) / 2 - 1 / p
    pc = conjugate_exponent(p)
    assert abs(n - q - pc / p - pc) < 1e-9
    # exponent of (1+tau) in the quadratic seed integrand
    assert abs(1 - q + lp_decay_exponent(n, mu, p)) < 1e-9


def test_critical_q_examples():
    cq = critical_q(ModelParams.critical(2, 1.0))
    assert cq.value == pytest.approx(-1 / (1 + math.sqrt(2)), abs=1e-14)
    assert cq.admissible
    for p in (1.5, 2.0, 4.0):
        cq = critical_q(ModelParams(3, 0.0, p))
        assert cq.value == pytest.approx(1 - 1 / p)
        assert cq.value > 0
    # the damping threshold sits exactly on the integrability boundary
    cq = critical_q(ModelParams(2, mu_star(2), strauss_exponent(4)))
    assert cq.value == pytest.approx(-1.0)
    assert not cq.admissible


def test_check_admissible():
    ok = check_admissible(ModelParams(2, 1.0, strauss_exponent(3), 0.5))
    assert ok.admissible and ok.diagnostics == []
    assert ok.p_conjugate == pytest.approx(ok.p_strauss / (ok.p_strauss - 1))
    big_mu = check_admissible(ModelParams(2, 3.0, 2.0, 0.5))
    assert any("mu < mu_star" in d for d in big_mu.diagnostics)
    low_n = check_admissible(ModelParams(1, 1.0, 2.0, 0.5))
    assert any("n >= 2" in d for d in low_n.diagnostics)
    off = check_admissible(ModelParams(2, 1.0, 2.0))
    assert any("p = p_S" in d for d in off.diagnostics)
    assert set(ok.as_dict()) >= {"gamma_value", "p_strauss", "q_value", "admissible"}


def test_model_params_validation():
    for bad in [(0, 1.0, 2.0, 1.0), (2, -1.0, 2.0, 1.0), (2, 1.0, 1.0, 1.0), (2, 1.0, 2.0, 0.0)]:
        with pytest.raises(ValueError):
            ModelParams(*bad)
    assert ModelParams(2, 1.0, 2.0).with_epsilon(0.3).epsilon == 0.3


def test_subcritical_slope():
    # gamma(2, 3) = 2, so the slope is -2*2*1/2
    assert subcritical_lifespan_slope(2.0, 3, 0.0) == pytest.approx(-2.0)
    with pytest.raises(InadmissibleParameters):
        subcritical_lifespan_slope(strauss_exponent(3) + 0.1, 3, 0.0)


def test_lp_decay_exponent_critical_2d():
    # n + mu - 1 = 2 here, so the exponent is 1 - p
    p = 1 + math.sqrt(2)
    assert lp_decay_exponent(2, 1.0, p) == pytest.approx(1 - p)
    assert lp_decay_exponent(2, 1.0, p) == pytest.approx(-math.sqrt(2))
