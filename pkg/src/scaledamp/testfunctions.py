r"""Bessel-type test functions for the damped wave equation.

Building blocks, for eta > 0:

* ``lambda_eta(t) = (eta (t+1))^{(mu+1)/2} K_{(mu-1)/2}(eta (t+1))``, the time
  factor solving the conjugate time ODE;
* ``phi_eta(r)``, the spherical mean of ``exp(eta x.omega)``, which solves
  ``Delta phi = eta^2 phi``;
* ``b_q(r, t) = int_0^1 lambda_eta(t) phi_eta(r) eta^(q-1) d eta``.

``phi`` is computed with the plane-wave reduction
``omega_{n-1} int_{-1}^{1} (1 - theta^2)^{(n-3)/2} exp(theta eta r) d theta``;
after ``theta = sin s`` the weight is ``cos^{n-2} s`` and Gauss-Legendre in s
converges quickly for every n >= 2.

All products are formed from exponentially scaled factors,
``e^{z} lambda`` and ``e^{-a} phi``, so nothing overflows for r, t up to a few
hundred.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exponents import InadmissibleParameters, ModelParams, critical_q, q_restriction_violations
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, gauss_legendre, tanh_sinh_unit, window_for_exponent
from .special import gamma_fn, log_bessel_k

THETA_NODES = 128
ETA_STEP = 1.0 / 32


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def plane_wave_constant(n: int) -> float:
    """omega_{n-1}, chosen so that phi_eta(0) equals the area of S^{n-1}."""
    return 2.0 * math.pi ** ((n - 1) / 2.0) / gamma_fn((n - 1) / 2.0)


def phi_scaled(a, n: int, nodes: int = THETA_NODES) -> np.ndarray:
    """``e^{-a} phi(a)`` where ``phi(a) = phi_eta(r)`` with ``a = eta r >= 0``."""
    if n < 2:
        raise ValueError("the plane-wave formula needs n >= 2")
    a = np.asarray(a, dtype=float)
    x, w = gauss_legendre(nodes)
    s = 0.5 * np.pi * x
    weight = 0.5 * np.pi * w * np.cos(s) ** (n - 2)
    expo = np.multiply.outer(a, np.sin(s) - 1.0)
    return plane_wave_constant(n) * np.exp(expo) @ weight


def phi_eta(eta, r, n: int, cfg: QuadratureConfig | None = None):
    """Spherical mean ``int_{S^{n-1}} exp(eta x.omega) d omega`` at |x| = r."""
    a = np.asarray(eta, dtype=float) * np.asarray(r, dtype=float)
    if np.any(a < 0):
        raise ValueError("phi_eta needs eta, r >= 0")
    return phi_scaled(a, n) * np.exp(a)


def _log_time_factor(order: float, mu: float, z):
    # log of z^{(mu+1)/2} K_order(z)
    return 0.5 * (mu + 1.0) * np.log(z) + log_bessel_k(order, z)


def lambda_eta(eta, t, mu: float, cfg: QuadratureConfig | None = None):
    """``(eta (t+1))^{(mu+1)/2} K_{(mu-1)/2}(eta (t+1))``."""
    z = np.asarray(eta, dtype=float) * (np.asarray(t, dtype=float) + 1.0)
    if np.any(z <= 0):
        raise ValueError("lambda_eta needs eta > 0 and t > -1")
    return np.exp(_log_time_factor(0.5 * (mu - 1.0), mu, z)).reshape(z.shape)


def lambda_eta_tilde(eta, t, mu: float):
    """Companion time factor with Bessel order (mu+1)/2."""
    z = np.asarray(eta, dtype=float) * (np.asarray(t, dtype=float) + 1.0)
    return np.exp(_log_time_factor(0.5 * (mu + 1.0), mu, z)).reshape(z.shape)


def lambda_eta_dt(eta, t, mu: float):
    """Closed-form time derivative of lambda_eta via the recurrence for K'."""
    eta = np.asarray(eta, dtype=float)
    t = np.asarray(t, dtype=float)
    return mu / (1.0 + t) * lambda_eta(eta, t, mu) - eta * lambda_eta_tilde(eta, t, mu)


def psi(r, t, n: int, mu: float, cfg: QuadratureConfig | None = None):
    """Separable solution ``lambda_1(t) phi_1(r)`` of the conjugate equation."""
    return lambda_eta(1.0, t, mu) * phi_eta(1.0, r, n)


class Regime(enum.Enum):
    FLAT = "flat"
    BOUNDARY_LAYER = "boundary_layer"


@dataclass(frozen=True)
class ProfileRegime:
    """Which line of the large-time profile applies, with its three powers.

    ``exponents`` are the powers of (t+1), (t+1+r) and (t+1-r).
    """

    regime: Regime
    exponents: tuple[float, float, float]

    @classmethod
    def classify(cls, n: int, mu: float, q: float) -> "ProfileRegime":
        edge = (n - mu - 1.0) / 2.0
        if q == edge:
            raise InadmissibleParameters(
                f"q = (n-mu-1)/2 = {edge} sits between the two profile regimes")
        if q < edge:
            if not q > -mu / 2.0:
                raise InadmissibleParameters(f"profile needs q > -mu/2, got q={q}")
            return cls(Regime.FLAT, (mu / 2.0, -q - mu / 2.0, 0.0))
        return cls(Regime.BOUNDARY_LAYER, (mu / 2.0, (1.0 - n) / 2.0, edge - q))


@dataclass(frozen=True)
class TestFunctionSpec:
    n: int
    mu: float
    q: float
    eta_quadrature: QuadratureConfig = DEFAULT_QUADRATURE
    theta_quadrature: QuadratureConfig = DEFAULT_QUADRATURE
    eta_step: float = ETA_STEP
    theta_nodes: int = THETA_NODES

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.n < 2:
            raise InadmissibleParameters(f"test functions need n >= 2, got n={self.n}")
        bad = q_restriction_violations(self.q, self.mu)
        if bad:
            raise InadmissibleParameters("; ".join(bad))

    @classmethod
    def critical(cls, params: ModelParams, **kw) -> "TestFunctionSpec":
        return cls(params.n, params.mu, critical_q(params).value, **kw)

    def with_q(self, q: float) -> "TestFunctionSpec":
        return TestFunctionSpec(self.n, self.mu, q, self.eta_quadrature, self.theta_quadrature,
                                self.eta_step, self.theta_nodes)

    @property
    def regime(self) -> ProfileRegime:
        return ProfileRegime.classify(self.n, self.mu, self.q)


@dataclass
class _EtaFamily:
    """One eta-integral ``int_0^1 z^{(mu+1)/2} K_order(z) phi_eta(r) eta^power d eta``."""

    n: int
    mu: float
    order: float
    power: float
    step: float
    drop: float
    theta_nodes: int
    _phi_cache: dict = field(default_factory=dict, repr=False)

    @cached_property
    def nodes(self):
        # near eta = 0 the integrand behaves like eta^(endpoint - 1)
        endpoint = self.power + 1.0 + 0.5 * (self.mu + 1.0) - abs(self.order)
        if endpoint <= 0:
            raise InadmissibleParameters(
                f"eta-integral diverges at 0 (endpoint exponent {endpoint:.6g} <= 0)")
        x, _, w = tanh_sinh_unit(self.step, -window_for_exponent(endpoint, self.drop), 3.2)
        return x, w * x ** self.power

    def _phi_block(self, r: np.ndarray) -> np.ndarray:
        key = (r.shape, r.tobytes())
        blk = self._phi_cache.get(key)
        if blk is None:
            eta = self.nodes[0]
            blk = phi_scaled(np.multiply.outer(eta, r), self.n, self.theta_nodes)
            if len(self._phi_cache) > 16:
                self._phi_cache.clear()
            self._phi_cache[key] = blk
        return blk

    def __call__(self, r, t) -> np.ndarray:
        """Evaluate on the outer grid ``t x r`` (result shape ``t.shape + r.shape``)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        eta, w = self.nodes
        z = np.multiply.outer(t + 1.0, eta)                       # (T, E)
        lam_hat = np.exp(_log_time_factor(self.order, self.mu, z) + z)
        phi_hat = self._phi_block(r.ravel())                      # (E, R)
        gap = (t[:, None, None] + 1.0) - r.ravel()[None, None, :]
        kern = np.exp(-eta[None, :, None] * gap)                  # (T, E, R)
        out = np.einsum("te,ter,er->tr", lam_hat * w, kern, phi_hat)
        return out.reshape(t.shape + r.shape)


def _eval(family: _EtaFamily, r, t):
    scalar = np.ndim(r) == 0 and np.ndim(t) == 0
    r_arr, t_arr = np.broadcast_arrays(np.asarray(r, float), np.asarray(t, float))
    if np.any(r_arr < 0) or np.any(t_arr < 0):
        raise ValueError("need r >= 0 and t >= 0")
    if scalar:
        return float(family(r_arr, t_arr)[0, 0])
    flat_r, flat_t = r_arr.ravel(), t_arr.ravel()
    out = np.empty(flat_r.size)
    for tv in np.unique(flat_t):
        sel = flat_t == tv
        out[sel] = family(flat_r[sel], np.array([tv]))[0]
    return out.reshape(r_arr.shape)


class TestFunction:
    """``b_q`` and its companions for one (n, mu, q)."""

    __test__ = False

    def __init__(self, spec: TestFunctionSpec):
        self.spec = spec
        self._families: dict[tuple[float, float], _EtaFamily] = {}

    def _family(self, order: float, power: float) -> _EtaFamily:
        key = (order, power)
        fam = self._families.get(key)
        if fam is None:
            s = self.spec
            fam = _EtaFamily(s.n, s.mu, order, power, s.eta_step,
                             s.eta_quadrature.truncation_bound, s.theta_nodes)
            self._families[key] = fam
        return fam

    def b(self, r, t, shift: float = 0.0):
        """``b_{q+shift}(r, t)``."""
        s = self.spec
        return _eval(self._family(0.5 * (s.mu - 1.0), s.q + shift - 1.0), r, t)

    def b_tilde(self, r, t, shift: float = 0.0):
        """``int_0^1 (eta(t+1))^{(mu+1)/2} K_{(mu+1)/2}(eta(t+1)) phi_eta eta^{q+shift-1} d eta``."""
        s = self.spec
        if not s.q + shift > 0:
            raise InadmissibleParameters(
                f"tilde variant needs order q > 0 for integrability, got {s.q + shift}")
        return _eval(self._family(0.5 * (s.mu + 1.0), s.q + shift - 1.0), r, t)

    def b_t(self, r, t):
        """Time derivative from the closed form ``mu/(1+t) b_q - b~_{q+1}``."""
        t_arr = np.asarray(t, dtype=float)
        return self.spec.mu / (1.0 + t_arr) * self.b(r, t) - self.b_tilde(r, t, shift=1.0)

    def b_grid(self, r: np.ndarray, t: float, shift: float = 0.0) -> np.ndarray:
        """b_{q+shift} over a whole radial grid at one time; phi is cached per grid."""
        s = self.spec
        return self._family(0.5 * (s.mu - 1.0), s.q + shift - 1.0)(r, np.array([t]))[0]

    def b_tilde_grid(self, r: np.ndarray, t: float, shift: float = 0.0) -> np.ndarray:
        s = self.spec
        if not s.q + shift > 0:
            raise InadmissibleParameters(f"tilde variant needs order > 0, got {s.q + shift}")
        return self._family(0.5 * (s.mu + 1.0), s.q + shift - 1.0)(r, np.array([t]))[0]

    def b_t_grid(self, r: np.ndarray, t: float) -> np.ndarray:
        return self.spec.mu / (1.0 + t) * self.b_grid(r, t) - self.b_tilde_grid(r, t, shift=1.0)

    def profile(self, r, t):
        return asymptotic_profile(self.spec, r, t)


def b_q(spec: TestFunctionSpec, r, t):
    return TestFunction(spec).b(r, t)


def b_q_tilde(spec: TestFunctionSpec, r, t):
    return TestFunction(spec).b_tilde(r, t)


def asymptotic_profile(spec: TestFunctionSpec, r, t):
    """Large-time shape of b_q (up to constants) for 0 <= r <= t + 1/2."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("profile needs t > 0")
    if np.any(r < 0) or np.any(r > t + 0.5 + 1e-12):
        raise ValueError("profile needs 0 <= r <= t + 1/2")
    reg = spec.regime
    a, b, c = reg.exponents
    out = (t + 1.0) ** a * (t + 1.0 + r) ** b
    if reg.regime is Regime.BOUNDARY_LAYER:
        out = out * (t + 1.0 - r) ** c
    return out


def hypergeometric_profile(spec: TestFunctionSpec, r: float, t: float) -> float:
    """Flat-regime profile refined by ``F(q + mu/2, (n-1)/2; n-1; 2r/(t+1+r))``."""
    from .special import gauss_2f1

    n, mu, q = spec.n, spec.mu, spec.q
    z = 2.0 * r / (t + 1.0 + r)
    f = gauss_2f1(q + mu / 2.0, (n - 1) / 2.0, n - 1.0, z)
    return (t + 1.0) ** (mu / 2.0) * (t + 1.0 + r) ** (-q - mu / 2.0) * f


def onset_time(times, ratios, band: float = 0.2) -> float | None:
    """Smallest sampled time after which ``max/min`` of the ratio stays below 1 + band.

    Returns ``None`` when no tail of the series is that flat.
    """
    times = np.asarray(times, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    for i in range(len(times) - 1):
        tail = ratios[i:]
        if tail.max() / tail.min() < 1.0 + band:
            return float(times[i])
    return None
