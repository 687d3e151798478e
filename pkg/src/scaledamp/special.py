r"""Modified Bessel functions of the second kind, Gamma and Gauss 2F1.

``K_nu(t)`` is evaluated directly from

.. math::
    K_\nu(t) = \int_0^\infty \exp(-t\cosh\zeta)\cosh(\nu\zeta)\,d\zeta .

The integrand is even and analytic in a strip around the real axis, so the
trapezoid rule converges exponentially in the step. Sums are carried out in
log space relative to the peak of the integrand, which keeps large orders at
small arguments and large arguments (where ``e^{-t}`` underflows) finite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .quadrature import (DEFAULT_QUADRATURE, QuadratureConfig, QuadratureError,
                         adaptive_tanh_sinh, window_for_exponent)

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BesselEval:
    order: float
    argument: float
    value: float
    est_abs_error: float


def _logcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LOG2


def _trapezoid_step(nu: float, t: np.ndarray) -> np.ndarray:
    # peak width of the integrand is ~ (t^2 + nu^2)^(-1/4)
    return np.minimum(0.1, 0.5 / (t * t + nu * nu) ** 0.25)


def _log_integrand(nu, t, zeta):
    return -t * np.cosh(np.minimum(zeta, 700.0)) + _logcosh(nu * zeta)


def _truncation_point(nu: float, t: np.ndarray, drop: float):
    """Return the peak location, a reference log-level and a cut-off Z.

    Z satisfies log-integrand(Z) < reference - drop, so the neglected tail is
    below e^-drop relative to the peak.
    """
    zpk = np.arcsinh(nu / t)
    ref = np.maximum(_log_integrand(nu, t, 0.0), _log_integrand(nu, t, zpk))
    z = zpk + 1.0
    for _ in range(64):
        bad = _log_integrand(nu, t, z) >= ref - drop
        if not bad.any():
            break
        z = np.where(bad, 2.0 * z, z)
    return zpk, ref, z


def log_bessel_k(nu: float, t, refine: int = 0, drop: float = 40.0) -> np.ndarray:
    """Vectorised ``log K_nu(t)`` for one order and an array of positive t.

    ``refine`` halves the default trapezoid step that many times. The default
    step already resolves the integrand to rounding level, and it is a fixed
    function of (nu, t); derived quantities therefore vary smoothly in t.
    """
    nu = abs(float(nu))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise ValueError("K_nu(t) needs finite t > 0")
    flat = t.ravel()
    h = _trapezoid_step(nu, flat) / 2.0 ** refine
    _, ref, zcut = _truncation_point(nu, flat, drop)
    nodes = np.ceil(zcut / h).astype(int) + 1
    out = np.empty_like(flat)
    # group by node count so that the 2-D work array stays compact
    order = np.argsort(nodes)
    chunks = np.array_split(order, max(1, len(order) // 64))
    for idx in chunks:
        if idx.size == 0:
            continue
        nmax = int(nodes[idx].max())
        k = np.arange(nmax + 1)
        zeta = h[idx, None] * k[None, :]
        lg = _log_integrand(nu, flat[idx, None], zeta) - ref[idx, None]
        lg[k[None, :] > nodes[idx, None]] = -np.inf
        terms = np.exp(lg)
        terms[:, 0] *= 0.5
        out[idx] = ref[idx] + np.log(h[idx] * terms.sum(axis=1))
    return out.reshape(t.shape)


def bessel_k_array(nu: float, t) -> np.ndarray:
    """``K_nu`` on an array of arguments at the default (fixed) resolution."""
    return np.exp(log_bessel_k(nu, t)).reshape(np.shape(t))


def bessel_k(nu: float, t: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> BesselEval:
    """Adaptive evaluation of ``K_nu(t)`` with an error estimate.

    The trapezoid step is halved until two successive levels agree to
    ``cfg.rel_tol``; the reported error is that difference.
    """
    if not t > 0:
        raise ValueError(f"K_nu(t) needs t > 0, got t={t}")
    prev = float(log_bessel_k(nu, t, refine=-1, drop=cfg.truncation_bound)[0])
    for level in range(cfg.max_refinements):
        cur = float(log_bessel_k(nu, t, refine=level, drop=cfg.truncation_bound)[0])
        value = math.exp(cur)
        err = abs(value - math.exp(prev))
        if abs(cur - prev) <= cfg.rel_tol:
            return BesselEval(nu, t, value, err)
        prev = cur
    raise QuadratureError(f"K_{nu}({t}) did not converge in {cfg.max_refinements} refinements")


def bessel_k_dt(nu: float, t, cfg: QuadratureConfig | None = None):
    """``dK_nu/dt = -K_{nu+1}(t) + (nu/t) K_nu(t)``."""
    if cfg is not None:
        return -bessel_k(nu + 1.0, t, cfg).value + nu / t * bessel_k(nu, t, cfg).value
    t = np.asarray(t, dtype=float)
    return -bessel_k_array(nu + 1.0, t) + nu / t * bessel_k_array(nu, t)


def bessel_k_dt_symmetric(nu: float, t, cfg: QuadratureConfig | None = None):
    """The same derivative in the form ``-(K_{nu+1} + K_{nu-1}) / 2``."""
    if cfg is not None:
        return -0.5 * (bessel_k(nu + 1.0, t, cfg).value + bessel_k(nu - 1.0, t, cfg).value)
    return -0.5 * (bessel_k_array(nu + 1.0, t) + bessel_k_array(nu - 1.0, t))


def bessel_k_large_t(nu: float, t):
    """Leading large-argument form ``sqrt(pi/(2t)) e^{-t}`` (independent of nu)."""
    return np.sqrt(np.pi / (2.0 * np.asarray(t, dtype=float))) * np.exp(-np.asarray(t, dtype=float))


def bessel_k_small_t(nu: float, t):
    """Leading small-argument form: ``Gamma(|nu|)/2 (t/2)^{-|nu|}``, or ``-ln t`` at nu = 0."""
    t = np.asarray(t, dtype=float)
    a = abs(nu)
    if a == 0:
        return -np.log(t)
    return 0.5 * gamma_fn(a) * (0.5 * t) ** (-a)


# Lanczos approximation, g = 7, nine terms (relative error ~ 1e-15 for x > 0).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos_log(x: float) -> float:
    # log Gamma(x) for x >= 0.5
    z = x - 1.0
    s = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        s += c / (z + i)
    tt = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(tt) - tt + math.log(s)


def log_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    if x < 0.5:
        return _lanczos_log(x + 1.0) - math.log(x)
    return _lanczos_log(x)


def gamma_fn(x: float) -> float:
    """Gamma function for positive real x."""
    if not x > 0:
        raise ValueError(f"gamma_fn needs x > 0, got {x}")
    if x < 0.5:
        return gamma_fn(x + 1.0) / x
    if x == int(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    return math.exp(_lanczos_log(x))


def gauss_2f1(alpha: float, beta: float, gamma: float, z: float,
              cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Gauss hypergeometric F(alpha, beta; gamma; z) from the Euler integral.

    Valid for ``gamma > beta > 0`` and ``|z| < 1``.
    """
    if not gamma > beta > 0:
        raise ValueError(f"Euler integral needs gamma > beta > 0, got beta={beta}, gamma={gamma}")
    if not abs(z) < 1:
        raise ValueError(f"Euler integral needs |z| < 1, got z={z}")
    if z > 0.99 and alpha + beta >= gamma:
        warnings.warn(f"2F1 is near its singularity at z=1 (z={z}, alpha+beta >= gamma)",
                      RuntimeWarning, stacklevel=2)
    a1, a2 = beta - 1.0, gamma - beta - 1.0
    s_lo = -window_for_exponent(beta)
    s_hi = window_for_exponent(gamma - beta)

    def integrand(x, xc):
        return np.exp(a1 * np.log(x) + a2 * np.log(xc) - alpha * np.log1p(-z * x))

    val, _ = adaptive_tanh_sinh(integrand, cfg, s_lo=s_lo, s_hi=s_hi)
    # leading-order pieces beyond the outermost nodes; negligible unless the
    # window hit its floating-point cap
    x_lo = 1.0 / (1.0 + np.exp(-np.pi * np.sinh(s_lo)))
    xc_hi = 1.0 / (1.0 + np.exp(np.pi * np.sinh(s_hi)))
    val += x_lo ** beta / beta + xc_hi ** (gamma - beta) / (gamma - beta) * (1.0 - z) ** (-alpha)
    logpref = log_gamma(gamma) - log_gamma(beta) - log_gamma(gamma - beta)
    return math.exp(logpref) * val
