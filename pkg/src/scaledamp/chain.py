"""Functionals built from numerical solutions and the inequalities they obey.

Everything here works on a stored :class:`~scaledamp.solver.SimulationTrace`
(fields on a radial grid at the output times). Space integrals use Simpson
weights with the ``|S^{n-1}| r^{n-1}`` factor, time integrals are exact
antiderivatives of a cubic spline through the output samples and time derivatives are central differences
(one-sided second order at the ends).

Two constants appear for the data. ``c_fg`` is the weighted data integral
with coefficient ``mu - 2 lambda_1'(0)/lambda_1(0)`` on f; ``initial_flux``
is the exact value at t = 0 of the conserved-up-to-a-source quantity
``int (u_t psi - u psi_t + mu/(1+t) u psi)``, which is what actually bounds
``G_1`` from below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .exponents import ModelParams, lp_decay_exponent
from .solver import DataPair, SimulationTrace, radial_weights
from .special import bessel_k_array
from .testfunctions import TestFunction, TestFunctionSpec, lambda_eta, lambda_eta_dt, phi_eta


class GridCoverageError(ValueError):
    """The stored grid does not contain the light cone |x| <= t + 1/2."""


class WindowTooShort(ValueError):
    pass


@dataclass
class FunctionalTrace:
    times: np.ndarray
    G1: np.ndarray
    G: np.ndarray
    G_prime: np.ndarray
    Lp_norm_p: np.ndarray
    nested_integral: np.ndarray
    # int b_q |u|^p dx, so that G'' = (1+t) * weighted_source
    weighted_source: np.ndarray = None
    triple_integral: np.ndarray = None
    epsilon: float = 1.0
    p: float = 2.0

    @property
    def G_second(self) -> np.ndarray:
        return (1.0 + self.times) * self.weighted_source

    def triple_identity_residual(self) -> np.ndarray:
        """Relative gap between int (t-tau)^2 S and 2 (t+1)^2 int (1+tau)^-3 G."""
        rhs = 2.0 * (self.times + 1.0) ** 2 * self.nested_integral
        scale = np.maximum(np.abs(self.triple_integral), np.abs(rhs))
        out = np.zeros_like(rhs)
        nz = scale > 0
        out[nz] = np.abs(self.triple_integral[nz] - rhs[nz]) / scale[nz]
        return out


def _time_integral(y, t, times: int = 1):
    """``times``-fold integral from the first sample, sampled at t.

    The samples are interpolated by a not-a-knot cubic spline whose
    antiderivatives are exact, so nested integrals stay fourth-order accurate
    right from the first interval.
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if y.size < 4:
        raise ValueError("need at least 4 samples for time integration")
    return CubicSpline(t, y).antiderivative(times)(t)


def _time_derivative(y, t):
    return np.gradient(y, t, edge_order=2)


def _check_trace(trace: SimulationTrace):
    if trace.u is None or trace.r is None:
        raise ValueError("trace carries no stored fields; run the solver with store_fields=True")
    if trace.times.size < 4:
        raise ValueError("need at least 4 stored time samples")
    r_max = float(trace.r[-1])
    t_last = float(trace.times[-1])
    if r_max < t_last + 0.5:
        raise GridCoverageError(
            f"grid ends at r={r_max} but the support reaches t + 1/2 = {t_last + 0.5}")


def pre_blowup(trace: SimulationTrace, fraction: float = 0.9) -> SimulationTrace:
    """Drop the samples after ``fraction`` of the last stored time.

    The final output steps before blow-up are not resolved in time; the
    integrated identities are checked on the window before them.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    return trace.truncated(fraction * float(trace.times[-1]))


def lambda_ratio(t, mu: float):
    """``lambda_1'(t) / lambda_1(t)``."""
    return lambda_eta_dt(1.0, t, mu) / lambda_eta(1.0, t, mu)


def _radial_grid(nr: int = 201, radius: float = 0.5):
    r = np.linspace(0.0, radius, nr)
    return r, r[1] - r[0]


def c_fg(data: DataPair, n: int, mu: float, cfg=None) -> float:
    """``int (lambda_1(0) g + (mu - 2 lambda_1'(0)/lambda_1(0)) f) phi_1 dx``."""
    r, dr = _radial_grid()
    fv, gv = data.validate(r)
    w = radial_weights(r.size, dr, n)
    lam0 = float(lambda_eta(1.0, 0.0, mu))
    coef = mu - 2.0 * float(lambda_ratio(0.0, mu))
    return float(w @ ((lam0 * gv + coef * fv) * phi_eta(1.0, r, n)))


def f_coefficient(mu: float) -> float:
    """The f weight ``mu - 2 lambda_1'(0)/lambda_1(0)`` of ``c_fg``, via Bessel values at 1."""
    nu = 0.5 * (mu - 1.0)
    k = bessel_k_array(nu, 1.0)
    return float(-1.0 + (bessel_k_array(nu + 1.0, 1.0) + bessel_k_array(nu - 1.0, 1.0)) / k)


def initial_flux(data: DataPair, n: int, mu: float) -> float:
    """``int (lambda_1(0) g + (mu lambda_1(0) - lambda_1'(0)) f) phi_1 dx``.

    Equals the t = 0 value of ``int (u_t psi - u psi_t + mu u psi) dx`` per unit
    epsilon; the G_1 differential inequality and its integrated lower bound hold
    with this constant.
    """
    r, dr = _radial_grid()
    fv, gv = data.validate(r)
    w = radial_weights(r.size, dr, n)
    lam0 = float(lambda_eta(1.0, 0.0, mu))
    dlam0 = float(lambda_eta_dt(1.0, 0.0, mu))
    return float(w @ ((lam0 * gv + (mu * lam0 - dlam0) * fv) * phi_eta(1.0, r, n)))


def lp_lower_bound(t, params: ModelParams, t0: float = 0.0):
    """``eps^p (1+t)^{n-1-(n+mu-1)p/2}`` with unit constant, for t > t0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= t0):
        raise ValueError(f"lower bound is asserted only for t > T0 = {t0}")
    e = lp_decay_exponent(params.n, params.mu, params.p)
    return params.epsilon ** params.p * (1.0 + t) ** e


@dataclass
class SlopeCheck:
    slope: float
    predicted: float
    margin: float
    fitted_constant: float
    window: tuple[float, float]

    @property
    def passed(self) -> bool:
        return self.slope >= self.predicted - self.margin and self.fitted_constant > 0


def lp_slope_check(trace: SimulationTrace, t0: float = 1.0, t_end: float | None = None,
                   margin: float = 0.2) -> SlopeCheck:
    """Log-log slope of ``int |u|^p dx`` against ``1+t`` on (t0, t_end).

    ``t_end`` defaults to 0.9 of the last stored time. The fitted constant is
    the smallest ratio of the measured integral to :func:`lp_lower_bound`.
    """
    params = trace.params
    t = trace.times
    t_end = 0.9 * float(t[-1]) if t_end is None else t_end
    sel = (t > t0) & (t < t_end) & (trace.lp_integral > 0)
    if sel.sum() < 3:
        raise WindowTooShort(f"only {int(sel.sum())} samples in ({t0}, {t_end})")
    x = np.log1p(t[sel])
    y = np.log(trace.lp_integral[sel])
    slope = float(np.polyfit(x, y, 1)[0])
    const = float(np.min(trace.lp_integral[sel] / lp_lower_bound(t[sel], params)))
    pred = lp_decay_exponent(params.n, params.mu, params.p)
    return SlopeCheck(slope, pred, margin, const, (t0, t_end))


@dataclass
class _SpaceIntegrals:
    source: np.ndarray      # int b_q |u|^p
    A: np.ndarray           # int u b_q
    Bf: np.ndarray          # int (mu b_q/(1+t) - 2 b_qt) u
    G1: np.ndarray          # int u psi
    lp: np.ndarray          # int |u|^p


def _space_integrals(trace: SimulationTrace, tf: TestFunction, with_b: bool = True):
    _check_trace(trace)
    n, mu, p = trace.params.n, trace.params.mu, trace.params.p
    r = trace.r
    w = radial_weights(r.size, trace.dr, n)
    phi1 = phi_eta(1.0, r, n)
    k = trace.times.size
    out = _SpaceIntegrals(*(np.zeros(k) for _ in range(5)))
    for i, (t, u) in enumerate(zip(trace.times, trace.u)):
        up = np.abs(u) ** p
        out.lp[i] = w @ up
        out.G1[i] = float(lambda_eta(1.0, t, mu)) * (w @ (u * phi1))
        if with_b:
            b = tf.b_grid(r, float(t))
            bt = mu / (1.0 + t) * b - tf.b_tilde_grid(r, float(t), shift=1.0)
            out.source[i] = w @ (b * up)
            out.A[i] = w @ (u * b)
            out.Bf[i] = w @ ((mu / (1.0 + t) * b - 2.0 * bt) * u)
    return out


def g_functional(trace: SimulationTrace, spec: TestFunctionSpec) -> FunctionalTrace:
    """G, G', the nested integral and the triple integral along a stored run."""
    tf = TestFunction(spec)
    ints = _space_integrals(trace, tf)
    t = trace.times
    g2 = (1.0 + t) * ints.source
    gp = _time_integral(g2, t)
    g = _time_integral(g2, t, 2)
    nested = _time_integral((1.0 + t) ** -3 * g, t)
    triple = 2.0 * _time_integral(ints.source, t, 3)
    return FunctionalTrace(t.copy(), ints.G1, g, gp, ints.lp, nested, ints.source, triple,
                           trace.params.epsilon, trace.params.p)


@dataclass
class KeyInequalityReport:
    times: np.ndarray
    ratio: np.ndarray
    inf_ratio: float
    seed_coefficient: float
    seed_lower: float
    seed_window_start: float
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.inf_ratio > 0 and self.seed_coefficient > 0)

    def as_dict(self) -> dict:
        return {"inf_ratio": self.inf_ratio, "fitted_K": self.inf_ratio,
                "seed_coefficient": self.seed_coefficient, "seed_lower": self.seed_lower,
                "seed_window_start": self.seed_window_start, "passed": self.passed,
                "notes": list(self.notes)}


def check_key_inequality(ft: FunctionalTrace, p: float, t_min: float = 2.0,
                         t0: float = 0.5, min_samples: int = 10) -> KeyInequalityReport:
    """Ratio ``G'(t) / [(ln(1+t))^{1-p} (1+t) H(t)^p]`` on t > t_min, and the quadratic seed.

    ``H`` is the nested integral. The seed fit regresses G on ``eps^p (t-t0)^2``
    over ``t > 4 t0`` (through the origin) and also reports the smallest ratio.
    """
    t = ft.times
    sel = t > t_min
    if sel.sum() < min_samples:
        raise WindowTooShort(f"{int(sel.sum())} samples with t > {t_min}; need {min_samples}")
    ts = t[sel]
    denom = np.log1p(ts) ** (1.0 - p) * (1.0 + ts) * ft.nested_integral[sel] ** p
    ratio = ft.G_prime[sel] / denom
    notes = []
    seed_sel = t > 4.0 * t0
    x = ft.epsilon ** p * (t[seed_sel] - t0) ** 2
    y = ft.G[seed_sel]
    if x.size == 0:
        coef, lower = float("nan"), float("nan")
        notes.append("no samples beyond 4*T0 for the quadratic seed")
    else:
        coef = float(x @ y / (x @ x))
        lower = float(np.min(y / x))
    return KeyInequalityReport(ts, ratio, float(np.min(ratio)), coef, lower, 4.0 * t0, notes)


@dataclass
class G1Report:
    times: np.ndarray
    G1: np.ndarray
    residual: np.ndarray          # G1' + (mu/(1+t) - 2 lambda'/lambda) G1 - eps*flux
    lower_bound: np.ndarray       # integrated lower bound with the exact flux
    flux: float
    c_fg: float
    epsilon: float

    def min_scaled_residual(self) -> float:
        return float(np.min(self.residual) / (self.epsilon * self.flux))

    def min_scaled_gap(self) -> float:
        gap = self.G1 - self.lower_bound
        scale = np.maximum(self.lower_bound, self.epsilon * self.flux)
        return float(np.min(gap / scale))


def g1_functional(trace: SimulationTrace, n: int, mu: float,
                  data: DataPair | None = None) -> G1Report:
    """``G_1(t) = int u psi dx`` with its differential residual and integrated lower bound."""
    if trace.params.n != n or trace.params.mu != mu:
        raise ValueError("trace parameters do not match (n, mu)")
    ints = _space_integrals(trace, None, with_b=False)
    t = trace.times
    eps = trace.params.epsilon
    data = DataPair() if data is None else data
    flux = initial_flux(data, n, mu)
    g1 = ints.G1
    a = mu / (1.0 + t) - 2.0 * lambda_ratio(t, mu)
    resid = _time_derivative(g1, t) + a * g1 - eps * flux
    nu = 0.5 * (mu - 1.0)
    k2 = bessel_k_array(nu, 1.0 + t) ** 2
    inner = _time_integral(1.0 / ((1.0 + t) * k2), t)
    lower = eps * flux * (1.0 + t) * k2 * inner
    return G1Report(t.copy(), g1, resid, lower, flux, c_fg(data, n, mu), eps)


@dataclass
class IntegralInequalityReport:
    times: np.ndarray
    lhs: np.ndarray               # 1/2 int (t-tau)^2 S
    rhs: np.ndarray               # int A + int (t-tau) Bf
    dropped: np.ndarray           # t A(0) + t^2/2 * eps * boundary_term
    boundary_term: float
    identity_residual: float      # max relative mismatch of the exact identity

    def min_scaled_gap(self) -> float:
        scale = np.maximum(np.abs(self.lhs), np.abs(self.rhs))
        nz = scale > 0
        return float(np.min((self.rhs[nz] - self.lhs[nz]) / scale[nz])) if nz.any() else 0.0

    @property
    def holds(self) -> bool:
        return bool(np.all(self.rhs >= self.lhs))


def boundary_term(data: DataPair, spec: TestFunctionSpec) -> float:
    """``int [g b_q(.,0) + f b~_{q+1}(.,0)] dx`` per unit epsilon."""
    r, dr = _radial_grid()
    fv, gv = data.validate(r)
    tf = TestFunction(spec)
    w = radial_weights(r.size, dr, spec.n)
    return float(w @ (gv * tf.b_grid(r, 0.0) + fv * tf.b_tilde_grid(r, 0.0, shift=1.0)))


def check_integral_inequality(trace: SimulationTrace, spec: TestFunctionSpec,
                              data: DataPair | None = None) -> IntegralInequalityReport:
    """Both sides of the integrated inequality and the identity that links them.

    The identity is ``1/2 int (t-tau)^2 S = int A - t A(0) - t^2/2 eps D + int (t-tau) Bf``
    with D the boundary term; the inequality follows because the dropped terms
    are nonnegative for nonnegative data.
    """
    data = DataPair() if data is None else data
    ints = _space_integrals(trace, TestFunction(spec))
    t = trace.times
    eps = trace.params.epsilon
    lhs = _time_integral(ints.source, t, 3)
    rhs = _time_integral(ints.A, t) + _time_integral(ints.Bf, t, 2)
    d = boundary_term(data, spec)
    dropped = t * ints.A[0] + 0.5 * t * t * eps * d
    ident = rhs - dropped - lhs
    scale = np.maximum(np.abs(rhs), np.abs(lhs))
    nz = scale > 0
    resid = float(np.max(np.abs(ident[nz]) / scale[nz])) if nz.any() else 0.0
    return IntegralInequalityReport(t.copy(), lhs, rhs, dropped, d, resid)
