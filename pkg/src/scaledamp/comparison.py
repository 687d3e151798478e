"""Comparison argument for ``a(t) K'' + K' >= b(t) K^{1+alpha}`` and the Riccati subsolution.

The pipeline mirrors the analytic one: a functional H(t) is moved to
``tau = ln(1+t)`` and then rescaled to ``s = eps^{p(p-1)} tau``, where it
satisfies an inequality of comparison type. A subsolution ``H_2 = s H_3`` is
built from the Riccati flow ``H_3' = delta H_3^{(p+1)/2}``, whose blow-up time
``s*`` does not depend on eps. Ordering ``H_1 > H_2`` then forces H_1 to blow
up before ``s*``, i.e. ``T(eps) <= exp(s* eps^{-p(p-1)})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

# State magnitude treated as blow-up by every integrator in this module. A
# collapsed step size (solver status -1) with a large state also counts.
BLOWUP_STATE = 1e10


class OrderingViolation(ValueError):
    """Initial data or parameters do not satisfy the required ordering."""


@dataclass
class ComparisonProblem:
    """Two members of ``a(t) y'' + y' = b(t) y^{1+alpha} +/- forcing``.

    ``K_forcing`` must be >= 0 (K is a supersolution) and ``h_forcing`` <= 0
    (h is a subsolution); both default to zero, i.e. equality.
    """

    a: Callable[[float], float]
    b: Callable[[float], float]
    alpha: float
    K_init: tuple[float, float]
    h_init: tuple[float, float]
    K_forcing: Callable[[float], float] | None = None
    h_forcing: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        k0, k1 = self.K_init
        h0, h1 = self.h_init
        if min(k0, h0) <= 0:
            raise ValueError("K and h must start positive")
        if not k0 > h0:
            raise OrderingViolation(f"need K(0) > h(0), got K(0)={k0}, h(0)={h0}")
        if not k1 >= h1:
            raise OrderingViolation(f"need K'(0) >= h'(0), got K'(0)={k1}, h'(0)={h1}")

    def rhs(self, forcing):
        def f(t, y):
            a = self.a(t)
            b = self.b(t)
            extra = 0.0 if forcing is None else forcing(t)
            return [y[1], (b * abs(y[0]) ** (1.0 + self.alpha) + extra - y[1]) / a]
        return f


@dataclass
class _Member:
    t: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    blew_up: bool
    t_stop: float


def _integrate(fun, y0, t_end: float, step: float, t_start: float = 0.0,
               rtol: float = 1e-10) -> _Member:
    def hit(t, y):
        return BLOWUP_STATE - max(abs(y[0]), abs(y[1]))
    hit.terminal = True
    t_eval = np.arange(t_start, t_end + 0.5 * step, step)
    t_eval = t_eval[t_eval <= t_end]
    sol = solve_ivp(fun, (t_start, t_end), y0, method="DOP853", t_eval=t_eval, events=hit,
                    rtol=rtol, atol=1e-12, first_step=min(step, 1e-3))
    blew = bool(sol.t_events[0].size) or (sol.status == -1)
    t_stop = float(sol.t_events[0][0]) if sol.t_events[0].size else float(sol.t[-1])
    if sol.status == -1 and not sol.t_events[0].size:
        # step size collapsed: treat as blow-up only if the state is already large
        if max(abs(sol.y[0, -1]), abs(sol.y[1, -1])) < 1e3:
            raise RuntimeError(f"integrator failed at t={sol.t[-1]}: {sol.message}")
    return _Member(sol.t, sol.y[0], sol.y[1], blew, t_stop)


@dataclass
class ComparisonVerdict:
    times: np.ndarray
    K: np.ndarray
    K_prime: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray
    K_blowup: float | None
    h_blowup: float | None

    @property
    def derivative_ordered(self) -> bool:
        sel = self.times > 0
        return bool(np.all(self.K_prime[sel] > self.h_prime[sel]))

    @property
    def value_ordered(self) -> bool:
        return bool(np.all(self.K > self.h))

    @property
    def ordered(self) -> bool:
        return self.derivative_ordered and self.value_ordered

    @property
    def gap(self) -> np.ndarray:
        return self.K - self.h


def comparison_integrate(prob: ComparisonProblem, t_end: float, step: float) -> ComparisonVerdict:
    """Integrate both members on a common grid until t_end or the first blow-up."""
    if step <= 0 or t_end <= 0:
        raise ValueError("t_end and step must be positive")
    k = _integrate(prob.rhs(prob.K_forcing), list(prob.K_init), t_end, step)
    h = _integrate(prob.rhs(prob.h_forcing), list(prob.h_init), t_end, step)
    m = min(k.t.size, h.t.size)
    return ComparisonVerdict(k.t[:m], k.y[:m], k.yp[:m], h.y[:m], h.yp[:m],
                             k.t_stop if k.blew_up else None, h.t_stop if h.blew_up else None)


@dataclass(frozen=True)
class RiccatiSpec:
    delta: float
    s0: float
    H3_init: float
    p: float
    # required ratios for c0 << s0 << 1/delta
    ratio: float = 10.0

    def __post_init__(self):
        if self.delta <= 0 or self.H3_init <= 0:
            raise ValueError("delta and H3_init must be positive")
        if self.p <= 1:
            raise ValueError(f"p must be > 1, got {self.p}")
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")

    @classmethod
    def from_c0(cls, delta: float, s0: float, c0: float, p: float, **kw) -> "RiccatiSpec":
        return cls(delta, s0, c0 / 4.0, p, **kw)

    @property
    def c0(self) -> float:
        return 4.0 * self.H3_init

    def ordering_ratios(self) -> dict:
        """``s0 / c0`` and ``1 / (delta s0)``; both should be at least ``ratio``."""
        return {"s0_over_c0": self.s0 / self.c0, "inv_delta_over_s0": 1.0 / (self.delta * self.s0)}

    @property
    def ordering_ok(self) -> bool:
        r = self.ordering_ratios()
        return r["s0_over_c0"] >= self.ratio and r["inv_delta_over_s0"] >= self.ratio


def riccati_blowup_time(spec: RiccatiSpec) -> float:
    """``s* = s0 + 2 / (delta (p-1)) * H3_init^{-(p-1)/2}``."""
    return spec.s0 + 2.0 / (spec.delta * (spec.p - 1.0)) * spec.H3_init ** (-(spec.p - 1.0) / 2.0)


def riccati_solution(spec: RiccatiSpec, s):
    """Closed-form ``H_3(s)`` on ``[s0, s*)``; +inf at and beyond s*."""
    s = np.asarray(s, dtype=float)
    k = (spec.p - 1.0) / 2.0
    base = spec.H3_init ** (-k) - spec.delta * k * (s - spec.s0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(base > 0, np.abs(base) ** (-1.0 / k), np.inf)
    return out


def riccati_numeric_blowup(spec: RiccatiSpec, threshold: float = BLOWUP_STATE) -> float:
    """First s at which the adaptive solution of ``H_3' = delta H_3^{(p+1)/2}`` exceeds threshold."""
    s_star = riccati_blowup_time(spec)

    def f(s, y):
        return [spec.delta * abs(y[0]) ** ((spec.p + 1.0) / 2.0)]

    def hit(s, y):
        return threshold - y[0]
    hit.terminal = True
    span = (spec.s0, spec.s0 + 2.0 * (s_star - spec.s0))
    sol = solve_ivp(f, span, [spec.H3_init], method="DOP853", events=hit, rtol=1e-10,
                    atol=1e-12 * spec.H3_init)
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    if sol.status == -1:
        return float(sol.t[-1])
    return math.inf


@dataclass
class H2Check:
    grid: np.ndarray
    margin: np.ndarray            # K0 s^{1-p} H2^p - (eps^{p(p-1)} H2'' + 2 H2')
    value_at_s0: float
    slope_at_s0: float
    c0: float
    s0: float

    @property
    def differential_ok(self) -> bool:
        return bool(np.all(self.margin > 0))

    @property
    def value_ok(self) -> bool:
        return math.isclose(self.value_at_s0, self.c0 * self.s0 / 4.0, rel_tol=1e-12)

    @property
    def slope_ok(self) -> bool:
        return self.slope_at_s0 < self.c0

    @property
    def passed(self) -> bool:
        return self.differential_ok and self.value_ok and self.slope_ok


@dataclass
class Subsolution:
    """``H_2(s) = s H_3(s)`` with closed-form derivatives."""

    spec: RiccatiSpec
    epsilon: float
    K0: float
    check: H2Check | None = None

    @property
    def blowup_time(self) -> float:
        return riccati_blowup_time(self.spec)

    def H3(self, s):
        return riccati_solution(self.spec, s)

    def __call__(self, s):
        return np.asarray(s, dtype=float) * self.H3(s)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        h3 = self.H3(s)
        return h3 + s * self.spec.delta * h3 ** ((self.spec.p + 1.0) / 2.0)

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        d, p = self.spec.delta, self.spec.p
        h3 = self.H3(s)
        h3p = d * h3 ** ((p + 1.0) / 2.0)
        h3pp = 0.5 * d * d * (p + 1.0) * h3 ** p
        return 2.0 * h3p + s * h3pp

    def margin(self, s):
        s = np.asarray(s, dtype=float)
        p = self.spec.p
        lhs = self.epsilon ** (p * (p - 1.0)) * self.second_derivative(s) + 2.0 * self.derivative(s)
        return self.K0 * s ** (1.0 - p) * self(s) ** p - lhs


def subsolution_H2(spec: RiccatiSpec, epsilon: float = 1.0, K0: float = 1.0,
                   npts: int = 2000) -> Subsolution:
    """Build ``H_2 = s H_3`` and verify its three defining conditions.

    The differential inequality is checked on a grid of ``npts`` points
    clustered towards ``s*`` (stopping where H_2 reaches 1e10).
    """
    if not spec.ordering_ok:
        raise OrderingViolation(
            f"c0 << s0 << 1/delta fails at ratio {spec.ratio}: {spec.ordering_ratios()}")
    if epsilon <= 0 or K0 <= 0:
        raise ValueError("epsilon and K0 must be positive")
    sub = Subsolution(spec, epsilon, K0)
    s_star = sub.blowup_time
    # H_3 reaches 1e10 at s* - (2/(delta(p-1))) 1e10^{-(p-1)/2}
    k = (spec.p - 1.0) / 2.0
    s_end = s_star - 1.0 / (spec.delta * k) * (BLOWUP_STATE / spec.s0) ** (-k)
    frac = 1.0 - np.geomspace(1.0, 1e-12, npts)
    grid = spec.s0 + frac * (max(s_end, spec.s0) - spec.s0)
    sub.check = H2Check(grid, sub.margin(grid), float(sub(spec.s0)),
                        float(sub.derivative(spec.s0)), spec.c0, spec.s0)
    return sub


def lemma_coefficients(p: float, epsilon: float, K0: float):
    """``(a, b, alpha)`` putting the rescaled system in comparison form.

    ``eps^{p(p-1)} H'' + 2 H' >= K0 s^{1-p} H^p`` divided by two gives
    ``a = eps^{p(p-1)}/2``, ``b(s) = K0 s^{1-p}/2``, ``alpha = p - 1``.
    """
    a = 0.5 * epsilon ** (p * (p - 1.0))
    return (lambda s: a), (lambda s: 0.5 * K0 * s ** (1.0 - p)), p - 1.0


@dataclass
class PipelineResult:
    s_star: float
    H1_blowup: float | None
    H2_blowup: float
    ordered: bool
    subsolution_ok: bool
    H1_lines_ok: bool
    induced_C: float
    notes: list[str] = field(default_factory=list)

    @property
    def certificate(self) -> bool:
        return (self.ordered and self.subsolution_ok and self.H1_lines_ok
                and self.H1_blowup is not None and self.H1_blowup < self.s_star)


def end_to_end(spec: RiccatiSpec, epsilon: float = 0.5, K0: float = 1.0,
               step: float = 0.01) -> PipelineResult:
    """Compare a synthetic H_1 (equality case, H_1(s0) = c0 s0, H_1'(s0) = c0) with H_2.

    Time in the comparison lemma is ``s - s0``. ``induced_C`` is the constant
    in ``T <= exp(C eps^{-p(p-1)})`` implied by blow-up before s*.
    """
    sub = subsolution_H2(spec, epsilon, K0)
    p, c0, s0 = spec.p, spec.c0, spec.s0
    a, b, alpha = lemma_coefficients(p, epsilon, K0)
    shift_a = lambda t: a(t + s0)  # noqa: E731
    shift_b = lambda t: b(t + s0)  # noqa: E731
    # H_2 obeys the inequality with "<"; its forcing is the (negative) defect
    defect = lambda t: -0.5 * float(sub.margin(t + s0))  # noqa: E731
    prob = ComparisonProblem(shift_a, shift_b, alpha, (c0 * s0, c0),
                             (float(sub(s0)), float(sub.derivative(s0))),
                             K_forcing=None, h_forcing=defect)
    s_star = sub.blowup_time
    k = _integrate(prob.rhs(None), list(prob.K_init), s_star - s0, step)
    t = k.t
    h2 = sub(t + s0)
    h2p = sub.derivative(t + s0)
    finite = np.isfinite(h2) & (h2 < BLOWUP_STATE)
    ordered = bool(np.all(k.y[finite] > h2[finite])
                   and np.all(k.yp[finite][t[finite] > 0] > h2p[finite][t[finite] > 0]))
    lines = bool(np.all(k.y >= c0 * (t + s0) * (1 - 1e-12)) and np.all(k.yp >= c0 * (1 - 1e-12)))
    notes = []
    if not k.blew_up:
        notes.append("synthetic H_1 did not reach the blow-up threshold before s*")
    return PipelineResult(s_star, k.t_stop + s0 if k.blew_up else None, s_star, ordered,
                          sub.check.passed, lines, s_star, notes)


def h_chain_transform(H: Callable, p: float, epsilon: float):
    """Return ``(H0, H1)`` with ``H0(tau) = H(e^tau - 1)`` and ``H1(s) = eps^{p^2-2p} H0(eps^{-p(p-1)} s)``."""
    if p <= 1 or epsilon <= 0:
        raise ValueError("need p > 1 and epsilon > 0")

    def H0(tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(tau <= 0):
            raise ValueError("H0 is defined for tau > 0 (t > 0)")
        return H(np.expm1(tau))

    def H1(s):
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0):
            raise ValueError("H1 is defined for s > 0")
        return epsilon ** (p * p - 2.0 * p) * H0(epsilon ** (-p * (p - 1.0)) * s)

    return H0, H1


def chain_derivatives(H_prime: Callable, H_second: Callable, tau):
    """``H0'(tau) = (1+t) H'(t)`` and ``H0''(tau) = (1+t)^2 H''(t) + (1+t) H'(t)``."""
    tau = np.asarray(tau, dtype=float)
    t = np.expm1(tau)
    d1 = (1.0 + t) * H_prime(t)
    d2 = (1.0 + t) ** 2 * H_second(t) + (1.0 + t) * H_prime(t)
    return d1, d2


def tau_of_t(t):
    return np.log1p(np.asarray(t, dtype=float))


def t_of_tau(tau):
    return np.expm1(np.asarray(tau, dtype=float))


def lifespan_bound(epsilon: float, C: float, p: float) -> float:
    """``exp(C eps^{-p(p-1)})``, or +inf once the exponent leaves the float range."""
    if epsilon <= 0 or C <= 0 or p <= 1:
        raise ValueError("need epsilon > 0, C > 0 and p > 1")
    try:
        return math.exp(C * epsilon ** (-p * (p - 1.0)))
    except OverflowError:
        return math.inf
