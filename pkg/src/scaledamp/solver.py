"""Radial finite-difference solver for the semilinear damped wave equation

    u_tt - u_rr - (n-1)/r u_r + mu/(1+t) u_t = |u|^p,   u(0) = eps f, u_t(0) = eps g,

with lifespan detection, epsilon sweeps and scaling-law fits.

Time stepping is leapfrog with the damping term centred on the half-step
average, which makes each update a scalar division per node. The origin uses
the regularity limit ``Delta u -> n u_rr`` with the ghost value u(-dr) = u(dr),
and u = 0 is imposed at r_max (never reached by the solution as long as
r_max >= t_max + 1/2).
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .exponents import ModelParams, subcritical_lifespan_slope
from .quadrature import simpson_weights
from .testfunctions import sphere_area

log = logging.getLogger(__name__)

# Stated on every critical-mode output: lifespans below this window are out of reach.
CRITICAL_EPS_WINDOW = (0.3, 1.2)

# Height of the default data. With unit height no run in the critical window
# blows up before t ~ 300; height 10 puts eps in [0.3, 1.2] within reach.
DEFAULT_AMPLITUDE = 10.0

# |u| below this fraction of its current maximum counts as outside the support.
SUPPORT_REL_TOL = 1e-2


def bump(r):
    """Profile (1 - (2r)^2)^4 on r <= 1/2, zero outside."""
    r = np.asarray(r, dtype=float)
    return np.where(r < 0.5, np.clip(1.0 - 4.0 * r * r, 0.0, None) ** 4, 0.0)


def default_profile(r):
    """``DEFAULT_AMPLITUDE * bump(r)``; used for both f and g unless overridden."""
    return DEFAULT_AMPLITUDE * bump(r)


@dataclass(frozen=True)
class DataPair:
    """Radial initial data; both profiles nonnegative and supported in r <= support_radius."""

    f: Callable = default_profile
    g: Callable = default_profile
    support_radius: float = 0.5

    def __post_init__(self):
        if not 0 < self.support_radius <= 0.5:
            raise ValueError("initial data must be supported in r <= 1/2")

    def validate(self, r: np.ndarray, allow_zero: bool = False):
        """Sample f and g on r and check sign and support.

        ``allow_zero`` admits the trivial pair, which the solver can integrate
        but which carries no blow-up information.
        """
        fv, gv = np.asarray(self.f(r), float), np.asarray(self.g(r), float)
        if np.any(fv < 0) or np.any(gv < 0):
            raise ValueError("initial data must be nonnegative")
        outside = r > self.support_radius
        if np.any(fv[outside] != 0) or np.any(gv[outside] != 0):
            raise ValueError(f"initial data not supported in r <= {self.support_radius}")
        if not allow_zero and not (np.any(fv > 0) or np.any(gv > 0)):
            raise ValueError("initial data vanish identically")
        return fv, gv


def zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True, eq=False)
class SampledProfile:
    """Piecewise-linear profile through stored grid values, zero beyond the grid."""

    r: np.ndarray
    values: np.ndarray

    def __call__(self, r):
        return np.interp(np.asarray(r, dtype=float), self.r, self.values, right=0.0)


def data_from_trace(trace: "SimulationTrace") -> DataPair:
    """Recover the (unscaled) initial data stored with a trace."""
    if trace.data_f is None or trace.data_g is None or trace.r is None:
        raise ValueError("trace does not carry its initial data")
    return DataPair(SampledProfile(trace.r, trace.data_f), SampledProfile(trace.r, trace.data_g))


class Status(str, enum.Enum):
    BLEW_UP = "blew_up"
    CENSORED = "censored"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class SolverConfig:
    dr: float = 0.01
    cfl: float = 0.7
    r_max: float | None = None        # defaults to t_max + 1
    blowup_threshold: float = 1e8
    t_max: float = 30.0
    output_every: float = 0.05        # time between stored samples
    store_fields: bool = False

    def __post_init__(self):
        if self.dr <= 0:
            raise ValueError("dr must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.radius < self.t_max + 0.5:
            raise ValueError(
                f"r_max={self.radius} < t_max + 1/2 = {self.t_max + 0.5}: the light cone "
                "would reach the outer boundary")

    @property
    def radius(self) -> float:
        return self.t_max + 1.0 if self.r_max is None else self.r_max

    @property
    def dt(self) -> float:
        return self.cfl * self.dr


@dataclass
class LifespanEstimate:
    epsilon: float
    T_blowup: float
    max_amplitude: float
    status: Status

    def as_row(self) -> dict:
        return {"epsilon": self.epsilon, "T": self.T_blowup, "status": self.status.value,
                "max_amplitude": self.max_amplitude}


@dataclass
class SimulationTrace:
    """Sampled history of one run.

    ``u`` (and ``r``) are populated only when the solver stores fields.
    """

    params: ModelParams
    times: np.ndarray
    sup_abs: np.ndarray
    lp_integral: np.ndarray
    support: np.ndarray
    r: np.ndarray | None = None
    u: np.ndarray | None = None
    dr: float = 0.0
    data_f: np.ndarray | None = None
    data_g: np.ndarray | None = None

    def save(self, path):
        arrays = dict(times=self.times, sup_abs=self.sup_abs, lp_integral=self.lp_integral,
                      support=self.support,
                      params=np.array([self.params.n, self.params.mu, self.params.p,
                                       self.params.epsilon]),
                      dr=np.array(self.dr))
        for name in ("r", "u", "data_f", "data_g"):
            val = getattr(self, name)
            if val is not None:
                arrays[name] = val
        np.savez_compressed(path, **arrays)

    def truncated(self, t_end: float) -> "SimulationTrace":
        """Copy restricted to samples with t <= t_end."""
        keep = self.times <= t_end
        return replace(self, times=self.times[keep], sup_abs=self.sup_abs[keep],
                       lp_integral=self.lp_integral[keep], support=self.support[keep],
                       u=None if self.u is None else self.u[keep])

    @classmethod
    def load(cls, path) -> "SimulationTrace":
        with np.load(path) as z:
            n, mu, p, eps = z["params"]
            get = lambda k: z[k] if k in z.files else None  # noqa: E731
            return cls(ModelParams(int(n), float(mu), float(p), float(eps)),
                       z["times"], z["sup_abs"], z["lp_integral"], z["support"],
                       get("r"), get("u"), float(z["dr"]), get("data_f"), get("data_g"))


def radial_laplacian(u: np.ndarray, dr: float, n: int, out: np.ndarray | None = None) -> np.ndarray:
    """Second-order radial Laplacian on r_j = j dr, with u = 0 beyond the last node."""
    if out is None:
        out = np.empty_like(u)
    j = np.arange(1, u.size - 1)
    up, um, uc = u[2:], u[:-2], u[1:-1]
    out[1:-1] = (up - 2.0 * uc + um) / dr**2 + (n - 1) / (j * dr) * (up - um) / (2.0 * dr)
    out[0] = n * 2.0 * (u[1] - u[0]) / dr**2
    out[-1] = 0.0
    return out


def radial_weights(nr: int, dr: float, n: int) -> np.ndarray:
    """Simpson weights for int_{R^n} F(|x|) dx = |S^{n-1}| int F(r) r^{n-1} dr."""
    r = np.arange(nr) * dr
    return sphere_area(n) * simpson_weights(nr, dr) * r ** (n - 1)


@lru_cache(maxsize=16)
def stable_cfl(n: int, nr: int = 400) -> float:
    """Largest dt/dr for which leapfrog on the discrete radial Laplacian is stable.

    Leapfrog needs dt^2 * rho(L) <= 4. The spectral radius is set by the
    origin row and grows with n, so the limit drops below 1 for n >= 2.
    The value is essentially independent of the grid length.
    """
    lap = np.zeros((nr, nr))
    e = np.zeros(nr)
    for j in range(nr):
        e[:] = 0.0
        e[j] = 1.0
        lap[:, j] = radial_laplacian(e, 1.0, n)
    rho = float(np.max(np.abs(np.linalg.eigvals(lap[:-1, :-1]))))
    return 2.0 / math.sqrt(rho)


def support_radius(u: np.ndarray, dr: float, rel_tol: float = SUPPORT_REL_TOL) -> float:
    """Largest radius where |u| exceeds rel_tol times its maximum."""
    peak = np.max(np.abs(u))
    if peak == 0:
        return 0.0
    idx = np.nonzero(np.abs(u) > rel_tol * peak)[0]
    return float(idx[-1] * dr)


def run(params: ModelParams, data: DataPair = DataPair(), cfg: SolverConfig = SolverConfig(),
        nonlinear: bool = True) -> tuple[SimulationTrace, LifespanEstimate]:
    """Integrate one solution until blow-up, instability or ``cfg.t_max``."""
    n, mu, p, eps = params.n, params.mu, params.p, params.epsilon
    dr, dt = cfg.dr, cfg.dt
    limit = stable_cfl(n)
    if cfg.cfl > limit:
        raise ValueError(f"cfl={cfg.cfl} exceeds the stability limit {limit:.4f} for n={n}")
    nr = int(round(cfg.radius / dr)) + 1
    r = np.arange(nr) * dr
    fv, gv = data.validate(r, allow_zero=True)
    weights = radial_weights(nr, dr, n)
    nsteps = int(math.ceil(cfg.t_max / dt - 1e-9))
    every = max(1, int(round(cfg.output_every / dt)))

    times, sups, lps, supps, fields = [], [], [], [], []

    def record(k, u):
        times.append(k * dt)
        sups.append(float(np.max(np.abs(u))))
        lps.append(float(weights @ np.abs(u) ** p))
        supps.append(support_radius(u, dr))
        if cfg.store_fields:
            fields.append(u.copy())

    u_prev = eps * fv
    v0 = eps * gv
    lap = radial_laplacian(u_prev, dr, n)
    src = np.abs(u_prev) ** p if nonlinear else 0.0
    u_cur = u_prev + dt * v0 + 0.5 * dt * dt * (lap - mu * v0 + src)
    u_cur[-1] = 0.0
    record(0, u_prev)

    status, t_blow = Status.CENSORED, cfg.t_max
    peak = float(np.max(np.abs(u_prev)))
    k = 1
    if not np.all(np.isfinite(u_cur)):
        status, t_blow = Status.UNSTABLE, dt
    elif np.max(np.abs(u_cur)) > cfg.blowup_threshold:
        status, t_blow = Status.BLEW_UP, 0.5 * dt
    else:
        if every == 1:
            record(1, u_cur)
        u_next = np.empty_like(u_cur)
        while k < nsteps:
            t = k * dt
            d = 0.5 * mu * dt / (1.0 + t)
            radial_laplacian(u_cur, dr, n, out=lap)
            rhs = lap + np.abs(u_cur) ** p if nonlinear else lap
            np.multiply(u_cur, 2.0, out=u_next)
            u_next -= (1.0 - d) * u_prev
            u_next += dt * dt * rhs
            u_next /= 1.0 + d
            u_next[-1] = 0.0
            u_prev, u_cur, u_next = u_cur, u_next, u_prev
            k += 1
            amp = float(np.max(np.abs(u_cur)))
            if not math.isfinite(amp):
                status, t_blow = Status.UNSTABLE, (k - 0.5) * dt
                break
            peak = max(peak, amp)
            if amp > cfg.blowup_threshold:
                status, t_blow = Status.BLEW_UP, (k - 0.5) * dt
                break
            if k % every == 0:
                record(k, u_cur)

    trace = SimulationTrace(
        params=params, times=np.array(times), sup_abs=np.array(sups),
        lp_integral=np.array(lps), support=np.array(supps),
        r=r if cfg.store_fields else None,
        u=np.array(fields) if cfg.store_fields else None, dr=dr,
        data_f=fv if cfg.store_fields else None, data_g=gv if cfg.store_fields else None)
    est = LifespanEstimate(eps, t_blow, peak, status)
    log.debug("eps=%g status=%s T=%g", eps, status.value, t_blow)
    return trace, est


def _run_estimate(args):
    params, data, cfg = args
    return run(params, data, replace(cfg, store_fields=False))[1]


def sweep(params_base: ModelParams, epsilons: Sequence[float], data: DataPair = DataPair(),
          cfg: SolverConfig = SolverConfig(), workers: int = 1) -> list[LifespanEstimate]:
    """Independent runs for each epsilon, returned in the order given.

    Censored runs stay in the list (status ``censored``); nothing is dropped.
    """
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps):
        raise ValueError("epsilons must be positive")
    if any(b < a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be sorted")
    jobs = [(params_base.with_epsilon(e), data, cfg) for e in eps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_estimate, jobs))
    return [_run_estimate(j) for j in jobs]


class FitMode(str, enum.Enum):
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"


class InsufficientData(ValueError):
    pass


@dataclass
class ScalingFit:
    mode: FitMode
    slope: float
    intercept: float
    r_squared: float
    transformed_x: str
    n_used: int
    n_censored: int
    predicted_slope: float | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"mode": self.mode.value, "slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "transformed_x": self.transformed_x,
                "n_used": self.n_used, "n_censored": self.n_censored,
                "predicted_slope": self.predicted_slope, "notes": list(self.notes)}


def fit_scaling(results: Sequence[LifespanEstimate], mode: FitMode | str,
                params: ModelParams) -> ScalingFit:
    """Least-squares fit of measured lifespans.

    critical:    ln T = slope * eps^{-p(p-1)} + intercept
    subcritical: ln T = slope * ln eps + intercept, compared with -2p(p-1)/gamma(p, n+mu)
    """
    mode = FitMode(mode)
    used = [e for e in results if e.status is Status.BLEW_UP]
    n_cens = sum(1 for e in results if e.status is not Status.BLEW_UP)
    if len(used) < 4:
        raise InsufficientData(
            f"need >= 4 blow-up runs for a fit, have {len(used)} ({n_cens} censored/unstable)")
    eps = np.array([e.epsilon for e in used])
    y = np.log([e.T_blowup for e in used])
    p = params.p
    notes = []
    if mode is FitMode.CRITICAL:
        x = eps ** (-p * (p - 1.0))
        desc = f"eps^(-p(p-1)), p(p-1)={p * (p - 1.0):.6g}"
        predicted = None
        lo, hi = CRITICAL_EPS_WINDOW
        notes.append(f"critical fits use eps in [{lo}, {hi}]; the exponential constant is "
                     "fitted, not predicted")
    else:
        x = np.log(eps)
        desc = "ln eps"
        predicted = subcritical_lifespan_slope(p, params.n, params.mu)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(mode, float(slope), float(intercept), min(max(r2, 0.0), 1.0), desc,
                      len(used), n_cens, predicted, notes)


def spherical_wave_reference(r, t: float, f: Callable = bump, g: Callable = bump,
                             nodes: int = 64) -> np.ndarray:
    """Exact solution of the free 3-D radial wave equation (mu = 0, no source).

    v = r u solves the 1-D wave equation with odd data r f(|r|), r g(|r|);
    d'Alembert gives v, and u = v / r (u(0) from the limit d v/dr).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))

    def v0(s):
        return s * f(np.abs(s))

    def v1(s):
        return s * g(np.abs(s))

    x, w = np.polynomial.legendre.leggauss(nodes)
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        a, b = ri - t, ri + t
        # split the d'Alembert integral where the odd extension has kinks
        cuts = sorted({a, b} | {c for c in (-0.5, 0.0, 0.5) if a < c < b})
        integral = 0.0
        for lo, hi in zip(cuts, cuts[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            integral += half * np.dot(w, v1(mid + half * x))
        if ri == 0.0:
            h = 1e-5
            dv0 = (v0(t + h) - v0(t - h)) / (2 * h)
            out[i] = dv0 + v1(t)
        else:
            out[i] = (0.5 * (v0(a) + v0(b)) + 0.5 * integral) / ri
    return out


def predicted_subcritical_slope(params: ModelParams) -> float:
    return subcritical_lifespan_slope(params.p, params.n, params.mu)
