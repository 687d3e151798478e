"""Quadrature rules shared by the special-function and test-function code.

The workhorse is the tanh-sinh (double exponential) rule on [0, 1]. It copes
with integrable algebraic and logarithmic endpoint singularities, and with a
fixed step its error is a smooth function of any parameters in the integrand,
which keeps finite differences of the resulting quantities clean.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """Refinement budget exhausted before the requested tolerance was met."""


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_refinements: int = 8
    # log-integrand drop (in e-folds) at which semi-infinite integrals are cut
    truncation_bound: float = 40.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")
        if self.truncation_bound <= 0:
            raise ValueError("truncation_bound must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=64)
def tanh_sinh_unit(h: float, s_lo: float = -4.5, s_hi: float = 3.2):
    """Nodes on (0, 1) with their complements and weights.

    Returns ``(x, xc, w)`` where ``xc = 1 - x`` is computed without
    cancellation. The default window reaches x ~ 1e-61 at the lower end, where
    integrable singularities live in this package, and stops at
    1 - x ~ 1e-15 at the upper end.
    """
    k = np.arange(int(np.floor(s_lo / h)), int(np.ceil(s_hi / h)) + 1)
    s = k * h
    u = np.clip(np.pi * np.sinh(s), -700.0, 700.0)
    x = 1.0 / (1.0 + np.exp(-u))
    xc = 1.0 / (1.0 + np.exp(u))
    w = h * np.pi * np.cosh(s) * x * xc
    keep = (x > 0) & (xc > 0) & (w > 0)
    x, xc, w = x[keep], xc[keep], w[keep]
    for arr in (x, xc, w):
        arr.setflags(write=False)
    return x, xc, w


def tanh_sinh(f, h: float = 1.0 / 32, s_lo: float = -4.5, s_hi: float = 6.0) -> float:
    """Fixed-step tanh-sinh estimate of ``int_0^1 f(x) dx``.

    ``f`` is called once as ``f(x, 1 - x)`` with node arrays.
    """
    x, xc, w = tanh_sinh_unit(h, s_lo, s_hi)
    vals = np.asarray(f(x, xc), dtype=float)
    return float(np.sum(w * vals))


def adaptive_tanh_sinh(f, cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                       h0: float = 0.25, s_lo: float = -4.5, s_hi: float = 6.0):
    """Halve the tanh-sinh step until successive estimates agree.

    Returns ``(value, error_estimate)``. The estimate is the difference of
    the last two levels, which overstates the error of the finer one because
    the rule converges exponentially.
    """
    h = h0
    prev = tanh_sinh(f, h, s_lo, s_hi)
    for _ in range(cfg.max_refinements):
        h /= 2.0
        cur = tanh_sinh(f, h, s_lo, s_hi)
        err = abs(cur - prev)
        if err <= max(cfg.abs_tol, cfg.rel_tol * abs(cur)):
            return cur, err
        prev = cur
    raise QuadratureError(
        f"tanh-sinh did not converge: last two levels differ by {err:.3e} (value {cur:.6e})")


def window_for_exponent(e: float, drop: float = 40.0) -> float:
    """Tanh-sinh half-window that brings an endpoint factor x**(e-1) down by e^-drop.

    The window is capped where nodes would fall below ~1e-300.
    """
    if e <= 0:
        raise ValueError(f"endpoint exponent must be > 0 for integrability, got {e}")
    return float(np.arcsinh(min(690.0, drop / e) / np.pi))


@lru_cache(maxsize=32)
def gauss_legendre(npts: int):
    x, w = np.polynomial.legendre.leggauss(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def simpson_weights(npts: int, dx: float) -> np.ndarray:
    """Composite Simpson weights on a uniform grid.

    An even number of points leaves one odd interval, which is closed with a
    trapezoid on the last cell.
    """
    if npts < 2:
        return np.zeros(npts)
    if npts == 2:
        return np.array([0.5, 0.5]) * dx
    m = npts if npts % 2 == 1 else npts - 1
    w = np.zeros(npts)
    w[0:m:2] = 2.0
    w[1:m:2] = 4.0
    w[0] = w[m - 1] = 1.0
    w[:m] *= dx / 3.0
    if m < npts:
        w[m - 1] += dx / 2.0
        w[m] += dx / 2.0
    return w
