"""Exponent algebra for the scale-invariant damped wave equation.

All formulas accept real ``n`` so that shifted dimensions such as
``strauss_exponent(n + mu)`` make sense; the admissibility check is the only
place that insists on an integer dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Relative band within which p is treated as equal to p_S(n + mu).
CRITICAL_REL_TOL = 1e-9


class InadmissibleParameters(ValueError):
    """Raised when an exponent or order parameter violates a hard restriction."""


def gamma_quadratic(p: float, n: float) -> float:
    """Return ``2 + (n+1) p - (n-1) p**2``; its positive root is the Strauss exponent."""
    return 2.0 + (n + 1.0) * p - (n - 1.0) * p * p


def strauss_exponent(n: float) -> float:
    if n <= 1:
        raise ValueError(f"Strauss exponent needs n > 1, got n={n}")
    return (n + 1.0 + math.sqrt(n * n + 10.0 * n - 7.0)) / (2.0 * (n - 1.0))


def fujita_exponent(n: float) -> float:
    if n <= 0:
        raise ValueError(f"Fujita exponent needs n > 0, got n={n}")
    return 1.0 + 2.0 / n


def mu_star(n: float) -> float:
    """Damping threshold at which p_F(n) equals p_S(n + mu)."""
    if n <= 0:
        raise ValueError(f"mu_star needs n > 0, got n={n}")
    return (n * n + n + 2.0) / (n + 2.0)


def conjugate_exponent(p: float) -> float:
    if p <= 1:
        raise ValueError(f"conjugate exponent needs p > 1, got p={p}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class ModelParams:
    """One instance of the Cauchy problem: dimension, damping, power, amplitude."""

    n: int
    mu: float
    p: float
    epsilon: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.p <= 1:
            raise ValueError(f"p must be > 1, got {self.p}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return ModelParams(self.n, self.mu, self.p, epsilon)

    @classmethod
    def critical(cls, n: int, mu: float, epsilon: float = 1.0) -> "ModelParams":
        """Parameters sitting exactly on p = p_S(n + mu)."""
        return cls(n, mu, strauss_exponent(n + mu), epsilon)


def q_restriction_violations(q: float, mu: float) -> list[str]:
    """Names of the integrability restrictions on the order q that fail.

    Both are strict inequalities, so the boundary counts as a violation.
    """
    out = []
    if not q > -min(mu, 1.0):
        out.append(f"q > -min(mu,1) fails: q={q:.12g}, bound={-min(mu, 1.0):.12g}")
    if not q > -mu / 2.0:
        out.append(f"q > -mu/2 fails: q={q:.12g}, bound={-mu / 2.0:.12g}")
    return out


@dataclass
class CriticalQ:
    value: float
    violations: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return not self.violations


def critical_q(params: ModelParams) -> CriticalQ:
    """The order q = (n - mu - 1)/2 - 1/p used in the test-function argument."""
    q = (params.n - params.mu - 1.0) / 2.0 - 1.0 / params.p
    return CriticalQ(q, q_restriction_violations(q, params.mu))


@dataclass
class ExponentReport:
    gamma_value: float
    p_strauss: float
    p_fujita: float
    mu_star: float
    q_value: float
    p_conjugate: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return not self.diagnostics

    def as_dict(self) -> dict:
        return {
            "gamma_value": self.gamma_value,
            "p_strauss": self.p_strauss,
            "p_fujita": self.p_fujita,
            "mu_star": self.mu_star,
            "q_value": self.q_value,
            "p_conjugate": self.p_conjugate,
            "admissible": self.admissible,
            "diagnostics": list(self.diagnostics),
        }


def check_admissible(params: ModelParams, rel_tol: float = CRITICAL_REL_TOL) -> ExponentReport:
    """Evaluate every exponent of interest and list the violated hypotheses.

    The hypotheses are: integer n >= 2, 0 < mu < mu_star(n), p = p_S(n + mu)
    within ``rel_tol``, and the integrability restrictions on q. Nothing is
    raised; an empty ``diagnostics`` list means admissible.
    """
    n, mu, p = params.n, params.mu, params.p
    diags = []
    if int(n) != n or n < 2:
        diags.append(f"n >= 2 (integer) fails: n={n}")
    ms = mu_star(n)
    if not 0 < mu:
        diags.append(f"mu > 0 fails: mu={mu}")
    if not mu < ms:
        diags.append(f"mu < mu_star fails: mu={mu:.12g}, mu_star={ms:.12g}")
    ps = strauss_exponent(n + mu)
    if abs(p - ps) > rel_tol * ps:
        diags.append(f"p = p_S(n+mu) fails: p={p:.12g}, p_S(n+mu)={ps:.12g}")
    cq = critical_q(params)
    diags.extend(cq.violations)
    return ExponentReport(
        gamma_value=gamma_quadratic(p, n + mu),
        p_strauss=ps,
        p_fujita=fujita_exponent(n),
        mu_star=ms,
        q_value=cq.value,
        p_conjugate=conjugate_exponent(p),
        diagnostics=diags,
    )


def subcritical_lifespan_slope(p: float, n: float, mu: float) -> float:
    """Predicted d ln T / d ln eps below the Strauss exponent: -2p(p-1)/gamma(p, n+mu)."""
    g = gamma_quadratic(p, n + mu)
    if g <= 0:
        raise InadmissibleParameters(f"gamma(p, n+mu) = {g} <= 0; p is not subcritical")
    return -2.0 * p * (p - 1.0) / g


def lp_decay_exponent(n: float, mu: float, p: float) -> float:
    """Power of (1+t) in the lower bound for the L^p norm: n-1-(n+mu-1)p/2."""
    return n - 1.0 - (n + mu - 1.0) * p / 2.0
