"""Acceptance criteria 1-7, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantities, then asserts the same checks.
"""
import math
import time

import numpy as np
import pytest

from conftest import fd4, fd4_second
from scaledamp.chain import (c_fg, check_integral_inequality, check_key_inequality, g_functional, pre_blowup)
from scaledamp.comparison import (ComparisonProblem, RiccatiSpec, comparison_integrate,
                                  end_to_end, riccati_blowup_time, riccati_numeric_blowup,
                                  subsolution_H2)
from scaledamp.exponents import (ModelParams, conjugate_exponent, fujita_exponent,
                                 gamma_quadratic, mu_star, strauss_exponent,
                                 subcritical_lifespan_slope)
from scaledamp.solver import (DataPair, SolverConfig, Status, bump, fit_scaling, run,
                              spherical_wave_reference, sweep)
from scaledamp.special import (bessel_k, bessel_k_dt, bessel_k_dt_symmetric, bessel_k_large_t,
                               bessel_k_small_t)
from scaledamp.testfunctions import (TestFunction, TestFunctionSpec, asymptotic_profile)


def report(capsys, number, checks, elapsed, budget):
    checks = dict(checks)
    checks["runtime"] = (elapsed < budget, f"{elapsed:.1f}s < {budget:.0f}s")
    ok = all(flag for flag, _ in checks.values())
    detail = "; ".join(f"{k} {'ok' if flag else 'FAILED'} ({info})"
                       for k, (flag, info) in checks.items())
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
    failed = [k for k, (flag, _) in checks.items() if not flag]
    assert not failed, f"criterion {number} failed checks: {failed}"


def test_criterion_1_exponent_algebra(capsys):
    start = time.perf_counter()
    g = max(abs(gamma_quadratic(strauss_exponent(n), n)) for n in range(2, 11))
    f = max(abs(fujita_exponent(n) - strauss_exponent(n + mu_star(n))) for n in range(2, 11))
    worst = 0.0
    for n in range(2, 11):
        for frac in (0.1, 0.5, 0.9):
            mu = frac * mu_star(n)
            p = strauss_exponent(n + mu)
            q = (n - mu - 1) / 2 - 1 / p
            pc = conjugate_exponent(p)
            worst = max(worst, abs(n - q - pc / p - pc))
    report(capsys, 1, {
        "gamma(p_S(n), n) = 0": (g < 1e-10, f"max {g:.1e}"),
        "p_F(n) = p_S(n + mu_*)": (f < 1e-10, f"max {f:.1e}"),
        "n - q - p'/p = p'": (worst < 1e-9, f"max {worst:.1e}"),
    }, time.perf_counter() - start, 1.0)


def test_criterion_2_bessel(capsys):
    start = time.perf_counter()
    t_half = np.geomspace(0.1, 50, 40)
    half = max(abs(bessel_k(0.5, t).value / (math.sqrt(math.pi / (2 * t)) * math.exp(-t)) - 1)
               for t in t_half)
    nus = [-1.5, -0.5, 0.0, 0.3, 1.0, 2.5]
    ts = [0.1, 0.5, 1.0, 5.0, 20.0]
    deriv = max(abs(bessel_k_dt(nu, t) - bessel_k_dt_symmetric(nu, t)) / abs(bessel_k_dt(nu, t))
                 for nu in nus for t in ts)
    ode = 0.0
    for nu in (0.0, 0.5, 1.7, 3.0):
        for t in (0.2, 1.0, 4.0, 15.0):
            h = 1e-3 * t
            k = bessel_k(nu, t).value
            kp = float(bessel_k_dt(nu, t))
            kpp = fd4(lambda s: float(bessel_k_dt(nu, s)), t, h)
            ode = max(ode, abs(t * t * kpp + t * kp - (t * t + nu * nu) * k)
                      / ((t * t + nu * nu) * k))
    mono = all((bessel_k(nu, t).value < bessel_k(nu - 1, t).value) if nu < 0.5
               else (bessel_k(nu, t).value >= bessel_k(nu - 1, t).value * (1 - 1e-14))
               for nu in (-1.0, -0.25, 0.25, 0.5, 1.0, 2.0) for t in (0.1, 1.0, 10.0))
    large = max(abs(bessel_k(nu, t).value / bessel_k_large_t(nu, t) - 1) * t
                for nu in (0.0, 0.5, 1.0, 2.0) for t in (50.0, 100.0, 200.0))
    small = max(abs(bessel_k(nu, t).value / bessel_k_small_t(nu, t) - 1)
                for nu, t in [(0.0, 1e-6), (0.5, 1e-3), (1.0, 1e-4), (2.0, 1e-3)])
    report(capsys, 2, {
        "K_1/2 closed form": (half < 1e-10, f"max rel {half:.1e}"),
        "derivative forms agree": (deriv < 1e-9, f"max rel {deriv:.1e}"),
        "Bessel ODE residual": (ode < 1e-7, f"max rel {ode:.1e}"),
        "order monotonicity": (mono, "all sampled (nu, t)"),
        "large-t ratio within C/t": (large < 5.0, f"max t*|ratio-1| {large:.2f}"),
        "small-t ratio": (small < 0.1, f"max |ratio-1| {small:.1e}"),
    }, time.perf_counter() - start, 30.0)


def test_criterion_3_test_functions(capsys):
    start = time.perf_counter()
    conj, space, slopes, ratios = 0.0, 0.0, [], []
    for n, mu in [(2, 1.0), (3, 1.0), (3, 2.0)]:
        tf = TestFunction(TestFunctionSpec.critical(ModelParams.critical(n, mu)))
        for r in (0.0, 0.5, 1.0):
            for t in (1.0, 5.0, 20.0):
                h = 1e-3 * (1 + t)
                b = lambda s: tf.b(r, s)  # noqa: E731
                b2 = tf.b(r, t, shift=2.0)
                lhs = fd4_second(b, t, h) - mu / (1 + t) * fd4(b, t, h) + mu / (1 + t) ** 2 * b(t)
                conj = max(conj, abs(lhs - b2) / b2)
                br = lambda x: tf.b(abs(x), t)  # noqa: E731
                lap = (n * fd4_second(br, 0.0, h) if r == 0
                       else fd4_second(br, r, h) + (n - 1) / r * fd4(br, r, h))
                space = max(space, abs(lap - b2) / b2)
        q = tf.spec.q
        t = np.geomspace(50, 400, 8)
        slope = np.polyfit(np.log(t + 1), np.log([tf.b(0.0, ti) for ti in t]), 1)[0]
        slopes.append(abs(slope + q) / max(abs(q), 1.0))
        rr = []
        for ti in t:
            r = np.array([0.0, 0.3, 0.6, 0.9]) * ti
            rr.extend(tf.b_grid(r, ti) / asymptotic_profile(tf.spec, r, ti))
        ratios.append(max(rr) / min(rr))
    report(capsys, 3, {
        "time conjugate identity": (conj < 1e-5, f"max rel {conj:.1e}"),
        "space identity": (space < 1e-5, f"max rel {space:.1e}"),
        "flat slope within 5% of -q": (max(slopes) <= 0.05, f"max rel {max(slopes):.3f}"),
        "profile ratio bounded": (max(ratios) < 3.0, f"max/min {max(ratios):.2f} < 3"),
    }, time.perf_counter() - start, 300.0)


def test_criterion_4_functional_chain(capsys):
    start = time.perf_counter()
    cfg_vals = {mu: c_fg(DataPair(), 2, mu) for mu in (0.25, 0.5, 1.0, 1.5)}
    ineq_ok, ineq_info = True, []
    ratio_min, seed = math.inf, math.inf
    for eps in (0.6, 1.0):
        params = ModelParams.critical(2, 1.0, eps)
        trace, est = run(params, cfg=SolverConfig(dr=0.02, t_max=40.0, store_fields=True))
        assert est.status is Status.BLEW_UP
        trace = pre_blowup(trace)
        spec = TestFunctionSpec.critical(params)
        rep = check_integral_inequality(trace, spec)
        ineq_ok &= rep.holds
        ineq_info.append(f"eps={eps}: gap {rep.min_scaled_gap():.2e}")
        if eps == 0.6:
            key = check_key_inequality(g_functional(trace, spec), params.p)
            ratio_min, seed = key.inf_ratio, key.seed_coefficient
    report(capsys, 4, {
        "C_fg > 0": (min(cfg_vals.values()) > 0,
                     ", ".join(f"mu={k}: {v:.3g}" for k, v in cfg_vals.items())),
        "integral inequality on every blow-up run": (ineq_ok, "; ".join(ineq_info)),
        "inf R(t) > 0 for t > 2": (ratio_min > 0, f"inf R {ratio_min:.3g}"),
        "quadratic seed coefficient > 0": (seed > 0, f"{seed:.3g}"),
    }, time.perf_counter() - start, 600.0)


def test_criterion_5_ode_comparison(capsys):
    start = time.perf_counter()
    one = lambda t: 1.0  # noqa: E731
    instances = [
        ComparisonProblem(one, one, 1.0, (2.0, 0.0), (1.0, 0.0)),
        ComparisonProblem(one, one, 0.0, (2.0, 0.0), (1.0, 0.0)),
        ComparisonProblem(lambda t: 0.5, lambda t: 1 / (1 + t), 2.0, (1.5, 0.2), (1.0, 0.1)),
    ]
    ordered = [comparison_integrate(p, 10.0, 0.01).ordered for p in instances]
    pipeline = end_to_end(RiccatiSpec.from_c0(1e-3, 30.0, 1.0, 2.0), epsilon=0.5)
    example = RiccatiSpec(0.01, 1.0, 0.25, 2.0)
    s_star = riccati_blowup_time(example)
    s_num = riccati_numeric_blowup(example)
    rel = abs(s_num - s_star) / s_star
    sub = subsolution_H2(RiccatiSpec.from_c0(1e-3, 30.0, 1.0, 2.0), epsilon=0.5)
    report(capsys, 5, {
        "comparison ordering": (all(ordered) and pipeline.ordered,
                                f"{sum(ordered)}/{len(ordered)} instances + pipeline"),
        "Riccati blow-up": (rel < 1e-2 and s_star == 401.0,
                            f"s*={s_star:g}, numeric {s_num:.3f}, rel {rel:.1e}"),
        "H2 subsolution": (sub.check.passed,
                           f"min margin {sub.check.margin.min():.3g}, H2'(s0) {sub.check.slope_at_s0:.4f}"),
    }, time.perf_counter() - start, 30.0)


def test_criterion_6_solver(capsys):
    start = time.perf_counter()
    lin = ModelParams(3, 0.0, 2.0, 1.0)
    errs = []
    for dr in (0.02, 0.01, 0.005):
        cfg = SolverConfig(dr=dr, cfl=0.5, t_max=2.0, r_max=3.0, store_fields=True)
        tr, _ = run(lin, DataPair(bump, bump), cfg, nonlinear=False)
        errs.append(np.max(np.abs(tr.u[-1] - spherical_wave_reference(tr.r, tr.times[-1]))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    leak = 0.0
    for params in (ModelParams.critical(2, 1.0, 1.0), ModelParams.critical(2, 1.0, 0.6),
                   ModelParams(3, 0.0, 2.0, 1.0)):
        cfg = SolverConfig(dr=0.01, t_max=20.0)
        tr, _ = run(params, cfg=cfg)
        leak = max(leak, float(np.max((tr.support - tr.times - 0.5) / cfg.dr)))
    crit = ModelParams.critical(2, 1.0, 1.0)
    T = {dr: run(crit, cfg=SolverConfig(dr=dr, t_max=10.0))[1].T_blowup for dr in (0.02, 0.01)}
    T9 = run(crit, cfg=SolverConfig(dr=0.01, t_max=10.0, blowup_threshold=1e9))[1].T_blowup
    T7 = run(crit, cfg=SolverConfig(dr=0.01, t_max=10.0, blowup_threshold=1e7))[1].T_blowup
    refine = abs(T[0.02] - T[0.01]) / T[0.01]
    thresh = max(abs(T9 - T[0.01]), abs(T7 - T[0.01])) / T[0.01]
    report(capsys, 6, {
        "linear oracle order": (bool(np.all((orders >= 1.7) & (orders <= 2.3))),
                                "orders " + ", ".join(f"{o:.3f}" for o in orders)),
        "support within 2 cells": (leak <= 2.0, f"max excess {leak:.2f} cells"),
        "T stable under dr/2": (refine < 0.05, f"{T[0.02]:.4f} vs {T[0.01]:.4f}, rel {refine:.2%}"),
        "T stable under 10x threshold": (thresh < 0.01, f"rel {thresh:.2%}"),
    }, time.perf_counter() - start, 600.0)


def test_criterion_7_scaling_fits(capsys):
    start = time.perf_counter()
    sub = ModelParams(3, 0.0, 2.0)
    eps = list(np.round(np.linspace(0.4, 1.2, 6), 4))
    res = sweep(sub, eps, cfg=SolverConfig(dr=0.02, t_max=400.0))
    fit = fit_scaling(res, "subcritical", sub)
    target = subcritical_lifespan_slope(2.0, 3, 0.0)
    rel = abs(fit.slope - target) / abs(target)
    crit = ModelParams.critical(2, 1.0, 1.0)
    ceps = [0.4, 0.5, 0.6, 0.8, 1.0, 1.2]
    cres = sweep(crit, ceps, cfg=SolverConfig(dr=0.02, t_max=300.0))
    times = [r.T_blowup for r in cres if r.status is Status.BLEW_UP]
    monotone = all(a >= b for a, b in zip(times, times[1:]))
    cfit = fit_scaling(cres, "critical", crit)
    report(capsys, 7, {
        "subcritical slope within 30%": (
            rel <= 0.30 and fit.n_used >= 6,
            f"slope {fit.slope:.3f} vs {target:.3f}, rel {rel:.1%}, {fit.n_used} points"),
        "critical T(eps) monotone": (monotone and len(times) == len(ceps),
                                     ", ".join(f"{t:.3g}" for t in times)),
        "critical fit r^2 >= 0.9": (
            cfit.r_squared >= 0.9,
            f"r^2 {cfit.r_squared:.3f}, fitted C {cfit.slope:.3g} (not a predicted constant)"),
    }, time.perf_counter() - start, 1800.0)
