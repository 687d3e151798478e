"""Command-line front end.

Every command echoes its resolved configuration as ``# key = value`` lines
before the results; tabular results are CSV with 17 significant digits.
Values may come from a flat key-value file (``--config``) whose keys carry
dotted section prefixes, e.g. ``solver.dr = 0.01``; flags override the file.

Exit status: 0 on success, 1 on domain errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import sys
from contextlib import contextmanager
from typing import Iterable, Sequence

import numpy as np

from . import chain, comparison, exponents, solver, special, testfunctions
from .quadrature import QuadratureError

log = logging.getLogger("scaledamp")

NUM_FMT = "{:.17g}"


class DomainError(Exception):
    """Raised by a command for a well-formed request that cannot be honoured."""


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return NUM_FMT.format(float(v))
    if v is None:
        return ""
    return str(v)


def emit_csv(records: Sequence[dict], schema: Sequence[str], stream) -> None:
    """Write a header row and one row per record, in order.

    An empty record list gives a header-only table.
    """
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(schema)
    for rec in records:
        missing = [k for k in schema if k not in rec]
        if missing:
            raise ValueError(f"record lacks fields {missing}")
        w.writerow([_fmt(rec[k]) for k in schema])


def read_csv(path) -> list[dict]:
    """Rows of a CSV written by :func:`emit_csv`; ``#`` comment lines are skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_csv_file(records, schema, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            emit_csv(records, schema, fh)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise DomainError(f"cannot write {path}: {exc}") from exc
    with fh:
        yield fh


def _echo(out, args: argparse.Namespace) -> None:
    skip = {"func", "quiet", "out"}
    out.write(f"# command = {args.command}\n")
    for k in sorted(vars(args)):
        if k in skip or k == "command":
            continue
        v = getattr(args, k)
        if isinstance(v, (list, tuple)):
            v = " ".join(_fmt(x) for x in v)
        out.write(f"# {k} = {_fmt(v)}\n")


def _float_list(text: str) -> list[float]:
    parts = text.replace(",", " ").split()
    try:
        return [float(x) for x in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def _resolve_p(args) -> float:
    if args.p is None:
        return exponents.strauss_exponent(args.n + args.mu)
    return args.p


# ---------------------------------------------------------------- commands

def cmd_check_exponents(args, out):
    p = _resolve_p(args)
    rep = exponents.check_admissible(exponents.ModelParams(args.n, args.mu, p))
    out.write(f"p = {_fmt(p)}\n")
    out.write(f"p_S(n+mu) = {_fmt(rep.p_strauss)}\n")
    out.write(f"p_F(n) = {_fmt(rep.p_fujita)}\n")
    out.write(f"mu_star = {_fmt(rep.mu_star)}\n")
    out.write(f"gamma(p,n+mu) = {_fmt(rep.gamma_value)}\n")
    out.write(f"q = {_fmt(rep.q_value)}\n")
    out.write(f"p_conjugate = {_fmt(rep.p_conjugate)}\n")
    out.write(f"admissible = {_fmt(rep.admissible)}\n")
    for d in rep.diagnostics:
        out.write(f"diagnostic = {d}\n")


def cmd_eval_bessel(args, out):
    rows = []
    for t in args.t:
        ev = special.bessel_k(args.nu, t)
        rows.append({"nu": args.nu, "t": t, "K": ev.value, "est_abs_error": ev.est_abs_error})
    emit_csv(rows, ["nu", "t", "K", "est_abs_error"], out)


def cmd_eval_2f1(args, out):
    val = special.gauss_2f1(args.a, args.b, args.c, args.z)
    emit_csv([{"a": args.a, "b": args.b, "c": args.c, "z": args.z, "F": val}],
             ["a", "b", "c", "z", "F"], out)


def _spec(args) -> testfunctions.TestFunctionSpec:
    if args.q is None:
        params = exponents.ModelParams(args.n, args.mu, _resolve_p(args))
        return testfunctions.TestFunctionSpec.critical(params)
    return testfunctions.TestFunctionSpec(args.n, args.mu, args.q)


def cmd_eval_testfn(args, out):
    tf = testfunctions.TestFunction(_spec(args))
    rows = []
    for t in args.t:
        r = np.asarray(args.r, dtype=float)
        b = tf.b_grid(r, t)
        bt = tf.b_t_grid(r, t)
        for ri, bi, bti in zip(r, b, bt):
            rows.append({"t": t, "r": ri, "b_q": bi, "b_q_t": bti})
    out.write(f"# q = {_fmt(tf.spec.q)}\n")
    emit_csv(rows, ["t", "r", "b_q", "b_q_t"], out)


def cmd_verify_asymptotics(args, out):
    spec = _spec(args)
    tf = testfunctions.TestFunction(spec)
    rows, ratios_by_t = [], []
    for t in args.t:
        r = np.asarray([f * t for f in args.r_frac], dtype=float)
        b = tf.b_grid(r, t)
        prof = testfunctions.asymptotic_profile(spec, r, t)
        for ri, bi, pi in zip(r, b, prof):
            rows.append({"t": t, "r": ri, "b_q": bi, "profile": pi, "ratio": bi / pi})
        ratios_by_t.append(b[0] / prof[0])
    out.write(f"# q = {_fmt(spec.q)}\n")
    out.write(f"# regime = {spec.regime.regime.value}\n")
    t0 = testfunctions.onset_time(args.t, ratios_by_t)
    out.write(f"# onset_T0 = {_fmt(t0) if t0 is not None else 'none'}\n")
    emit_csv(rows, ["t", "r", "b_q", "profile", "ratio"], out)


def cmd_verify_chain(args, out):
    trace = solver.SimulationTrace.load(args.run)
    if trace.u is None:
        raise DomainError("trace has no stored fields; rerun simulate with --save-trace")
    data = solver.data_from_trace(trace)
    params = trace.params
    window = chain.pre_blowup(trace, args.fraction)
    spec = (testfunctions.TestFunctionSpec.critical(params) if args.q is None
            else testfunctions.TestFunctionSpec(params.n, params.mu, args.q))
    ft = chain.g_functional(window, spec)
    rows = []

    def add(name, passed, value, note=""):
        rows.append({"check": name, "passed": bool(passed), "value": value, "note": note})

    add("G(0)=0", ft.G[0] == 0 and ft.G_prime[0] == 0, ft.G[0])
    add("G''>=0", np.all(ft.G_second >= 0), float(np.min(ft.G_second)))
    tri = float(np.max(ft.triple_identity_residual()[1:]))
    add("triple_identity", tri < 1e-2, tri, "max relative residual")
    try:
        key = chain.check_key_inequality(ft, params.p)
        add("key_inequality_inf_R", key.inf_ratio > 0, key.inf_ratio, "fitted K")
        add("quadratic_seed", key.seed_coefficient > 0, key.seed_coefficient,
            "coefficient of eps^p (t-T0)^2")
    except chain.WindowTooShort as exc:
        add("key_inequality_inf_R", False, math.nan, str(exc))
    g1 = chain.g1_functional(window, params.n, params.mu, data)
    add("G1_differential_residual", g1.min_scaled_residual() >= -args.tol, g1.min_scaled_residual(),
        "min residual / (eps * flux)")
    add("G1_lower_bound", g1.min_scaled_gap() >= -args.tol, g1.min_scaled_gap(), "min scaled gap")
    add("c_fg>0", g1.c_fg > 0, g1.c_fg)
    add("initial_flux>0", g1.flux > 0, g1.flux)
    iq = chain.check_integral_inequality(window, spec, data)
    add("integral_inequality", iq.holds, iq.min_scaled_gap(), "min (rhs-lhs)/scale")
    add("integral_identity", iq.identity_residual < 1e-2, iq.identity_residual)
    add("boundary_term>0", iq.boundary_term > 0, iq.boundary_term)
    try:
        sl = chain.lp_slope_check(trace)
        add("Lp_slope", sl.passed, sl.slope, f"predicted {sl.predicted:.6g}, C={sl.fitted_constant:.6g}")
    except chain.WindowTooShort as exc:
        add("Lp_slope", False, math.nan, str(exc))
    emit_csv(rows, ["check", "passed", "value", "note"], out)
    if not all(r["passed"] for r in rows):
        log.warning("some chain checks failed")


def cmd_compare_ode(args, out):
    a, b = args.a, args.b
    prob = comparison.ComparisonProblem(lambda t: a, lambda t: b, args.alpha,
                                        tuple(args.K_init), tuple(args.h_init))
    v = comparison.comparison_integrate(prob, args.t_end, args.step)
    out.write(f"derivative_ordered = {_fmt(v.derivative_ordered)}\n")
    out.write(f"value_ordered = {_fmt(v.value_ordered)}\n")
    out.write(f"K_blowup = {_fmt(v.K_blowup)}\n")
    out.write(f"h_blowup = {_fmt(v.h_blowup)}\n")
    out.write(f"min_gap = {_fmt(float(np.min(v.gap)))}\n")
    if not v.ordered:
        raise DomainError("ordering not preserved")


def cmd_riccati(args, out):
    spec = comparison.RiccatiSpec.from_c0(args.delta, args.s0, args.c0, args.p)
    s_star = comparison.riccati_blowup_time(spec)
    s_num = comparison.riccati_numeric_blowup(spec)
    out.write(f"s_star = {_fmt(s_star)}\n")
    out.write(f"s_numeric = {_fmt(s_num)}\n")
    out.write(f"relative_difference = {_fmt(abs(s_num - s_star) / s_star)}\n")
    for k, v in spec.ordering_ratios().items():
        out.write(f"{k} = {_fmt(v)}\n")
    out.write(f"ordering_ok = {_fmt(spec.ordering_ok)}\n")
    if spec.ordering_ok:
        sub = comparison.subsolution_H2(spec, args.epsilon, args.K0)
        out.write(f"H2_conditions_ok = {_fmt(sub.check.passed)}\n")
        res = comparison.end_to_end(spec, args.epsilon, args.K0)
        out.write(f"H1_blowup = {_fmt(res.H1_blowup)}\n")
        out.write(f"certificate = {_fmt(res.certificate)}\n")
        out.write(f"induced_C = {_fmt(res.induced_C)}\n")


def _solver_cfg(args, store=False) -> solver.SolverConfig:
    return solver.SolverConfig(dr=args.dr, cfl=args.cfl, r_max=args.r_max,
                               blowup_threshold=args.threshold, t_max=args.tmax,
                               output_every=args.output_every, store_fields=store)


def cmd_simulate(args, out):
    params = exponents.ModelParams(args.n, args.mu, _resolve_p(args), args.eps)
    trace, est = solver.run(params, cfg=_solver_cfg(args, store=args.save_trace is not None))
    if args.save_trace:
        trace.save(args.save_trace)
    out.write(f"# status = {est.status.value}\n")
    out.write(f"# T = {_fmt(est.T_blowup)}\n")
    rows = [{"t": t, "sup_abs_u": s, "lp_integral": lp}
            for t, s, lp in zip(trace.times, trace.sup_abs, trace.lp_integral)]
    emit_csv(rows, ["t", "sup_abs_u", "lp_integral"], out)


def cmd_sweep(args, out):
    params = exponents.ModelParams(args.n, args.mu, _resolve_p(args), 1.0)
    if args.mode == "critical":
        lo, hi = solver.CRITICAL_EPS_WINDOW
        out.write(f"# critical sweeps are meaningful for eps in [{lo}, {hi}]\n")
    res = solver.sweep(params, args.eps_list, cfg=_solver_cfg(args), workers=args.threads)
    emit_csv([r.as_row() for r in res], ["epsilon", "T", "status", "max_amplitude"], out)


def results_from_rows(rows: Iterable[dict]) -> list[solver.LifespanEstimate]:
    out = []
    for r in rows:
        out.append(solver.LifespanEstimate(float(r["epsilon"]), float(r["T"]),
                                           float(r["max_amplitude"]), solver.Status(r["status"])))
    return out


def cmd_fit(args, out):
    try:
        rows = read_csv(args.input)
    except OSError as exc:
        raise DomainError(f"cannot read {args.input}: {exc}") from exc
    params = exponents.ModelParams(args.n, args.mu, _resolve_p(args), 1.0)
    fit = solver.fit_scaling(results_from_rows(rows), args.mode, params)
    out.write(json.dumps(fit.as_dict(), indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ parser

def _add_model(sp, need_p=True):
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--mu", type=float, default=1.0)
    if need_p:
        sp.add_argument("--p", type=float, default=None, help="default p_S(n+mu)")


def _add_solver(sp):
    sp.add_argument("--dr", type=float, default=0.01)
    sp.add_argument("--cfl", type=float, default=0.7)
    sp.add_argument("--r-max", type=float, default=None)
    sp.add_argument("--threshold", type=float, default=1e8)
    sp.add_argument("--tmax", type=float, default=30.0)
    sp.add_argument("--output-every", type=float, default=0.05)


def _global_flags(parser, suppress=False):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--out", default=d(None), help="output path (default stdout)")
    parser.add_argument("--quiet", action="store_true", default=d(False))
    parser.add_argument("--threads", type=int, default=d(1))
    parser.add_argument("--config", default=d(None), help="key-value file with dotted keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaledamp", description=__doc__.splitlines()[0])
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        _global_flags(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    sp = add("check-exponents", cmd_check_exponents, "exponents and admissibility")
    _add_model(sp)

    sp = add("eval-bessel", cmd_eval_bessel, "K_nu(t) with error estimate")
    sp.add_argument("--nu", type=float, required=True)
    sp.add_argument("--t", type=_float_list, required=True)

    sp = add("eval-2f1", cmd_eval_2f1, "Gauss hypergeometric function")
    for k in ("a", "b", "c", "z"):
        sp.add_argument(f"--{k}", type=float, required=True)

    for name, func, help_ in (("eval-testfn", cmd_eval_testfn, "b_q and its time derivative"),
                              ("verify-asymptotics", cmd_verify_asymptotics,
                               "b_q against its large-time profile")):
        sp = add(name, func, help_)
        _add_model(sp)
        sp.add_argument("--q", type=float, default=None, help="default: critical q")
        sp.add_argument("--t", type=_float_list, required=True)
        if name == "eval-testfn":
            sp.add_argument("--r", type=_float_list, required=True)
        else:
            sp.add_argument("--r-frac", type=_float_list, default=[0.0, 0.5],
                            help="radii as fractions of t")

    sp = add("verify-chain", cmd_verify_chain, "functional inequalities on a stored run")
    sp.add_argument("--run", required=True, help="trace file written by simulate --save-trace")
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--fraction", type=float, default=0.9,
                    help="use samples up to this fraction of the last time")
    sp.add_argument("--tol", type=float, default=1e-3)

    sp = add("compare-ode", cmd_compare_ode, "comparison lemma on a constant-coefficient pair")
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--K-init", type=float, nargs=2, default=[2.0, 0.0])
    sp.add_argument("--h-init", type=float, nargs=2, default=[1.0, 0.0])
    sp.add_argument("--t-end", type=float, default=10.0)
    sp.add_argument("--step", type=float, default=0.01)

    sp = add("riccati", cmd_riccati, "Riccati blow-up time and the H_2 subsolution")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--s0", type=float, required=True)
    sp.add_argument("--c0", type=float, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--epsilon", type=float, default=0.5)
    sp.add_argument("--K0", type=float, default=1.0)

    sp = add("simulate", cmd_simulate, "one solver run")
    _add_model(sp)
    sp.add_argument("--eps", type=float, default=1.0)
    _add_solver(sp)
    sp.add_argument("--save-trace", default=None, help="write the full trace (.npz)")

    sp = add("sweep", cmd_sweep, "lifespans over a list of eps")
    _add_model(sp)
    sp.add_argument("--eps-list", type=_float_list, required=True)
    sp.add_argument("--mode", choices=["critical", "subcritical"], default="critical")
    _add_solver(sp)

    sp = add("fit", cmd_fit, "scaling-law fit of a sweep CSV")
    _add_model(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--mode", choices=["critical", "subcritical"], default="critical")
    return parser


def load_config(path) -> dict[str, str]:
    """Flat ``section.key = value`` pairs; section headers are optional."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string("[__root__]\n" + text)
    flat = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            full = key if section == "__root__" else f"{section}.{key}"
            flat[full] = value
    return flat


def _apply_config(parser: argparse.ArgumentParser, argv, flat: dict[str, str]):
    """Re-parse with file values as defaults so that explicit flags win."""
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    first = parser.parse_args(argv)
    sp = subparsers.choices[first.command]
    by_dest = {a.dest: a for a in sp._actions if a.dest not in ("help",)}
    defaults = {}
    for key, raw in flat.items():
        dest = key.rsplit(".", 1)[-1].replace("-", "_")
        act = by_dest.get(dest)
        if act is None:
            raise DomainError(f"config key {key!r} is not an option of {first.command}")
        conv = act.type or str
        if act.nargs in ("+", "*") or isinstance(act.nargs, int):
            val = [conv(x) for x in raw.replace(",", " ").split()]
        elif isinstance(act, argparse._StoreTrueAction):
            val = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            val = conv(raw)
        defaults[dest] = val
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def dispatch(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.config:
            try:
                args = _apply_config(parser, argv, load_config(args.config))
            except SystemExit as exc:
                return int(exc.code or 0)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise DomainError(f"bad config value: {exc}") from exc
        if args.threads < 1:
            raise DomainError("--threads must be >= 1")
        if getattr(args, "p", 0) is None:
            args.p = exponents.strauss_exponent(args.n + args.mu)
        buf = io.StringIO()
        _echo(buf, args)
        args.func(args, buf)
        with _output(args.out) as out:
            out.write(buf.getvalue())
    except (DomainError, ValueError, ArithmeticError, QuadratureError, RuntimeError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
