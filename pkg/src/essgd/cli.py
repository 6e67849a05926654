"""Command-line driver: ``essgd run|fit|verify|plan``.

Flags may also come from a flat config file (``--config PATH``) with one
``key = value`` pair per line, ``#`` comments and keys spelled like the
long flags (``snapshot-every`` or ``snapshot_every``). Flags given on the
command line override the file.

Exit status is 0 on success, 1 when a check fails, 2 for usage, config or
I/O errors and 3 when a run diverges.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import compression, estimation, ingest, model, optimizer, problems, sampling

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

SAMPLERS = ("uniform", "importance", "tau-nice", "independent", "full")
SCHEDULES = ("constant", "corollary1", "sqrtlak", "theorem3", "theorem4")
SUITES = ("samplings", "compressors", "counterexample", "conversions")


class UsageError(Exception):
    """Bad configuration; reported with exit status 2."""


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common(p):
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=("linreg", "logreg", "quadratic"), default="linreg")
    g.add_argument("--data", help="LIBSVM file; relative paths also tried under $ESSGD_DATA_DIR")
    g.add_argument("--n", type=int, default=1000, help="synthetic rows")
    g.add_argument("--d", type=int, default=50, help="synthetic columns")
    g.add_argument("--variance", default="linear", help="'linear' (row i has variance i) or a number")
    g.add_argument("--normalize", type=_bool, nargs="?", const=True, default=False)
    g.add_argument("--data-seed", type=int, default=0, help="seed for synthetic data")
    g.add_argument("--lam", type=float, default=0.1, help="regularization weight")
    g.add_argument("--eigs", type=_float_list, help="quadratic: component smoothness constants")
    g.add_argument("--mu", type=float, help="PL constant when the problem does not know it")
    g.add_argument("--seed", type=int, help="RNG seed (mandatory for run)")
    g.add_argument("--config", help="key = value config file")


def build_parser():
    parser = argparse.ArgumentParser(prog="essgd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run SGD and write a trace CSV")
    _common(run)
    _sampler_flags(run)
    run.add_argument("--compressor", default="identity", help="identity, randk:K or dither:S")
    run.add_argument("--schedule", choices=SCHEDULES, default="sqrtlak")
    run.add_argument("--K", type=int, default=1000, help="iterations")
    run.add_argument("--gamma", type=float, help="constant stepsize")
    run.add_argument("--gamma-scale", type=float, default=1.0, help="factor for sqrtlak")
    run.add_argument("--eps", type=float, default=0.1, help="target accuracy for corollary1")
    run.add_argument("--snapshot-every", type=int, default=5)
    run.add_argument("--out", default="trace_{sampler}.csv", help="may contain {sampler}")

    fit = sub.add_parser("fit", help="fit ES and RG constants to a trace")
    _common(fit)
    fit.add_argument("--trace", required=False, help="trace CSV from 'run'")
    fit.add_argument("--infima-iters", type=int, default=200)
    fit.add_argument("--out", default="fit.csv")

    ver = sub.add_parser("verify", help="run a property suite")
    ver.add_argument("suite", help=", ".join(SUITES))
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--config")

    plan = sub.add_parser("plan", help="importance weights, minibatch size and iteration count")
    _common(plan)
    _sampler_flags(plan)
    plan.add_argument("--eps", type=float, default=0.1)
    plan.add_argument("--delta0", type=float, help="f(x0) - f_inf (default: from x0 = 0)")
    return parser


def _sampler_flags(p):
    p.add_argument("--sampler", default="uniform", help="comma list of " + ", ".join(SAMPLERS))
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--q", type=_float_list, help="explicit probabilities (with replacement or independent)")


def read_config(path):
    """Parse ``key = value`` lines into a dict with underscore keys."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        values.pop("config", None)
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# building blocks


def resolve_data_path(path):
    p = Path(path)
    if p.is_file():
        return p
    root = os.environ.get("ESSGD_DATA_DIR")
    if root and not p.is_absolute() and (Path(root) / p).is_file():
        return Path(root) / p
    raise UsageError(f"dataset not found: {path}")


def load_dataset(args):
    if args.data:
        try:
            return ingest.load_libsvm(resolve_data_path(args.data))
        except ingest.LibsvmParseError as exc:
            raise UsageError(f"{args.data}: {exc}") from None
    variance = args.variance if args.variance == "linear" else float(args.variance)
    return ingest.make_synthetic_gaussian(args.n, args.d, variance, args.normalize, rng=args.data_seed)


def build_problem(args):
    """Return ``(problem, metadata)`` for the problem flags."""
    if args.problem == "quadratic":
        if not args.eigs:
            raise UsageError("--problem quadratic needs --eigs")
        eigs = np.array(args.eigs)
        d = args.d
        h = eigs[:, None, None] * np.eye(d)
        p = problems.make_quadratic_sum(h)
        return p, {"problem": f"quadratic L_i={','.join(map(repr, args.eigs))} d={d}"}
    ds = load_dataset(args)
    meta = {"problem": args.problem, "lam": args.lam, "data": ds.source}
    if not args.data:
        meta["labels"] = "<a_i, x_true> + N(0, 0.01)"
    if args.problem == "linreg":
        p = problems.make_regularized_linreg(ds.dense(), ds.labels, args.lam)
    else:
        labels = ds.labels if args.data else np.where(ds.labels >= 0, 1.0, -1.0)
        p = problems.make_regularized_logreg(ds.dense() * labels[:, None], args.lam)
    if args.mu is not None:
        p.mu = args.mu
    return p, meta


def build_scheme(name, p, tau, q=None):
    n = p.n
    if name == "full":
        return sampling.full(n)
    if name == "tau-nice":
        return sampling.tau_nice(n, tau)
    if name == "independent":
        probs = np.full(n, min(1.0, tau / n)) if q is None else np.asarray(q)
        return sampling.independent(probs)
    if name == "uniform":
        if q is not None:
            return sampling.with_replacement(tau, q)
        return sampling.uniform_with_replacement(n, tau)
    if name == "importance":
        return sampling.with_replacement(tau, sampling.optimal_importance(p))
    raise UsageError(f"unknown sampler {name!r}; choose from {', '.join(SAMPLERS)}")


def parse_compressor(spec, d):
    kind, _, arg = spec.partition(":")
    try:
        if kind == "identity":
            return compression.identity(d)
        if kind == "randk":
            return compression.rand_k(d, int(arg))
        if kind == "dither":
            return compression.dithering(d, int(arg))
    except ValueError as exc:
        raise UsageError(f"bad compressor {spec!r}: {exc}") from None
    raise UsageError(f"unknown compressor {spec!r}; use identity, randk:K or dither:S")


def build_plan(args, es, p):
    k = args.K
    if args.schedule == "constant":
        if args.gamma is None:
            raise UsageError("--schedule constant needs --gamma")
        return optimizer.constant_plan(args.gamma)
    if args.schedule == "sqrtlak":
        return optimizer.constant_plan(optimizer.sqrt_lak_stepsize(es, p.l_global, k, args.gamma_scale))
    if args.schedule == "corollary1":
        return optimizer.constant_plan(optimizer.corollary1_stepsize(es, p.l_global, k, args.eps))
    mu = getattr(p, "mu", None)
    if not mu:
        raise UsageError(f"--schedule {args.schedule} needs a PL constant (--mu)")
    planner = optimizer.theorem3_plan if args.schedule == "theorem3" else optimizer.theorem4_plan
    return planner(es, p.l_global, mu, k)


# ---------------------------------------------------------------------------
# commands


def cmd_run(args, out=sys.stdout):
    if args.seed is None:
        raise UsageError("--seed is required")
    if args.K < 1 or args.snapshot_every < 1:
        raise UsageError("--K and --snapshot-every must be positive")
    p, meta = build_problem(args)
    names = [s.strip() for s in args.sampler.split(",") if s.strip()]
    if len(names) > 1 and "{sampler}" not in args.out:
        raise UsageError("--out must contain {sampler} when several samplers are given")
    comp = parse_compressor(args.compressor, p.d)
    status = EXIT_OK
    for name in names:
        scheme = build_scheme(name, p, args.tau, args.q)
        if comp.kind == "identity":
            source = sampling.SampledGradient(p, scheme)
        else:
            if scheme.kind != "full":
                raise UsageError("compression is applied per component; use --sampler full")
            source = compression.ComposedEstimator(p, [comp] * p.n)
        es = source.es_constants()
        try:
            plan = build_plan(args, es, p)
        except ValueError as exc:
            raise UsageError(f"{name}: cannot build the {args.schedule} schedule: {exc}") from None
        try:
            trace = optimizer.run_sgd(p, source, plan, np.zeros(p.d), args.K,
                                      snapshot_every=args.snapshot_every, seed=args.seed)
        except optimizer.DivergenceError as exc:
            print(f"error: {name}: {exc}; last snapshot {exc.last_snapshot}", file=sys.stderr)
            status = EXIT_DIVERGED
            continue
        path = args.out.format(sampler=name)
        run_meta = dict(meta, sampler=name, tau=args.tau, compressor=args.compressor,
                        schedule=args.schedule, A=es.a, B=es.b, C=es.c, L=p.l_global)
        try:
            ingest.write_trace_csv(trace, path, metadata=run_meta)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc.strerror}") from None
        last = trace.snapshots[-1]
        print(f"{name}: K={args.K} final f={last.f_value:.6g} grad_sq={last.grad_norm_sq:.6g} -> {path}",
              file=out)
    return status


def fit_report(trace, p, infima_iters=200):
    """ES prediction, ES fit and RG fit for ``trace`` (uniform single-element sampling)."""
    f_inf, comps = estimation.estimate_infima(p, infima_iters, reference=trace)
    est = p.with_infima(f_inf, comps)
    try:
        gap = problems.delta_inf(est)
    except problems.InconsistentInfimaError as exc:
        print(f"warning: {exc}; using delta_inf = 0", file=sys.stderr)
        gap = 0.0
    a = float(np.max(est.l_components))
    predicted = model.EsConstants(a, 0.0, 2.0 * a * gap)
    return [
        estimation.predicted_es(trace, predicted, f_inf),
        estimation.fit_trace(trace, "es", f_inf, label="es_fit"),
        estimation.fit_trace(trace, "rg", f_inf, label="rg_fit"),
    ]


def cmd_fit(args, out=sys.stdout):
    if not args.trace:
        raise UsageError("--trace is required")
    try:
        trace = ingest.read_trace_csv(args.trace)
    except OSError as exc:
        raise UsageError(f"cannot read trace {args.trace}: {exc.strerror}") from None
    except (ingest.SchemaError, ValueError) as exc:
        raise UsageError(f"unreadable trace {args.trace}: {exc}") from None
    if len(trace) == 0:
        raise UsageError(f"trace {args.trace} has no snapshots")
    p, _ = build_problem(args)
    fits = fit_report(trace, p, args.infima_iters)
    ingest.write_fit_csv(fits, args.out)
    print(f"{'row':<14}{'2A':>12}{'B':>12}{'C':>12}{'residual':>12}", file=out)
    for fit in fits:
        cells = "".join(f"{'-':>12}" if v is None else f"{v:>12.4g}" for v in fit.table_row())
        print(f"{fit.label:<14}{cells}{fit.residual:>12.4g}", file=out)
    ok = fits[1].residual <= fits[2].residual * (1 + 1e-9) + 1e-15
    print(f"{'PASS' if ok else 'FAIL'} es_fit residual <= rg_fit residual", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_plan(args, out=sys.stdout):
    if not (args.eps and args.eps > 0):
        raise UsageError("--eps must be positive")
    p, _ = build_problem(args)
    x0 = np.zeros(p.d)
    delta0 = args.delta0 if args.delta0 is not None else max(0.0, p.value(x0) - p.f_inf)
    if delta0 < 0:
        raise UsageError("--delta0 must be nonnegative")
    q = sampling.optimal_importance(p)
    tau_star = sampling.optimal_minibatch(delta0, p, args.eps)
    print("q* = " + ", ".join(f"{v:.6g}" for v in q[:20]) + (" ..." if p.n > 20 else ""), file=out)
    print(f"tau* = {tau_star}", file=out)
    for name in (s.strip() for s in args.sampler.split(",") if s.strip()):
        es = build_scheme(name, p, args.tau, args.q)
        es = sampling.es_constants(es, p)
        k = optimizer.corollary1_iterations(es, p.l_global, delta0, args.eps)
        try:
            gamma = optimizer.corollary1_stepsize(es, p.l_global, k, args.eps)
        except ValueError:
            gamma = math.inf
        print(f"{name}: A={es.a:.6g} B={es.b:.6g} C={es.c:.6g} K={k} gamma={gamma:.6g}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suites


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def _sampling_fixture(n, rng, d=2):
    lc = np.arange(1, n + 1, dtype=float) * (1.0 + rng.random())
    h = lc[:, None, None] * np.eye(d)
    return problems.make_quadratic_sum(h, linear=rng.standard_normal((n, d)) * lc[:, None])


def _fixture_schemes(n, rng):
    q = rng.random(n) + 0.2
    return [
        ("full", sampling.full(n)),
        ("uniform(tau=1)", sampling.uniform_with_replacement(n, 1)),
        ("with_replacement(tau=2)", sampling.with_replacement(2, q / q.sum())),
        ("independent", sampling.independent(rng.uniform(0.2, 0.9, n))),
        *[(f"tau_nice(tau={t})", sampling.tau_nice(n, t)) for t in range(1, n + 1)],
    ]


def suite_samplings(seed=0, mc_draws=100_000, points=50):
    rng = np.random.default_rng(seed)
    checks = []
    for n in (2, 3, 5):
        p = _sampling_fixture(n, rng)
        for label, scheme in _fixture_schemes(n, rng):
            name = f"n={n} {label}"
            exact = np.zeros((n, n))
            for prob, s in sampling.outcomes(scheme):
                v = s.dense(n)
                exact += prob * np.outer(v, v)
            closed = sampling.second_moment_matrix(scheme)
            err = float(np.abs(exact - closed).max())
            checks.append(Check(f"{name} enumeration E[v v^T]", err <= 1e-12, f"max err {err:.2e}"))

            vs = sampling.draw_many(scheme, rng, mc_draws)
            prods = vs[:, :, None] * vs[:, None, :]
            mean = prods.mean(axis=0)
            se = prods.std(axis=0, ddof=1) / math.sqrt(mc_draws)
            z = np.abs(mean - closed) / np.where(se > 0, se, np.inf)
            exact_match = np.all((se > 0) | np.isclose(mean, closed, rtol=1e-12, atol=1e-12))
            checks.append(Check(f"{name} Monte Carlo E[v v^T]", bool(z.max() <= 4.0 and exact_match),
                                f"max |z| {z.max():.2f}"))

            src = sampling.SampledGradient(p, scheme)
            pts = rng.standard_normal((points, p.d)) * 3.0
            rep = estimation.verify_es_bound(src, pts)
            checks.append(Check(f"{name} ES bound at {points} points", rep.passed,
                                f"min slack {rep.min_slack:.3g}"))

            spec = sampling.es_constants(scheme, p)
            gen = sampling.es_constants_generic(scheme, p)
            checks.append(Check(f"{name} generic a >= specific a", gen.a >= spec.a * (1 - 1e-12),
                                f"{gen.a:.4g} vs {spec.a:.4g}"))
    return checks


def suite_compressors(seed=0, dither_vectors=100, dither_trials=2000):
    rng = np.random.default_rng(seed)
    checks = []
    for d, k in ((4, 2), (6, 2), (6, 3)):
        c = compression.rand_k(d, k)
        x = rng.standard_normal(d)
        outs = compression.compress_outcomes(c, x)
        mean = sum(prob * v for prob, v in outs)
        var = math.fsum(prob * float((v - x) @ (v - x)) for prob, v in outs)
        bias = float(np.abs(mean - x).max())
        checks.append(Check(f"rand_k({d},{k}) unbiased", bias <= 1e-12, f"max bias {bias:.2e}"))
        rel = abs(var - c.omega * float(x @ x)) / max(1.0, float(x @ x))
        checks.append(Check(f"rand_k({d},{k}) omega = d/k - 1", rel <= 1e-12,
                            f"E||Q-x||^2/||x||^2 = {var / float(x @ x):.6g}, omega = {c.omega:.6g}"))

    for d, s in ((10, 1), (10, 3), (50, 4)):
        c = compression.dithering(d, s)
        worst = -math.inf
        for _ in range(dither_vectors):
            x = rng.standard_normal(d) * rng.exponential()
            diff = np.array([compression.compress(c, x, rng) - x for _ in range(dither_trials)])
            ratio = np.sum(diff * diff, axis=1) / float(x @ x)
            z = (ratio.mean() - c.omega) / (ratio.std(ddof=1) / math.sqrt(dither_trials))
            worst = max(worst, z)
        checks.append(Check(f"dithering(d={d}, s={s}) variance ratio <= omega", worst <= 4.0,
                            f"worst z {worst:.2f}"))

    checks.append(_composed_check(rng))
    return checks


def _composed_fixture(rng):
    d = 2
    nodes = []
    for _ in range(2):
        lc = rng.uniform(0.5, 3.0, size=2)
        h = lc[:, None, None] * np.eye(d)
        nodes.append(problems.make_quadratic_sum(h, linear=rng.standard_normal((2, d))))
    # the exact global infimum of the average of all four components
    everything = problems.make_quadratic_sum(np.concatenate([p.hessians for p in nodes]),
                                             linear=np.concatenate([p.linear for p in nodes]))
    total = problems.NodeSumProblem(nodes, f_inf=everything.f_inf)
    inner = [sampling.SampledGradient(p, sampling.tau_nice(p.n, 1)) for p in nodes]
    comps = [compression.rand_k(d, 1)] * 2
    return compression.ComposedEstimator(total, comps, inner)


def _composed_check(rng, points=50):
    est = _composed_fixture(rng)
    pts = rng.standard_normal((points, est.problem.d)) * 3.0
    rep = estimation.verify_es_bound(est, pts)
    return Check("composed 2-node rand_k(2,1) ES bound (exact)", rep.passed and all(c.exact for c in rep.checks),
                 f"min slack {rep.min_slack:.3g}")


def suite_counterexample(seed=0):
    ce = problems.make_prop1_counterexample()
    es = ce.es_constants()
    a, b, c = Fraction(es.a), Fraction(es.b), Fraction(es.c)
    worst = None
    for k in range(-100, 101):
        x = Fraction(k, 10)
        g = Fraction(ce.grad(x))
        slack = 2 * a * (Fraction(ce.value(x)) - ce.f_inf) + b * g * g + c - Fraction(ce.second_moment(x))
        worst = slack if worst is None else min(worst, slack)
    checks = [Check("ES (1/2, 0, 2) on [-10, 10] step 0.1, exact", worst >= 0, f"min slack {worst}")]
    for alpha, beta in ((0, 0), (1, 1), (10, 10)):
        x = estimation.rg_violation_witness(alpha, beta)
        m = Fraction(ce.second_moment(Fraction(x)))
        g = Fraction(ce.grad(Fraction(x)))
        bound = alpha * g * g + beta
        checks.append(Check(f"RG({alpha},{beta}) violated at x={x}", m > bound,
                            f"E g^2 = {m} > {bound}"))
    return checks


def suite_conversions(seed=0, trials=1000):
    rng = np.random.default_rng(seed)
    bad = {"rg": 0, "bv": 0, "gc": 0, "strong_growth": 0, "sure_smooth": 0}
    for _ in range(trials):
        f_gap, grad_sq = rng.exponential(2.0), rng.exponential(2.0)
        alpha, beta = rng.exponential(2.0), rng.exponential(2.0)

        m = rng.uniform(0, 1) * (alpha * grad_sq + beta)
        bad["rg"] += not model.satisfies_es(model.rg_to_es(model.RgConstants(alpha, beta)), f_gap, grad_sq, m)

        m = rng.uniform(0, 1) * alpha * grad_sq
        bad["strong_growth"] += not model.satisfies_es(model.strong_growth_to_es(alpha), f_gap, grad_sq, m)

        # bounded variance: m = ||grad f||^2 + variance with variance <= sigma^2
        m = grad_sq + rng.uniform(0, 1) * beta
        es = model.rg_to_es(model.bv_to_rg(model.BvConstant(beta)))
        bad["bv"] += not model.satisfies_es(es, f_gap, grad_sq, m, tol=1e-12 * m)

        # gradient confusion: sample component gradients, take eta from them
        n, d = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        gs = rng.standard_normal((n, d))
        gram = gs @ gs.T
        eta = max(0.0, -float(gram[~np.eye(n, dtype=bool)].min()))
        gbar = gs.mean(axis=0)
        m = float(np.mean(np.sum(gs * gs, axis=1)))
        es = model.rg_to_es(model.gc_to_rg(model.GcConstant(eta, n)))
        bad["gc"] += not model.satisfies_es(es, 0.0, float(gbar @ gbar), m, tol=1e-12 * max(1.0, m))

        # sure smoothness: E||grad f_xi||^2 <= 2 L f(x) with f >= f_inf >= 0
        lip, f_inf = rng.exponential(2.0), rng.exponential(1.0)
        m = rng.uniform(0, 1) * 2 * lip * (f_inf + f_gap)
        es = model.sure_smooth_to_es(lip, f_inf)
        bad["sure_smooth"] += not model.satisfies_es(es, f_gap, grad_sq, m, tol=1e-12 * m)
    return [Check(f"{name} -> ES on {trials} triples", count == 0, f"{count} violations")
            for name, count in bad.items()]


SUITE_FUNCS = {
    "samplings": suite_samplings,
    "compressors": suite_compressors,
    "counterexample": suite_counterexample,
    "conversions": suite_conversions,
}


def cmd_verify(args, out=sys.stdout):
    if args.suite not in SUITE_FUNCS:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = SUITE_FUNCS[args.suite](seed=args.seed)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}", file=out)
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed", file=out)
    return EXIT_OK if failed == 0 else EXIT_FAIL


COMMANDS = {"run": cmd_run, "fit": cmd_fit, "verify": cmd_verify, "plan": cmd_plan}


def main(argv=None):
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"essgd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
