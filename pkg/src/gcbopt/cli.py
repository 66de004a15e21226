"""Command-line entry point: ``gcbopt <subcommand> ...``.

Exit codes: 0 success, 1 a checked inequality failed, 2 bad usage or
configuration, 3 a run failed for another reason (line search, oracle,
unattainable accuracy).
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .curvature import (build_model, gamma_hat, gamma_simple, invert_mu, invert_sigma,
                        model_from_dict)
from .empirical import EmpiricalCurve, estimate_gcb
from .errors import (CapabilityError, ConfigurationError, DomainError, GCBError,
                     InvariantViolation, TraceParseError)
from .harness import run_benchmark, sufficient_iterations, verify_trace
from .problems import load_problem
from .solvers import METHODS, solve
from .trace import SolverConfig, Trace

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2, 3


def _dump(obj):
    print(json.dumps(obj, indent=2, default=_default))


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    return str(o)


def _add_model_args(p, required=True, sum_prefix="--"):
    p.add_argument("--model", required=required,
                   help="quadratic | hoelder | sum | example_1_1, or a .json model "
                        "or .csv curve file")
    p.add_argument("--nu", type=float)
    p.add_argument("--l", dest="L", type=float)
    p.add_argument(sum_prefix + "l0", dest="ML0", type=float,
                   help="linear-growth part of the sum model")
    p.add_argument(sum_prefix + "l1", dest="ML1", type=float,
                   help="quadratic part of the sum model")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--diameter", type=float, default=math.inf)


def _model(args):
    name = args.model
    if name.endswith(".json"):
        with open(name) as fh:
            return model_from_dict(json.load(fh))
    if name.endswith(".csv"):
        return EmpiricalCurve.from_csv(name).to_model()
    return build_model(name, nu=args.nu, L=args.L, L0=args.ML0, L1=args.ML1,
                       dim=args.dim, diameter=args.diameter)


def _add_run_args(p):
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--l0", dest="L0", type=float, default=1e-3,
                   help="initial curvature guess (M0 for ggm)")
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--d", dest="D", type=float, help="bound on beta_d(x0, x*)")
    p.add_argument("--aggressive-l", action="store_true")
    idx = p.add_mutually_exclusive_group()
    idx.add_argument("--proof-indexing", dest="proof_indexing", action="store_true",
                     default=True, help="dgm: test the step at x_k (default)")
    idx.add_argument("--literal-indexing", dest="proof_indexing", action="store_false",
                     help="dgm: test the step at the new iterate")


def _cfg(args, strict=True):
    return SolverConfig(eps=args.eps, delta=args.delta, L0=args.L0, max_iters=args.max_iters,
                        D=args.D, aggressive_l=args.aggressive_l,
                        proof_indexing=args.proof_indexing, strict=strict)


def cmd_solve(args):
    problem = load_problem(args.problem)
    cfg = _cfg(args)
    if args.method == "ggm" and cfg.delta is None:
        raise ConfigurationError("ggm needs --delta")
    report, trace = solve(args.method, problem, cfg)
    if args.trace:
        trace.to_csv(args.trace)
    doc = report.to_dict()
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(doc, fh, indent=2, default=_default)
    _dump(doc)
    return EXIT_OK


def cmd_gauge(args):
    model = _model(args)
    e = args.eps
    _dump({"eps": e, "s_f": invert_mu(model, e), "s_hat_f": invert_sigma(model, e),
           "gamma_f": gamma_simple(model, e), "gamma_hat_f": gamma_hat(model, e)})
    return EXIT_OK


def cmd_bound(args):
    model = _model(args)
    k = sufficient_iterations(model, args.method, args.D, args.eps, args.delta)
    print(k)
    return EXIT_OK


def cmd_estimate(args):
    problem = load_problem(args.problem)
    t = np.linspace(0.0, args.tmax, args.grid + 1)[1:]
    per_bin = max(1, math.ceil(args.samples / args.grid))
    curve = estimate_gcb(problem, t, pairs_per_bin=per_bin, alphas_per_pair=args.alphas,
                         seed=args.seed)
    text = curve.to_csv(args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args):
    problem = load_problem(args.problem)
    model = _model(args) if args.model else None
    trace = Trace.from_csv(args.trace, method=args.method)
    rep, violations = verify_trace(trace, problem, model=model, cfg=_cfg(args),
                                   method=args.method)
    _dump(rep.to_dict())
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_benchmark(args):
    base = SolverConfig(eps=1.0, delta=args.delta, L0=args.L0, max_iters=args.max_iters)
    eps_list = [float(e) for e in args.eps.split(",")]
    methods = args.methods.split(",")
    for m in methods:
        if m not in METHODS:
            raise ConfigurationError(f"unknown method {m!r}")
    reports = run_benchmark(args.problem, methods, eps_list, args.out, base)
    _dump([r.to_dict() for r in reports])
    bad = any(r.violations or r.passed is False for r in reports)
    return EXIT_VIOLATION if bad else EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="gcbopt",
                                 description="Universal gradient methods and curvature bounds.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a method on a problem file")
    p.add_argument("--method", choices=sorted(METHODS), required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--trace", help="CSV trace output")
    p.add_argument("--report", help="JSON run report output")
    _add_run_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gauge", help="complexity gauges and effective curvatures at eps")
    _add_model_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_gauge)

    p = sub.add_parser("bound", help="sufficient iteration count")
    p.add_argument("--method", choices=["simple", "fast", "ggm"], required=True)
    _add_model_args(p)
    p.add_argument("--d", dest="D", type=float, required=True,
                   help="D (simple, fast) or f(x0) - f* (ggm)")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, help="gradient-norm target for ggm")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("estimate-gcb", help="sampled curvature curve")
    p.add_argument("--problem", required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--samples", type=int, default=10_000, help="total number of point pairs")
    p.add_argument("--alphas", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="check a trace against the bounds")
    p.add_argument("--trace", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--method", choices=sorted(METHODS), required=True)
    _add_model_args(p, required=False, sum_prefix="--model-")
    _add_run_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("benchmark", help="sweep problems x methods x eps")
    p.add_argument("--problem", required=True, help="problem file, or {'problems': [...]}")
    p.add_argument("--methods", default="pgm,dgm,ufgm")
    p.add_argument("--eps", default="1e-1,1e-2,1e-3", help="comma-separated")
    p.add_argument("--delta", type=float)
    p.add_argument("--l0", dest="L0", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ConfigurationError, DomainError, CapabilityError, TraceParseError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GCBError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
