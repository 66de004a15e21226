"""Complexity bounds, trace verification and benchmark sweeps.

Conventions for comparing runs with bounds:

* ``simple`` (primal and dual methods): ``achieved_k`` is the number of
  iterations performed.
* ``fast``: ``achieved_k`` is the index of the last iteration, so a run
  of ``K`` iterations reports ``K - 1``.
* ``ggm``: ``achieved_k`` is the number of accepted iterations before the
  gradient-norm stop.

Bounds are compared with ``eps`` under a relative tolerance of ``1e-12`` so
that exact ties are not lost to rounding.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .curvature import gamma_hat, gamma_simple, mu_hat, sigma_hat
from .errors import ConfigurationError, DomainError, GCBError, UnattainableAccuracyError
from .problems import problem_from_spec
from .solvers import solve
from .trace import SolverConfig, Trace, Violation

__all__ = [
    "BoundReport",
    "Violation",
    "direct_bound_simple",
    "direct_bound_fast",
    "ggm_bound_holds",
    "sufficient_iterations",
    "bound_kind",
    "verify_trace",
    "run_benchmark",
]

TIE_TOL = 1e-12
K_LIMIT = 2 ** 62
BOUND_KIND = {"pgm": "simple", "dgm": "simple", "ufgm": "fast", "ggm": "ggm"}


@dataclass
class BoundReport:
    method: str
    model: Optional[dict]
    D: Optional[float]
    eps: float
    bound_value_at_k: Optional[float] = None
    sufficient_k: Optional[int] = None
    achieved_k: Optional[int] = None
    passed: Optional[bool] = None
    delta: Optional[float] = None
    problem: Optional[str] = None
    solver: Optional[str] = None
    violations: list = field(default_factory=list)
    error: Optional[str] = None

    def __post_init__(self):
        if self.passed is None and self.achieved_k is not None and self.sufficient_k is not None:
            self.passed = self.achieved_k <= self.sufficient_k

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        return d


def bound_kind(method):
    try:
        return BOUND_KIND[method]
    except KeyError:
        raise ConfigurationError(f"unknown method {method!r}") from None


def _check_k(k, least):
    if int(k) != k or k < least:
        raise DomainError(f"k must be an integer >= {least}, got {k}")


def direct_bound_simple(model, D, k):
    """``2 mu_hat(2 sqrt(D / k))``: primal and dual methods after ``k`` steps."""
    _check_k(k, 1)
    if not D >= 0:
        raise DomainError("D must be non-negative")
    return 2.0 * mu_hat(model, 2.0 * math.sqrt(D / k))


def direct_bound_fast(model, D, k):
    """``(k+1) mu_hat(2 (2/(k+1))**1.5 sqrt(D))``: fast method at index ``k``."""
    _check_k(k, 1)
    if not D >= 0:
        raise DomainError("D must be non-negative")
    q = 2.0 / (k + 1)
    return (k + 1) * mu_hat(model, 2.0 * q * math.sqrt(q) * math.sqrt(D))


def ggm_bound_holds(model, delta0, delta, N):
    """``delta0 > N sigma_hat(2**2.5 delta0 / (N delta))`` (ties count as failure)."""
    _check_k(N, 1)
    r = 2.0 ** 2.5 * delta0 / (N * delta)
    try:
        val = N * sigma_hat(model, r)
    except DomainError:
        return False
    return val < delta0 * (1.0 - TIE_TOL)


def _smallest(ok, what):
    """Smallest integer ``k >= 1`` with ``ok(k)``, for a monotone predicate."""
    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > K_LIMIT:
            raise UnattainableAccuracyError(f"{what}: no k up to 2**62 meets the target")
    lo = hi // 2
    # invariant: ok(hi), not ok(lo) (or lo == 0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def sufficient_iterations(model, method, D_or_delta0, eps, delta=None):
    """Smallest ``k`` certified by the bound of ``method``.

    Parameters
    ----------
    model : CurvatureModel
    method : {"simple", "fast", "ggm"}
        Also accepts solver names (``pgm``, ``dgm``, ``ufgm``).
    D_or_delta0 : float
        ``D`` for the convex bounds, ``f(x0) - f*`` for ``ggm``.
    eps : float
        Target accuracy.  For ``ggm`` it is the gradient-norm target unless
        ``delta`` is given.
    """
    kind = BOUND_KIND.get(method, method)
    if kind not in ("simple", "fast", "ggm"):
        raise ConfigurationError(f"unknown bound kind {method!r}")
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not D_or_delta0 >= 0:
        raise DomainError("D must be non-negative")
    if kind == "ggm":
        d = eps if delta is None else delta
        if D_or_delta0 == 0:
            return 1
        return _smallest(lambda n: ggm_bound_holds(model, D_or_delta0, d, n), "ggm bound")
    fun = direct_bound_simple if kind == "simple" else direct_bound_fast

    def ok(k):
        try:
            return fun(model, D_or_delta0, k) <= eps * (1.0 + TIE_TOL)
        except DomainError:
            return False

    return _smallest(ok, f"{kind} bound")


# ---------------------------------------------------------------------------
# trace verification

def _rel_le(lhs, rhs, tol):
    return lhs <= rhs + tol * (1.0 + abs(rhs))


class _Collector:
    def __init__(self, tol):
        self.tol = tol
        self.items = []

    def le(self, name, k, lhs, rhs, tol=None):
        if not _rel_le(lhs, rhs, self.tol if tol is None else tol):
            self.items.append(Violation(name, int(k), float(lhs), float(rhs)))

    def eq(self, name, k, lhs, rhs, tol):
        if abs(lhs - rhs) > tol * max(abs(lhs), abs(rhs), 1e-300):
            self.items.append(Violation(name, int(k), float(lhs), float(rhs)))


def _safe(fn, *args):
    try:
        return fn(*args)
    except (DomainError, UnattainableAccuracyError):
        return None


def verify_trace(trace, problem, model=None, cfg=None, method=None, D=None, delta0=None):
    """Check a trace against every inequality that applies to its method.

    Parameters
    ----------
    trace : Trace
    problem : CompositeProblem
        Supplies ``f(x0)``, the known optimum and the default model.
    model : CurvatureModel, optional
        Enables the model-dependent checks; defaults to ``problem.known_model``.
    cfg : SolverConfig
        Must match the run (``eps``, ``L0``, ``delta``, ``aggressive_l``).
    method : str, optional
        Overrides ``trace.method`` (needed for traces read from CSV).
    D, delta0 : float, optional
        Override ``beta_d(x0, x*)`` and ``f(x0) - f*``.

    Returns
    -------
    (BoundReport, list of Violation)

    Notes
    -----
    Violation names:

    ``iteration_index``  rows are numbered ``0, 1, ...``
    ``l_update``         ``L_{k+1} = 2**i_k L_k`` (fast) or ``2**(i_k-1) L_k``
    ``doubling_count``   net doublings equal ``log2(L_final / L0)``
    ``descent``          nonconvex method: ``f`` drops by ``M_{k+1} ||step||**2 / 2``
    ``m_bound``          nonconvex method: ``M_k <= gamma_hat(2 delta0 / N)``
    ``l_bound``          primal/dual: ``L_{k+1} <= gamma(eps)``; fast:
                         ``L_{k+1} <= 2 gamma(eps tau_k)``
    ``dual_rate``        dual method running inequality
    ``tau_monotone``     ``tau_k <= tau_{k-1}``
    ``tau_bound``        ``tau_k <= 2/(k+1)``
    ``l_tau_identity``   ``1/(A_{k+1} tau_k**2) = M`` of the accepted trial
    ``a_sum``            ``A_{k+1} = A_k + a_{k+1}``
    ``a_growth``         ``A_{k+1} >= (k+1)**2 / (4 L_{k+1})``
    ``estimate_certificate``  ``A_{k+1} (f_tilde(y_{k+1}) - eps/2) <= phi*_{k+1}``
    ``oracle_calls_bound``    fast method line-search count while ``A <= 2D/eps``
    ``iteration_bound``  achieved iterations within the sufficient count
    """
    if cfg is None:
        raise ConfigurationError("verify_trace needs the run's SolverConfig")
    method = method or trace.method
    kind = bound_kind(method)
    model = problem.known_model if model is None else model
    if D is None:
        D = cfg.D if cfg.D is not None else problem.D()
    eps = cfg.eps
    L0 = cfg.L0
    out = _Collector(cfg.check_tol)
    recs = list(trace)
    aggressive = method == "ufgm" and cfg.aggressive_l

    # indexing and L updates
    L_prev = L0
    net = 0
    for j, r in enumerate(recs):
        if r.k != j:
            out.items.append(Violation("iteration_index", j, float(r.k), float(j)))
        if r.i_k < 0:
            out.items.append(Violation("l_update", r.k, float(r.i_k), 0.0))
        shift = r.i_k if (method == "ufgm" and not aggressive) else r.i_k - 1
        net += shift
        out.eq("l_update", r.k, r.L, math.ldexp(L_prev, shift), 1e-12)
        L_prev = r.L
    if recs:
        out.eq("doubling_count", recs[-1].k, float(net), math.log2(recs[-1].L / L0), 1e-9)

    gam_eps = _safe(gamma_simple, model, eps) if model is not None else None

    if method == "ggm":
        f_prev = float(problem.f_oracle(problem.x0)[0])
        for r in recs:
            out.le("descent", r.k, r.f, f_prev - 0.5 * r.L * r.step_norm ** 2)
            f_prev = r.f
    elif method in ("pgm", "dgm"):
        if gam_eps is not None:
            cap = max(gam_eps, L0 / 2)
            for r in recs:
                out.le("l_bound", r.k, r.L, cap)
        if method == "dgm":
            S = 0.0
            lhs = 0.0
            for r in recs:
                S += 1.0 / r.L
                lhs += r.f_tilde / (2.0 * r.L)
                if r.phi_star is None:
                    out.items.append(Violation("dual_rate", r.k, math.nan, math.nan))
                    continue
                out.le("dual_rate", r.k, lhs, r.phi_star + S * eps / 4)
    else:
        tau_prev = math.inf
        A_prev = 0.0
        L_prev = L0
        for r in recs:
            k = r.k
            if r.tau is None or r.A is None or r.a is None or r.phi_star is None:
                out.items.append(Violation("estimate_certificate", k, math.nan, math.nan))
                continue
            M = math.ldexp(L_prev, r.i_k)
            out.eq("l_tau_identity", k, 1.0 / (r.A * r.tau ** 2), M, 1e-12)
            out.eq("a_sum", k, r.A, A_prev + r.a, 1e-12)
            out.le("estimate_certificate", k, r.A * (r.f_tilde - eps / 2), r.phi_star)
            if not aggressive:
                out.le("tau_monotone", k, r.tau, tau_prev)
                out.le("tau_bound", k, r.tau, 2.0 / (k + 1))
                out.le("a_growth", k, (k + 1) ** 2 / (4.0 * r.L), r.A)
                if model is not None:
                    g = _safe(gamma_simple, model, eps * r.tau)
                    if g is not None:
                        out.le("l_bound", k, r.L, max(2.0 * g, L0))
            tau_prev, A_prev, L_prev = r.tau, r.A, r.L
        if model is not None and D is not None and D > 0 and not aggressive:
            m2 = _safe(mu_hat, model, 2.0 * math.sqrt(D))
            g = None
            if m2 is not None and m2 > 0:
                g = _safe(gamma_simple, model, eps ** 3 / (4.0 * m2 ** 2))
            if g is not None:
                cap = 1.0 + math.log2(g) - math.log2(L0)
                for r in recs:
                    if r.A is not None and r.A <= 2.0 * D / eps:
                        out.le("oracle_calls_bound", r.k, math.log2(r.L / L0), cap)

    # iteration bound
    report = BoundReport(method=kind, model=model.to_dict() if model is not None else None,
                         D=D, eps=eps, solver=method, problem=problem.name)
    if model is not None:
        if kind == "ggm":
            if delta0 is None and problem.f_star is not None:
                delta0 = float(problem.f_oracle(problem.x0)[0]) - problem.f_star
            delta = cfg.delta if cfg.delta is not None else eps
            report.delta = delta
            report.D = delta0
            if delta0 is not None:
                N = _safe(sufficient_iterations, model, "ggm", delta0, eps, delta)
                if N is not None:
                    report.sufficient_k = N
                    report.bound_value_at_k = N * sigma_hat(model, 2 ** 2.5 * delta0 / (N * delta))
                    mcap = _safe(gamma_hat, model, 2.0 * delta0 / N)
                    if mcap is not None:
                        for r in recs:
                            out.le("m_bound", r.k, r.L, mcap)
        elif D is not None:
            K = _safe(sufficient_iterations, model, kind, D, eps)
            if K is not None:
                report.sufficient_k = K
                fun = direct_bound_simple if kind == "simple" else direct_bound_fast
                report.bound_value_at_k = _safe(fun, model, D, K)
    if kind == "fast":
        report.achieved_k = len(recs) - 1 if recs else None
    else:
        report.achieved_k = len(recs)
    if report.achieved_k is not None and report.sufficient_k is not None:
        report.passed = report.achieved_k <= report.sufficient_k
        if not report.passed:
            out.items.append(Violation("iteration_bound", report.achieved_k,
                                       float(report.achieved_k), float(report.sufficient_k)))
    report.violations = [asdict(v) for v in out.items]
    return report, out.items


# ---------------------------------------------------------------------------
# sweeps

def _load_specs(spec):
    if isinstance(spec, (str, os.PathLike)):
        with open(spec) as fh:
            spec = json.load(fh)
    if isinstance(spec, dict) and "problems" in spec:
        return list(spec["problems"])
    if isinstance(spec, dict):
        return [spec]
    return list(spec)


def _tag(x):
    return f"{x:.0e}".replace("+", "")


def run_benchmark(spec, methods, eps_list, out_dir, base_cfg=None):
    """Run every (problem, method, eps) cell and write its trace and report.

    Each cell writes ``<problem>_<method>_<eps>.csv`` and a matching
    ``.json`` report ``{problem, method, eps, sufficient_k, achieved_k,
    violations, ...}``.  A failing cell records its error and the sweep
    continues.  A problem entry may carry a ``name`` used in file names.
    ``ggm`` cells use ``delta = eps`` unless ``base_cfg.delta``
    is set.

    Returns
    -------
    list of BoundReport
    """
    os.makedirs(out_dir, exist_ok=True)
    base_cfg = base_cfg or SolverConfig()
    reports = []
    for j, pspec in enumerate(_load_specs(spec)):
        pspec = dict(pspec)
        pname = pspec.pop("name", None)
        problem = problem_from_spec(pspec)
        pname = pname or f"{problem.name}{j}"
        for method in methods:
            for eps in eps_list:
                cfg = replace(base_cfg, eps=eps)
                if method == "ggm" and cfg.delta is None:
                    cfg = replace(cfg, delta=eps)
                stem = os.path.join(out_dir, f"{pname}_{method}_{_tag(eps)}")
                try:
                    run, trace = solve(method, problem, cfg)
                    trace.to_csv(stem + ".csv")
                    rep, _ = verify_trace(trace, problem, cfg=cfg)
                    rep.problem = pname
                    extra = {"termination": run.termination, "iterations": run.iterations,
                             "oracle_calls": run.oracle_calls, "L_final": run.L_final,
                             "certified_gap": run.certified_gap}
                except (GCBError, ValueError, ArithmeticError) as exc:
                    rep = BoundReport(method=BOUND_KIND.get(method, method), model=None,
                                      D=None, eps=eps, problem=pname, solver=method,
                                      passed=False, error=f"{type(exc).__name__}: {exc}")
                    extra = {}
                doc = {"problem": pname, "method": method, "eps": eps,
                       "sufficient_k": rep.sufficient_k, "achieved_k": rep.achieved_k,
                       "violations": rep.violations, "passed": rep.passed,
                       "error": rep.error, **extra}
                with open(stem + ".json", "w") as fh:
                    json.dump(doc, fh, indent=2, default=_json_default)
                reports.append(rep)
    return reports


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)
