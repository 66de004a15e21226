"""Universal gradient methods with doubling line searches.

All four methods learn the curvature on the fly: each iteration tries
``M = 2**i * L_k`` for ``i = 0, 1, ...`` and keeps the smallest ``i`` that
passes the method's acceptance test.  Acceptance inequalities use plain
``<=`` with no slack beyond the ``eps`` terms of the tests themselves.

Oracle calls (each returns ``f`` and ``grad f`` at one point):

=======  ================================================
ggm      ``1 + sum_k (i_k + 1)``, plus one to evaluate the stop point
pgm      ``1 + sum_k (i_k + 1)``
dgm      ``1 + sum_k (i_k + 2)``, or ``1 + 2 sum_k (i_k + 1)``
         without ``proof_indexing``
ufgm     ``2 sum_k (i_k + 1)``
=======  ================================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvariantViolation, LineSearchError
from .mappings import bregman_mapping, gradient_mapping, solve_composite_prox
from .problems import evaluate
from .trace import IterationRecord, RunReport, SolverConfig, Trace, Violation

__all__ = [
    "SolverConfig",
    "EstimateFunction",
    "ggm_solve",
    "pgm_solve",
    "dgm_solve",
    "ufgm_step_coefficient",
    "ufgm_solve",
    "solve",
    "METHODS",
]


class _CountingProblem:
    """Wraps a problem's oracle to count calls."""

    def __init__(self, problem):
        self._p = problem
        self.calls = 0

    def __getattr__(self, name):
        return getattr(self._p, name)

    def f_oracle(self, x):
        self.calls += 1
        return self._p.f_oracle(x)


def _resolve_D(problem, cfg):
    if cfg.D is not None:
        return float(cfg.D)
    if cfg.use_known_optimum and problem.known_optimum is not None:
        return float(problem.D())
    return None


def _linear_lower_bound(problem, s, c0, W):
    """``min_y (c0 + <s, y>) / W`` over a bounded ``dom Psi`` where ``Psi = 0``.

    Returns ``None`` when the domain is unbounded, so no certificate exists.
    """
    if W <= 0:
        return None
    if problem.geometry.prox_kind == "entropy":
        if problem.psi.kind not in ("zero", "simplex"):
            return None
        return (c0 + float(np.min(s))) / W
    if not problem.psi.bounded:
        return None
    y = problem.psi.lmo(s)
    return (c0 + float(s @ y)) / W


def _check(report, cfg, name, k, lhs, rhs):
    """Online check ``lhs <= rhs`` with relative tolerance ``cfg.check_tol``."""
    if lhs <= rhs + cfg.check_tol * (1.0 + abs(rhs)):
        return
    if cfg.strict:
        raise InvariantViolation(f"{name} failed at k={k}: {lhs!r} > {rhs!r}",
                                 name=name, iteration=k, lhs=lhs, rhs=rhs)
    report.append(Violation(name, k, float(lhs), float(rhs)))


def _line_search_failure(method, k, last_i):
    return LineSearchError(f"{method}: no acceptable step after {last_i + 1} trials at k={k}",
                           last_i=last_i, iteration=k)


@dataclass
class EstimateFunction:
    """``phi(x) = beta_d(x0, x) + <s, x> + c0 + W Psi(x)``.

    Accumulates weighted linear models ``w [f(x_j) + <g_j, x - x_j>]`` into
    ``s`` and ``c0`` and their ``Psi`` weights into ``W``.
    """

    geometry: object
    psi: object
    x0: np.ndarray
    s: np.ndarray = None
    c0: float = 0.0
    W: float = 0.0

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.s is None:
            self.s = np.zeros_like(self.x0)

    def plus(self, w, f, g, x):
        """A copy with ``w [f + <g, . - x> + Psi]`` added."""
        return EstimateFunction(self.geometry, self.psi, self.x0, self.s + w * g,
                                self.c0 + w * (f - float(g @ x)), self.W + w)

    def argmin(self):
        return solve_composite_prox(self.geometry, self.psi, self.x0, self.s, 1.0, self.W)

    def value(self, x):
        return (self.geometry.bregman(self.x0, x) + float(self.s @ x) + self.c0
                + self.W * self.psi.value(x))

    def minimum(self):
        v = self.argmin()
        return v, self.value(v)


# ---------------------------------------------------------------------------
# nonconvex

def ggm_solve(problem, cfg):
    """Gradient method over ``Q`` for possibly nonconvex ``f``.

    Stops at the first trial whose gradient mapping has dual norm at most
    ``cfg.delta``; the trace holds accepted iterations only and the stop
    point is in the report (``x``, ``M_bar``, ``grad_map_norm``).
    """
    if cfg.delta is None:
        raise ConfigurationError("ggm needs delta")
    p = _CountingProblem(problem)
    geometry = problem.geometry
    x = problem.x0
    if not problem.q_set.contains(x):
        raise ConfigurationError("x0 must lie in Q")
    M = float(cfg.L0)
    f_x, g_x = p.f_oracle(x)
    f_x = float(f_x)
    trace = Trace("ggm")
    warnings = []
    doublings = 0
    termination = "max_iters"
    x_bar, M_bar, gnorm_bar = x, M, None

    for k in range(cfg.max_iters):
        accepted = False
        for i in range(cfg.max_doublings_per_iter + 1):
            Mi = math.ldexp(M, i)
            res = gradient_mapping(p, x, Mi, grad=g_x)
            gnorm = geometry.dual_norm(res.mapped_gradient)
            if gnorm <= cfg.delta:
                termination = "gradient_norm"
                x_bar, M_bar, gnorm_bar = res.point_T, Mi, gnorm
                break
            T = res.point_T
            f_T, g_T = p.f_oracle(T)
            f_T = float(f_T)
            step2 = geometry.norm(T - x) ** 2
            if f_x - f_T >= math.ldexp(M, i - 2) * step2:
                accepted = True
                break
        if termination == "gradient_norm":
            break
        if not accepted:
            raise _line_search_failure("ggm", k, cfg.max_doublings_per_iter)
        M_new = math.ldexp(M, i - 1)
        doublings += i
        _check(warnings, cfg, "descent", k, f_T, f_x - math.ldexp(M, i - 2) * step2)
        trace.append(IterationRecord(k=k, i_k=i, L=M_new, f=f_T, f_tilde=f_T,
                                     grad_map_norm=gnorm, step_norm=math.sqrt(step2)))
        x, f_x, g_x, M = T, f_T, g_T, M_new
        x_bar, M_bar, gnorm_bar = x, M, gnorm

    f_bar = float(p.f_oracle(x_bar)[0]) if termination == "gradient_norm" else f_x
    best = min([f_bar] + [r.f for r in trace])
    report = RunReport(method="ggm", x=x_bar, f_tilde=f_bar, best_f_tilde=best,
                       iterations=len(trace), oracle_calls=p.calls, doublings=doublings,
                       termination=termination, L0=cfg.L0, L_final=M, eps=cfg.eps,
                       grad_map_norm=gnorm_bar, M_bar=M_bar, warnings=warnings)
    return report, trace


# ---------------------------------------------------------------------------
# primal

def pgm_solve(problem, cfg):
    """Primal gradient method on ``f + Psi`` with Bregman steps.

    The report's ``averaged_f_tilde`` is the ``1/L_{i+1}``-weighted average
    of ``f_tilde(x_{i+1})``.  Stopping uses ``eps/2 + 2 D / S_k`` when ``D``
    is available, else the gap to the minimum of the averaged linear model
    over a bounded domain, else ``max_iters``.
    """
    p = _CountingProblem(problem)
    D = _resolve_D(problem, cfg)
    eps = cfg.eps
    x = problem.x0
    ev = evaluate(p, x)
    L = float(cfg.L0)
    S = 0.0
    acc = 0.0
    s_lin = np.zeros(problem.dim)
    c_lin = 0.0
    trace = Trace("pgm")
    warnings = []
    doublings = 0
    termination = "max_iters"
    gap = None
    best = ev.f_tilde

    for k in range(cfg.max_iters):
        for i in range(cfg.max_doublings_per_iter + 1):
            M = math.ldexp(L, i)
            T = bregman_mapping(p, x, M, ev=ev, with_residual=False).point_T
            evT = evaluate(p, T)
            step = T - x
            lin = ev.f + float(ev.grad @ step)
            if evT.f <= lin + 0.5 * M * problem.geometry.norm(step) ** 2 + eps / 2:
                break
        else:
            raise _line_search_failure("pgm", k, cfg.max_doublings_per_iter)
        L_new = M / 2
        doublings += i
        w = 1.0 / L_new
        S += w
        acc += w * evT.f_tilde
        s_lin += w * ev.grad
        c_lin += w * (ev.f - float(ev.grad @ x))
        avg = acc / S
        if D is not None:
            gap = eps / 2 + 2 * D / S
        else:
            lower = _linear_lower_bound(problem, s_lin, c_lin, S)
            gap = None if lower is None else avg - lower
        trace.append(IterationRecord(k=k, i_k=i, L=L_new, f=evT.f, f_tilde=evT.f_tilde,
                                     step_norm=problem.geometry.norm(step)))
        best = min(best, evT.f_tilde)
        x, ev, L = T, evT, L_new
        if gap is not None and gap <= eps:
            termination = "accuracy"
            break

    report = RunReport(method="pgm", x=x, f_tilde=ev.f_tilde, best_f_tilde=best,
                       iterations=len(trace), oracle_calls=p.calls, doublings=doublings,
                       termination=termination, L0=cfg.L0, L_final=L, eps=eps,
                       certified_gap=gap, averaged_f_tilde=acc / S if S else None,
                       warnings=warnings)
    return report, trace


# ---------------------------------------------------------------------------
# dual

def dgm_solve(problem, cfg):
    """Dual gradient method driven by an estimate function.

    Iteration ``k`` with ``M = 2**i L_k`` forms
    ``phi' = phi_k + (1/M) [f(x_k) + <grad f(x_k), . - x_k> + Psi]`` and its
    minimizer ``x'``.  By default (``cfg.proof_indexing``) the step is
    tested at ``x_k``: ``y = B_M(x_k)`` is accepted when
    ``f_tilde(y) <= psi*_M(x_k) + eps/2``.  With ``proof_indexing=False`` the
    test maps ``x'`` instead (``y = B_M(x')``, ``psi*_M(x')``).  That variant
    can break the running inequality below by far more than rounding (for
    example on ``box_quadratic``), so with ``strict`` on it may abort.

    The running inequality
    ``sum_i f_tilde(y_i) / (2 L_{i+1}) <= phi*_{k+1} + S_k eps / 4`` is
    checked after every iteration.
    """
    p = _CountingProblem(problem)
    D = _resolve_D(problem, cfg)
    eps = cfg.eps
    geometry = problem.geometry
    x = problem.x0
    ev = evaluate(p, x)
    L = float(cfg.L0)
    phi = EstimateFunction(geometry, problem.psi, x)
    S = 0.0
    lhs = 0.0
    trace = Trace("dgm")
    warnings = []
    doublings = 0
    termination = "max_iters"
    gap = None
    best = ev.f_tilde
    y_last = x

    for k in range(cfg.max_iters):
        for i in range(cfg.max_doublings_per_iter + 1):
            M = math.ldexp(L, i)
            cand = phi.plus(1.0 / M, ev.f, ev.grad, x)
            if cfg.proof_indexing:
                bm = bregman_mapping(p, x, M, ev=ev, with_residual=False)
                y = bm.point_T
                ev_y = evaluate(p, y)
                if ev_y.f_tilde <= bm.model_value + eps / 2:
                    x_next = cand.argmin()
                    ev_next = evaluate(p, x_next)
                    break
            else:
                x_next = cand.argmin()
                ev_next = evaluate(p, x_next)
                bm = bregman_mapping(p, x_next, M, ev=ev_next, with_residual=False)
                y = bm.point_T
                ev_y = evaluate(p, y)
                if ev_y.f_tilde <= bm.model_value + eps / 2:
                    break
        else:
            raise _line_search_failure("dgm", k, cfg.max_doublings_per_iter)
        L_new = M / 2
        doublings += i
        phi = cand
        phi_star = phi.value(x_next)
        S += 1.0 / L_new
        lhs += ev_y.f_tilde / M
        _check(warnings, cfg, "dual_rate", k, lhs, phi_star + S * eps / 4)
        avg = lhs / (S / 2)
        if D is not None:
            gap = eps / 2 + 2 * D / S
        else:
            lower = _linear_lower_bound(problem, phi.s, phi.c0, phi.W)
            gap = None if lower is None else avg - lower
        trace.append(IterationRecord(k=k, i_k=i, L=L_new, f=ev_y.f, f_tilde=ev_y.f_tilde,
                                     phi_star=phi_star, step_norm=geometry.norm(x_next - x)))
        best = min(best, ev_y.f_tilde)
        x, ev, L, y_last = x_next, ev_next, L_new, y
        if gap is not None and gap <= eps:
            termination = "accuracy"
            break

    report = RunReport(method="dgm", x=y_last, f_tilde=trace[-1].f_tilde if len(trace) else
                       ev.f_tilde, best_f_tilde=best, iterations=len(trace),
                       oracle_calls=p.calls, doublings=doublings, termination=termination,
                       L0=cfg.L0, L_final=L, eps=eps, certified_gap=gap,
                       averaged_f_tilde=lhs / (S / 2) if S else None, warnings=warnings)
    return report, trace


# ---------------------------------------------------------------------------
# fast

def ufgm_step_coefficient(L, A):
    """Positive root ``a`` of ``L a**2 = A + a``."""
    if not L > 0:
        raise ConfigurationError("L must be positive")
    if not A >= 0:
        raise ConfigurationError("A must be non-negative")
    return (1.0 + math.sqrt(1.0 + 4.0 * L * A)) / (2.0 * L)


def ufgm_solve(problem, cfg):
    """Fast gradient method with the universal line search.

    Iteration ``k``: ``v = argmin phi_k``; for ``M = 2**i L_k`` take
    ``a = ufgm_step_coefficient(M, A_k)``, ``tau = a / (A_k + a)``,
    ``x = tau v + (1 - tau) y_k``, ``x_hat`` the Bregman step from ``v`` with
    weight ``a``, ``y' = tau x_hat + (1 - tau) y_k``; accept when
    ``f(y') <= f(x) + <grad f(x), y' - x> + M ||y' - x||**2 / 2 + eps tau / 2``.
    Then ``L_{k+1} = M`` (``M / 2`` with ``cfg.aggressive_l``).

    Checked online: ``A_k (f_tilde(y_k) - eps/2) <= phi*_k``; and, unless
    ``aggressive_l`` is set, ``tau_k <= tau_{k-1}`` and ``tau_k <= 2/(k+1)``.
    Stops when ``A_{k+1} >= 2 D / eps`` if ``D`` is available, else on the
    estimate-function gap, else at ``max_iters``.
    """
    p = _CountingProblem(problem)
    D = _resolve_D(problem, cfg)
    eps = cfg.eps
    geometry = problem.geometry
    psi = problem.psi
    y = problem.x0
    phi = EstimateFunction(geometry, psi, y)
    A = 0.0
    L = float(cfg.L0)
    trace = Trace("ufgm")
    warnings = []
    doublings = 0
    termination = "max_iters"
    gap = None
    best = math.inf
    tau_prev = math.inf
    f_y = None

    for k in range(cfg.max_iters):
        v = phi.argmin()
        for i in range(cfg.max_doublings_per_iter + 1):
            M = math.ldexp(L, i)
            a = ufgm_step_coefficient(M, A)
            A_new = A + a
            tau = a / A_new
            xk = tau * v + (1.0 - tau) * y
            ev_x = evaluate(p, xk)
            x_hat = solve_composite_prox(geometry, psi, v, a * ev_x.grad, 1.0, a)
            y_new = tau * x_hat + (1.0 - tau) * y
            ev_y = evaluate(p, y_new)
            step = y_new - xk
            rhs = (ev_x.f + float(ev_x.grad @ step) + 0.5 * M * geometry.norm(step) ** 2
                   + 0.5 * eps * tau)
            if ev_y.f <= rhs:
                break
        else:
            raise _line_search_failure("ufgm", k, cfg.max_doublings_per_iter)
        L_new = M / 2 if cfg.aggressive_l else M
        doublings += i
        phi = phi.plus(a, ev_x.f, ev_x.grad, xk)
        A, y, f_y = A_new, y_new, ev_y
        _, phi_star = phi.minimum()
        _check(warnings, cfg, "estimate_certificate", k, A * (ev_y.f_tilde - eps / 2), phi_star)
        if not cfg.aggressive_l:
            _check(warnings, cfg, "tau_monotone", k, tau, tau_prev)
            _check(warnings, cfg, "tau_bound", k, tau, 2.0 / (k + 1))
        tau_prev = tau
        trace.append(IterationRecord(k=k, i_k=i, L=L_new, f=ev_y.f, f_tilde=ev_y.f_tilde,
                                     tau=tau, a=a, A=A, phi_star=phi_star,
                                     step_norm=geometry.norm(step)))
        best = min(best, ev_y.f_tilde)
        L = L_new
        if D is not None:
            gap = D / A + eps / 2
            if A >= 2 * D / eps:
                termination = "accuracy"
                break
        else:
            lower = _linear_lower_bound(problem, phi.s, phi.c0, phi.W)
            gap = None if lower is None else ev_y.f_tilde - lower
            if gap is not None and gap <= eps:
                termination = "accuracy"
                break

    report = RunReport(method="ufgm", x=y, f_tilde=f_y.f_tilde if f_y else math.nan,
                       best_f_tilde=best, iterations=len(trace), oracle_calls=p.calls,
                       doublings=doublings, termination=termination, L0=cfg.L0,
                       L_final=L, eps=eps, certified_gap=gap, warnings=warnings)
    return report, trace


METHODS = {"ggm": ggm_solve, "pgm": pgm_solve, "dgm": dgm_solve, "ufgm": ufgm_solve}


def solve(method, problem, cfg):
    try:
        fn = METHODS[method]
    except KeyError:
        raise ConfigurationError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    return fn(problem, cfg)
