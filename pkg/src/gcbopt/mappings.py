"""Per-step subproblems: gradient mapping over Q and Bregman mapping over dom Psi.

Every subproblem is solved in closed form.  The supported catalog is

=============  ==================================================
prox kind      simple part (``psi.kind``)
=============  ==================================================
euclidean      zero (any B), l1 and box (diagonal B),
               ball and simplex (B a multiple of the identity)
entropy        zero or simplex (the domain is the simplex either way), l1
=============  ==================================================

Anything else raises :class:`CapabilityError`; there is no inner iterative
solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapabilityError, DomainError

__all__ = [
    "MappingResult",
    "project_simplex",
    "project_onto",
    "solve_composite_prox",
    "prox_objective",
    "gradient_mapping",
    "bregman_mapping",
    "fop_residual",
    "stationarity_certificate",
]

N_RANDOM_PROBES = 32


@dataclass
class MappingResult:
    point_T: np.ndarray
    step_M: float
    mapped_gradient: Optional[np.ndarray] = None
    model_value: Optional[float] = None
    fop_residual: float = 0.0


def project_simplex(v):
    """Euclidean projection onto the probability simplex.

    Sort-based: find the largest ``rho`` with ``u_rho > (sum_{j<=rho} u_j - 1)/rho``
    for ``u`` sorted descending.  A stable sort keeps ties in index order.
    """
    v = np.asarray(v, dtype=float)
    u = -np.sort(-v, kind="stable")
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = ind[u - css / ind > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_onto(psi, y):
    """Euclidean projection of ``y`` onto ``dom psi``."""
    y = np.asarray(y, dtype=float)
    if psi.kind == "box":
        return np.clip(y, psi.lo, psi.hi)
    if psi.kind == "ball":
        ctr = psi._ball_center(y.size)
        r = y - ctr
        nr = float(np.linalg.norm(r))
        return y.copy() if nr <= psi.radius else ctr + psi.radius * r / nr
    if psi.kind == "simplex":
        return project_simplex(y)
    return y.copy()


def _soft(u, t):
    return np.sign(u) * np.maximum(np.abs(u) - t, 0.0)


def solve_composite_prox(geometry, psi, z, c, M, w=1.0):
    """Minimize ``<c, y> + M beta_d(z, y) + w Psi(y)`` over ``dom Psi``.

    Parameters
    ----------
    geometry : ProxGeometry
    psi : PsiSpec
    z : array
        Prox anchor (must lie in the relative interior of the simplex for the
        entropy geometry).
    c : array
        Linear coefficient, a dual vector.
    M : float
        Prox weight, ``M > 0``.
    w : float
        Weight of ``Psi``; scales the l1 term.  Indicators are enforced for
        every ``w >= 0``.

    Returns
    -------
    y : ndarray
    """
    if not M > 0:
        raise DomainError(f"prox weight must be positive, got {M}")
    if w < 0:
        raise DomainError("psi weight must be non-negative")
    z = np.asarray(z, dtype=float)
    c = np.asarray(c, dtype=float)

    if geometry.prox_kind == "entropy":
        if psi.kind not in ("zero", "simplex", "l1"):
            raise CapabilityError(f"entropy prox with psi={psi.kind!r} is not supported")
        # on the simplex ||y||_1 = 1, so an l1 term only shifts the objective
        with np.errstate(divide="ignore"):
            logits = np.log(z) - c / M
        m = np.max(logits)
        y = np.exp(logits - m)
        return y / y.sum()

    u = z - geometry.Binv(c) / M
    kind = psi.kind
    if kind == "zero":
        return u
    if kind in ("l1", "box") and not geometry.is_diagonal:
        raise CapabilityError(f"{kind} prox needs a diagonal norm matrix")
    if kind in ("ball", "simplex") and not geometry.is_isotropic:
        raise CapabilityError(f"{kind} prox needs B proportional to the identity")
    if kind == "l1":
        return _soft(u, w * psi.lam / (M * geometry.diag))
    return project_onto(psi, u)


def prox_objective(geometry, psi, z, c, M, w, y):
    """Objective value minimized by :func:`solve_composite_prox`."""
    return float(c @ y) + M * geometry.bregman(z, y) + w * psi.value(y)


def _probe_directions(n, rng):
    eye = np.eye(n)
    rand = rng.standard_normal((N_RANDOM_PROBES, n))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([eye, -eye, rand])


def _domain_psi(problem_psi, geometry):
    if geometry.prox_kind == "entropy":
        from .problems import PsiSpec
        return PsiSpec(kind="simplex")
    return problem_psi


def fop_residual(geometry, psi, T, G, psi_weight=1.0, seed=0):
    """Worst normalized violation of ``<G, y - T> + w (Psi(y) - Psi(T)) >= 0``.

    ``y`` ranges over short feasible moves from ``T`` along the coordinate
    directions (both signs) and 32 random directions.  A zero return means
    the first-order condition holds on every probe.
    """
    T = np.asarray(T, dtype=float)
    rng = np.random.default_rng(seed)
    dom = _domain_psi(psi, geometry)
    h = 1e-3 * max(1.0, float(np.abs(T).max()) if T.size else 1.0)
    psi_T = psi.value(T)
    worst = 0.0
    for d in _probe_directions(T.size, rng):
        y = project_onto(dom, T + h * d)
        step = float(np.linalg.norm(y - T))
        if step < 1e-14:
            continue
        gap = float(G @ (y - T)) + psi_weight * (psi.value(y) - psi_T)
        worst = max(worst, -gap / step)
    return worst


def gradient_mapping(problem, x_bar, M, grad=None, with_residual=False):
    """Projected-gradient step ``T_M(x_bar)`` over ``problem.q_set``.

    ``T = argmin_{x in Q} <grad f(x_bar), x> + M ||x - x_bar||**2 / 2`` in the
    B-norm, and ``g_M = M B (x_bar - T)``.  ``grad`` skips the oracle call
    when the caller already has ``grad f(x_bar)``.
    """
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}")
    geometry = problem.geometry
    if geometry.prox_kind != "euclidean":
        raise CapabilityError("the gradient mapping needs a Euclidean norm")
    x_bar = np.asarray(x_bar, dtype=float)
    if grad is None:
        _, grad = problem.f_oracle(x_bar)
    T = solve_composite_prox(geometry, problem.q_set, x_bar, grad, M, 1.0)
    g = M * geometry.B(x_bar - T)
    res = 0.0
    if with_residual:
        G = grad + M * geometry.B(T - x_bar)
        res = fop_residual(geometry, problem.q_set, T, G)
    return MappingResult(point_T=T, step_M=float(M), mapped_gradient=g, fop_residual=res)


def bregman_mapping(problem, x, M, ev=None, with_residual=True):
    """``B_M(x)`` and the optimal model value ``psi*_M(x)``.

    ``ev`` is an optional precomputed :class:`~gcbopt.problems.Evaluation`
    at ``x``.
    """
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}")
    x = np.asarray(x, dtype=float)
    geometry = problem.geometry
    if ev is None:
        f, g = problem.f_oracle(x)
    else:
        f, g = ev.f, ev.grad
    T = solve_composite_prox(geometry, problem.psi, x, g, M, 1.0)
    value = float(f) + float(g @ (T - x)) + M * geometry.bregman(x, T) + problem.psi.value(T)
    res = 0.0
    if with_residual:
        G = g + M * (geometry.grad_d(T) - geometry.grad_d(x))
        res = fop_residual(geometry, problem.psi, T, G)
    return MappingResult(point_T=T, step_M=float(M), model_value=value, fop_residual=res)


def stationarity_certificate(problem, x_bar, M, eps, probes):
    """Minimum over probes of the slack in the approximate first-order condition.

    For ``T = T_M(x_bar)`` and each probe ``x`` in Q this evaluates

        <grad f(T), x - T> + 1.5 eps + (2/M) ||g_M||_***2 + 2 M ||x - T||**2

    A non-negative minimum certifies the condition on the probe set.  The
    guarantee behind it needs ``M >= gamma_hat_f(eps)``; that is the caller's
    business (the harness checks it when a model is known).
    """
    geometry = problem.geometry
    res = gradient_mapping(problem, x_bar, M)
    T = res.point_T
    _, gT = problem.f_oracle(T)
    gnorm2 = geometry.dual_norm(res.mapped_gradient) ** 2
    best = math.inf
    for x in probes:
        x = np.asarray(x, dtype=float)
        if not problem.q_set.contains(x):
            raise DomainError(f"probe {x.tolist()} lies outside Q")
        val = (float(gT @ (x - T)) + 1.5 * eps + 2.0 / M * gnorm2
               + 2.0 * M * geometry.norm(x - T) ** 2)
        best = min(best, val)
    return best
