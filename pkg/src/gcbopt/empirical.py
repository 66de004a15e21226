"""Brute-force lower estimate of the curvature bound from function samples."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .curvature import TableModel
from .errors import ConfigurationError, SamplingError

__all__ = ["EmpiricalCurve", "estimate_gcb", "convexity_quotient"]


@dataclass
class EmpiricalCurve:
    """Sampled ``mu_hat`` on an ascending grid starting at ``t = 0``."""

    t_grid: np.ndarray
    mu_values: np.ndarray
    sample_budget: int = 0
    seed: int = 0

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.mu_values = np.asarray(self.mu_values, dtype=float)
        if self.t_grid.shape != self.mu_values.shape or self.t_grid.ndim != 1:
            raise ConfigurationError("t_grid and mu_values must be 1-D of equal length")

    def to_model(self, convex_full_domain=True):
        return TableModel(t_grid=tuple(self.t_grid), mu_values=tuple(self.mu_values),
                          convex_full_domain=convex_full_domain)

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "mu_hat"])
        for t, m in zip(self.t_grid, self.mu_values):
            w.writerow([repr(float(t)), repr(float(m))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["t", "mu_hat"]:
            raise ConfigurationError(f"{path}: expected header 't,mu_hat'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:] if a.strip()], dtype=float)
        data = data.reshape(-1, 2)
        return cls(t_grid=data[:, 0], mu_values=data[:, 1])


def convexity_quotient(f, x, y, alpha):
    """``|a f(x) + (1-a) f(y) - f(a x + (1-a) y)| / (a (1-a))``.

    Differences at the level of rounding noise are reported as exactly 0,
    so affine functions give an identically zero curve.
    """
    fx, fy = f(x), f(y)
    fz = f(alpha * x + (1.0 - alpha) * y)
    if not (math.isfinite(fx) and math.isfinite(fy) and math.isfinite(fz)):
        bad = x if not math.isfinite(fx) else (y if not math.isfinite(fy)
                                                else alpha * x + (1 - alpha) * y)
        raise SamplingError("non-finite function value while sampling", point=bad)
    num = alpha * fx + (1.0 - alpha) * fy - fz
    noise = 64 * np.finfo(float).eps * (abs(alpha * fx) + abs((1 - alpha) * fy) + abs(fz))
    if abs(num) <= noise:
        return 0.0
    return abs(num) / (alpha * (1.0 - alpha))


def _sample_box(problem):
    if problem.sample_box is not None:
        lo, hi = problem.sample_box
        n = problem.dim
        return (np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy(),
                np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy())
    x0 = problem.x0
    return x0 - 1.0, x0 + 1.0


def estimate_gcb(problem, t_grid, pairs_per_bin=1000, alphas_per_pair=3, seed=0,
                 max_direction_retries=20):
    """Sampled ``mu_hat`` on ``t_grid`` for the smooth part of ``problem``.

    Each bin ``(t_{j-1}, t_j]`` gets ``pairs_per_bin`` pairs ``x, y`` with
    ``||x - y|| = r`` (geometry norm), ``r`` uniform in the bin; the first
    pair of a bin sits at ``r = t_j``.  The pair midpoint is uniform in the
    part of the sample box that keeps both points inside it.  Each pair is
    scored at ``alpha = j/(A+1)``, ``j = 1..A``.  The curve is then made
    non-decreasing by a running maximum, which is exact here because the
    supremum for ``t_j`` ranges over every pair with distance at most ``t_j``.

    The result never exceeds the true ``mu_hat`` (up to rounding).

    Parameters
    ----------
    problem : CompositeProblem
        Uses ``f_oracle``, ``geometry`` and ``sample_box`` (default ``x0 +- 1``).
    t_grid : array_like
        Ascending, non-negative.  ``t = 0`` is prepended when absent.
    pairs_per_bin, alphas_per_pair, seed : int

    Returns
    -------
    EmpiricalCurve
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ConfigurationError("t_grid must be non-negative and strictly ascending")
    if pairs_per_bin < 1 or alphas_per_pair < 1:
        raise ConfigurationError("need at least one pair and one alpha per bin")
    if t[0] > 0:
        t = np.concatenate(([0.0], t))
    rng = np.random.default_rng(seed)
    lo, hi = _sample_box(problem)
    width = hi - lo
    alphas = np.arange(1, alphas_per_pair + 1) / (alphas_per_pair + 1)
    geometry = problem.geometry

    def f(x):
        return float(problem.f_oracle(x)[0])

    mu = np.zeros_like(t)
    for j in range(1, t.size):
        best = 0.0
        for p in range(pairs_per_bin):
            r = t[j] if p == 0 else rng.uniform(t[j - 1], t[j])
            for _ in range(max_direction_retries):
                d = rng.standard_normal(problem.dim)
                d /= geometry.norm(d)
                span = r * np.abs(d)
                if np.all(span <= width):
                    break
            else:
                continue
            # midpoint range so that both m +- r d / 2 stay in the box
            m = rng.uniform(lo + span / 2, hi - span / 2)
            x, y = m + 0.5 * r * d, m - 0.5 * r * d
            for a in alphas:
                best = max(best, convexity_quotient(f, x, y, a))
        mu[j] = best
    mu = np.maximum.accumulate(mu)
    return EmpiricalCurve(t_grid=t, mu_values=mu,
                          sample_budget=pairs_per_bin * (t.size - 1), seed=seed)
