"""Global Curvature Bound models and the quantities derived from them.

A curvature model is an upper estimate of

    mu_hat(t) = sup |a f(x) + (1-a) f(y) - f(a x + (1-a) y)| / (a (1-a))

over pairs with ``||x - y|| <= t`` and ``a`` in (0, 1).  From it we derive

    sigma_hat(r) = int_0^r mu_hat(tau) / tau dtau
    delta_plus(r) = 2 sigma_hat(r) - mu_hat(r),   lip(r) = 2 mu_hat(r) / r**2

together with the inverse functions (complexity gauges) ``s_f`` and ``s_hat_f``
and the effective curvature constants ``gamma_f`` and ``gamma_hat_f``.

Hoelder models use the integral bound ``L t**(1+nu) / (1+nu)``.  The looser
``L t**(1+nu)`` form is valid too, but is never used here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    NumericalError,
    UnattainableAccuracyError,
)

__all__ = [
    "CurvatureModel",
    "QuadraticModel",
    "HoelderModel",
    "SumModel",
    "TableModel",
    "GaugeConfig",
    "mu_hat",
    "sigma_hat",
    "delta_plus_and_lip",
    "invert_mu",
    "invert_sigma",
    "gamma_simple",
    "gamma_hat",
    "sum_class_radius",
    "example_1_1_model",
    "build_model",
]

# relative slack when testing t against the diameter
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, kw_only=True)
class CurvatureModel:
    """Base class: an upper model of the Global Curvature Bound on Gamma.

    Subclasses implement ``_mu`` and ``_sigma`` without domain checks; the
    module-level functions add validation.
    """

    diameter: float = math.inf
    convex_full_domain: bool = True

    kind = "abstract"

    def _mu(self, t: float) -> float:
        raise NotImplementedError

    def _sigma(self, r: float) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, t):
        return mu_hat(self, t)


@dataclass(frozen=True, kw_only=True)
class QuadraticModel(CurvatureModel):
    """``mu_hat(t) = L t**2 / 2``; exact for ``f = <Ax, x>/2`` with L = max |eig(A)|."""

    L: float
    kind = "quadratic"

    def __post_init__(self):
        if not self.L >= 0:
            raise ConfigurationError(f"quadratic model needs L >= 0, got {self.L}")

    def _mu(self, t):
        return 0.5 * self.L * t * t

    def _sigma(self, r):
        return 0.25 * self.L * r * r

    def to_dict(self):
        return {"kind": self.kind, "L": self.L, "diameter": self.diameter,
                "convex_full_domain": self.convex_full_domain}


@dataclass(frozen=True, kw_only=True)
class HoelderModel(CurvatureModel):
    """Gradient Hoelder-continuous with degree ``nu`` and constant ``L``."""

    nu: float
    L: float
    kind = "hoelder"

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigurationError(f"Hoelder degree must lie in [0, 1], got {self.nu}")
        if not self.L > 0:
            raise ConfigurationError(f"Hoelder constant must be positive, got {self.L}")

    def _mu(self, t):
        return self.L * t ** (1.0 + self.nu) / (1.0 + self.nu)

    def _sigma(self, r):
        return self.L * r ** (1.0 + self.nu) / (1.0 + self.nu) ** 2

    def to_dict(self):
        return {"kind": self.kind, "nu": self.nu, "L": self.L, "diameter": self.diameter,
                "convex_full_domain": self.convex_full_domain}


@dataclass(frozen=True, kw_only=True)
class SumModel(CurvatureModel):
    """Triangle-inequality bound for ``f_1 + ... + f_m``."""

    members: tuple = ()
    kind = "sum"

    def __post_init__(self):
        if not self.members:
            raise ConfigurationError("sum model needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))

    def _mu(self, t):
        return sum(m._mu(t) for m in self.members)

    def _sigma(self, r):
        return sum(m._sigma(r) for m in self.members)

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members],
                "diameter": self.diameter, "convex_full_domain": self.convex_full_domain}


@dataclass(frozen=True, kw_only=True)
class TableModel(CurvatureModel):
    """Monotone table of ``(t, mu_hat(t))`` pairs, linearly interpolated.

    Gamma is ``[0, t_grid[-1]]``: the table says nothing beyond its last knot.
    ``sigma_hat`` is integrated exactly per segment: on a segment where
    ``mu_hat(tau) = p + q tau`` the integrand ``mu_hat/tau`` integrates to
    ``p log(t1/t0) + q (t1 - t0)``, and the first segment starts at
    ``mu_hat(0) = 0`` so its contribution is just ``mu_hat(t1)``.
    """

    t_grid: tuple = ()
    mu_values: tuple = ()
    kind = "custom"
    _cum_sigma: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        m = np.asarray(self.mu_values, dtype=float)
        if t.size == 0:
            raise ConfigurationError("empty curvature table")
        if t.shape != m.shape or t.ndim != 1:
            raise ConfigurationError("t_grid and mu_values must be 1-D of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(m))):
            raise ConfigurationError("curvature table holds non-finite entries")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ConfigurationError("t_grid must be non-negative and strictly ascending")
        if np.any(m < 0) or np.any(np.diff(m) < 0):
            raise ConfigurationError("mu_values must be non-negative and non-decreasing")
        if t[0] > 0:
            t = np.concatenate(([0.0], t))
            m = np.concatenate(([0.0], m))
        elif m[0] != 0.0:
            raise ConfigurationError("mu_hat(0) must be 0")
        object.__setattr__(self, "t_grid", tuple(t.tolist()))
        object.__setattr__(self, "mu_values", tuple(m.tolist()))
        object.__setattr__(self, "diameter", min(self.diameter, float(t[-1])))

        cum = np.zeros_like(t)
        for j in range(1, t.size):
            t0, t1, m0, m1 = t[j - 1], t[j], m[j - 1], m[j]
            if t0 == 0.0:
                seg = m1
            else:
                q = (m1 - m0) / (t1 - t0)
                p = m0 - q * t0
                seg = p * math.log(t1 / t0) + q * (t1 - t0)
            cum[j] = cum[j - 1] + seg
        object.__setattr__(self, "_cum_sigma", cum)

    @property
    def _t(self):
        return np.asarray(self.t_grid)

    @property
    def _m(self):
        return np.asarray(self.mu_values)

    def _mu(self, t):
        return float(np.interp(t, self._t, self._m))

    def _sigma(self, r):
        t, m = self._t, self._m
        j = int(np.searchsorted(t, r, side="right")) - 1
        if j >= t.size - 1:
            return float(self._cum_sigma[-1])
        t0, t1, m0, m1 = t[j], t[j + 1], m[j], m[j + 1]
        if r == t0:
            return float(self._cum_sigma[j])
        q = (m1 - m0) / (t1 - t0)
        if t0 == 0.0:
            partial = q * r
        else:
            p = m0 - q * t0
            partial = p * math.log(r / t0) + q * (r - t0)
        return float(self._cum_sigma[j] + partial)

    def to_dict(self):
        return {"kind": self.kind, "t_grid": list(self.t_grid),
                "mu_values": list(self.mu_values), "diameter": self.diameter,
                "convex_full_domain": self.convex_full_domain}


@dataclass(frozen=True)
class GaugeConfig:
    rel_tol: float = 1e-10
    max_bisection_steps: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ConfigurationError("rel_tol must be positive")


def _as_model(model):
    # EmpiricalCurve and anything else exposing ``to_model`` is accepted
    if isinstance(model, CurvatureModel):
        return model
    to_model = getattr(model, "to_model", None)
    if to_model is None:
        raise ConfigurationError(f"not a curvature model: {model!r}")
    return to_model()


def _check_domain(model, t, name="t"):
    t = float(t)
    if math.isnan(t) or t < 0:
        raise DomainError(f"{name}={t} is outside Gamma")
    if t > model.diameter * (1 + _DOMAIN_SLACK):
        raise DomainError(f"{name}={t} exceeds the diameter {model.diameter}")
    return min(t, model.diameter)


def mu_hat(model, t):
    """Evaluate the Global Curvature Bound model at ``t``."""
    model = _as_model(model)
    t = _check_domain(model, t)
    if t == 0.0:
        return 0.0
    return float(model._mu(t))


def sigma_hat(model, r):
    """Integral companion ``int_0^r mu_hat(tau)/tau dtau``."""
    model = _as_model(model)
    r = _check_domain(model, r, "r")
    if r == 0.0:
        return 0.0
    return float(model._sigma(r))


def delta_plus_and_lip(model, r):
    """Shift and slope of the quadratic bound on the Bregman distance of f.

    For every pair ``x, y`` the model guarantees
    ``|beta_f(x, y)| <= delta_plus + lip * ||y - x||**2 / 2``.

    Returns
    -------
    (delta_plus, lip) : tuple of float
    """
    model = _as_model(model)
    if float(r) <= 0:
        raise DomainError("delta_plus/lip are singular at r = 0")
    mu = mu_hat(model, r)
    sig = sigma_hat(model, r)
    # exact cancellation for quadratic tables is not guaranteed; clip tiny negatives
    delta = max(2.0 * sig - mu, 0.0)
    return delta, 2.0 * mu / (r * r)


def _invert(fun, model, eps, cfg, what):
    eps = float(eps)
    if not eps > 0:
        raise DomainError(f"{what}: eps must be positive, got {eps}")
    D = model.diameter
    if math.isfinite(D):
        top = fun(D)
        if eps > top * (1 + cfg.rel_tol):
            raise UnattainableAccuracyError(
                f"{what}: eps={eps} exceeds the bound {top} at the diameter {D}")
        if eps >= top:
            return D
    lo, hi = 0.0, cfg.rel_tol
    while fun(hi) < eps:
        lo = hi
        hi = 2.0 * hi
        if math.isfinite(D) and hi >= D:
            hi = D
            break
        if hi > 1e300:
            raise UnattainableAccuracyError(f"{what}: model is bounded below eps={eps}")
    for _ in range(cfg.max_bisection_steps):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if fun(mid) < eps:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    residual = abs(fun(r) - eps)
    if residual > cfg.rel_tol * eps:
        raise NumericalError(f"{what}: bisection stalled", residual=residual)
    return r


def invert_mu(model, eps, cfg=None):
    """Complexity gauge ``s_f(eps)``: the radius with ``mu_hat(r) = eps``."""
    model = _as_model(model)
    cfg = cfg or GaugeConfig()
    return _invert(lambda r: mu_hat(model, r), model, eps, cfg, "invert_mu")


def invert_sigma(model, eps, cfg=None):
    """Inverse ``s_hat_f(eps)`` of ``sigma_hat``."""
    model = _as_model(model)
    cfg = cfg or GaugeConfig()
    return _invert(lambda r: sigma_hat(model, r), model, eps, cfg, "invert_sigma")


def gamma_simple(model, t, cfg=None):
    """Effective curvature ``gamma_f(t) = t / s_f(t/2)**2`` (non-increasing in t)."""
    if not float(t) > 0:
        raise DomainError("gamma_f needs t > 0")
    s = invert_mu(model, 0.5 * t, cfg)
    return t / (s * s)


def gamma_hat(model, t, cfg=None):
    """Effective curvature ``gamma_hat_f(t) = 2t / s_hat_f(t/2)**2``."""
    if not float(t) > 0:
        raise DomainError("gamma_hat_f needs t > 0")
    s = invert_sigma(model, 0.5 * t, cfg)
    return 2.0 * t / (s * s)


def sum_class_radius(L0, L1, eps):
    """Positive root of ``L0 r + L1 r**2 / 2 = eps``, in cancellation-free form."""
    if not (L0 > 0 and L1 > 0 and eps > 0):
        raise DomainError("sum_class_radius needs positive L0, L1, eps")
    return 2.0 * eps / (L0 + math.sqrt(2.0 * eps * L1 + L0 * L0))


def example_1_1_model(dim=1):
    """Curvature model of ``sum_i x_i**2/2 + (2/3)|x_i|**1.5``.

    The gradient of ``(2/3)|x|**1.5`` is ``sign(x) |x|**0.5``, which is
    Hoelder-1/2 with constant ``sqrt(2)`` (attained at ``x = -y``); in ``dim``
    coordinates the Euclidean constant picks up ``dim**0.25``.
    """
    return SumModel(members=(QuadraticModel(L=1.0),
                             HoelderModel(nu=0.5, L=math.sqrt(2.0) * dim ** 0.25)))


def build_model(name, *, nu=None, L=None, L0=None, L1=None, dim=1, diameter=math.inf):
    """Construct a model from CLI-style arguments.

    ``name`` is one of ``quadratic`` (L), ``hoelder`` (nu, L), ``sum``
    (L0 linear-growth part plus L1 quadratic part) or ``example_1_1``.
    """
    if name == "quadratic":
        return QuadraticModel(L=_need(L, "L"), diameter=diameter)
    if name == "hoelder":
        return HoelderModel(nu=_need(nu, "nu"), L=_need(L, "L"), diameter=diameter)
    if name == "sum":
        return SumModel(members=(HoelderModel(nu=0.0, L=_need(L0, "L0")),
                                 QuadraticModel(L=_need(L1, "L1"))), diameter=diameter)
    if name == "example_1_1":
        return example_1_1_model(dim)
    raise ConfigurationError(f"unknown model {name!r}")


def model_from_dict(d):
    """Inverse of ``CurvatureModel.to_dict``."""
    d = dict(d)
    kind = d.pop("kind")
    if kind == "sum":
        d["members"] = tuple(model_from_dict(m) for m in d["members"])
        return SumModel(**d)
    cls = {"quadratic": QuadraticModel, "hoelder": HoelderModel,
           "custom": TableModel, "empirical": TableModel}.get(kind)
    if cls is None:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    return cls(**d)


def _need(value, name):
    if value is None:
        raise ConfigurationError(f"model parameter {name} is required")
    return float(value)
