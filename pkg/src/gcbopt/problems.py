"""Composite problems ``min f(x) + Psi(x)`` and the built-in test instances."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .curvature import (
    CurvatureModel,
    HoelderModel,
    QuadraticModel,
    SumModel,
    example_1_1_model,
)
from .errors import CatalogError, ConfigurationError, OracleError
from .mappings import project_simplex

__all__ = [
    "ProxGeometry",
    "PsiSpec",
    "CompositeProblem",
    "Evaluation",
    "evaluate",
    "bregman_of_f",
    "builtin_problem",
    "problem_from_spec",
    "load_problem",
    "BUILTIN_NAMES",
]

PROX_KINDS = ("euclidean", "entropy")
PSI_KINDS = ("zero", "l1", "box", "ball", "simplex")

# feasibility slack for indicator functions
FEAS_TOL = 1e-9


@dataclass
class ProxGeometry:
    """Norm and prox function ``d`` with ``d(center) = 0``.

    ``euclidean``: ``||x|| = <Bx, x>**0.5`` and ``d(x) = ||x - center||**2 / 2``.
    ``norm_matrix`` is ``None`` (identity), a 1-D array (diagonal B) or a
    full SPD matrix.

    ``entropy``: the simplex with the l1 norm and ``d(x) = KL(x || center)``,
    which is 1-strongly convex in l1 on the simplex.  Its gradient at the
    center is the all-ones vector, orthogonal to the simplex, so Bregman
    distances are unaffected.
    """

    center: np.ndarray
    prox_kind: str = "euclidean"
    norm_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).ravel()
        if self.prox_kind not in PROX_KINDS:
            raise ConfigurationError(f"unknown prox kind {self.prox_kind!r}")
        if self.norm_matrix is not None:
            B = np.asarray(self.norm_matrix, dtype=float)
            n = self.center.size
            if B.ndim == 1:
                if B.shape != (n,) or np.any(B <= 0):
                    raise ConfigurationError("diagonal norm matrix must be positive of size dim")
            elif B.shape == (n, n):
                if not np.allclose(B, B.T) or np.linalg.eigvalsh(B).min() <= 0:
                    raise ConfigurationError("norm matrix must be symmetric positive definite")
            else:
                raise ConfigurationError(f"norm matrix has shape {B.shape}, dim is {n}")
            self.norm_matrix = B
            if self.prox_kind == "entropy":
                raise ConfigurationError("entropy geometry uses the l1 norm; drop norm_matrix")
        if self.prox_kind == "entropy":
            c = self.center
            if np.any(c <= 0) or abs(c.sum() - 1.0) > 1e-12:
                raise ConfigurationError("entropy center must lie in the open simplex")

    @property
    def dim(self):
        return self.center.size

    @property
    def is_diagonal(self):
        B = self.norm_matrix
        return B is None or B.ndim == 1 or np.count_nonzero(B - np.diag(np.diag(B))) == 0

    @property
    def diag(self):
        """Diagonal of B (ones for the identity)."""
        B = self.norm_matrix
        if B is None:
            return np.ones(self.dim)
        return B if B.ndim == 1 else np.diag(B).copy()

    @property
    def is_isotropic(self):
        d = self.diag
        return self.is_diagonal and np.all(d == d[0])

    def B(self, x):
        B = self.norm_matrix
        if B is None:
            return np.array(x, dtype=float)
        return B * x if B.ndim == 1 else B @ x

    def Binv(self, g):
        B = self.norm_matrix
        if B is None:
            return np.array(g, dtype=float)
        return g / B if B.ndim == 1 else np.linalg.solve(B, g)

    def lambda_min(self):
        B = self.norm_matrix
        if self.prox_kind == "entropy" or B is None:
            return 1.0
        return float(B.min()) if B.ndim == 1 else float(np.linalg.eigvalsh(B).min())

    def norm(self, x):
        x = np.asarray(x, dtype=float)
        if self.prox_kind == "entropy":
            return float(np.abs(x).sum())
        return math.sqrt(max(float(x @ self.B(x)), 0.0))

    def dual_norm(self, g):
        g = np.asarray(g, dtype=float)
        if self.prox_kind == "entropy":
            return float(np.abs(g).max()) if g.size else 0.0
        return math.sqrt(max(float(g @ self.Binv(g)), 0.0))

    def d(self, x):
        x = np.asarray(x, dtype=float)
        if self.prox_kind == "entropy":
            return _kl(x, self.center)
        return 0.5 * self.norm(x - self.center) ** 2

    def grad_d(self, x):
        x = np.asarray(x, dtype=float)
        if self.prox_kind == "entropy":
            with np.errstate(divide="ignore"):
                return np.log(x / self.center) + 1.0
        return self.B(x - self.center)

    def bregman(self, x, y):
        """``beta_d(x, y) = d(y) - d(x) - <grad d(x), y - x>``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.prox_kind == "entropy":
            return _kl(y, x) - float(y.sum()) + float(x.sum())
        return 0.5 * self.norm(y - x) ** 2

    def to_dict(self):
        out = {"prox": self.prox_kind}
        if self.norm_matrix is not None:
            out["norm_matrix"] = self.norm_matrix.tolist()
        return out


def _kl(p, q):
    p = np.asarray(p, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


@dataclass
class PsiSpec:
    """Simple closed convex part.  Indicators carry feasibility.

    ``ball`` is the plain Euclidean ball ``||x - center||_2 <= radius``.
    """

    kind: str = "zero"
    lam: float = 0.0
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in PSI_KINDS:
            raise ConfigurationError(f"unknown psi kind {self.kind!r}")
        if self.kind == "l1" and not self.lam >= 0:
            raise ConfigurationError("l1 weight must be non-negative")
        if self.kind == "box":
            if self.lo is None or self.hi is None:
                raise ConfigurationError("box needs lo and hi")
            self.lo = np.asarray(self.lo, dtype=float)
            self.hi = np.asarray(self.hi, dtype=float)
            if np.any(self.lo > self.hi):
                raise ConfigurationError("box with lo > hi")
        if self.kind == "ball":
            if not self.radius > 0:
                raise ConfigurationError("ball radius must be positive")
            if self.center is not None:
                self.center = np.asarray(self.center, dtype=float)

    @property
    def is_indicator(self):
        return self.kind in ("box", "ball", "simplex")

    @property
    def bounded(self):
        return self.is_indicator

    def _ball_center(self, n):
        return np.zeros(n) if self.center is None else np.broadcast_to(self.center, (n,))

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))
        if self.kind == "ball":
            return float(np.linalg.norm(x - self._ball_center(x.size))) <= self.radius + tol
        if self.kind == "simplex":
            return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol * max(1, x.size))
        return True

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "l1":
            return self.lam * float(np.abs(x).sum())
        if self.kind == "zero":
            return 0.0
        return 0.0 if self.contains(x) else math.inf

    def lmo(self, c):
        """Minimizer of ``<c, y>`` over the (bounded) indicator set."""
        c = np.asarray(c, dtype=float)
        n = c.size
        if self.kind == "box":
            lo = np.broadcast_to(self.lo, (n,))
            hi = np.broadcast_to(self.hi, (n,))
            return np.where(c > 0, lo, hi).astype(float)
        if self.kind == "ball":
            nc = float(np.linalg.norm(c))
            ctr = self._ball_center(n).astype(float)
            return ctr if nc == 0 else ctr - self.radius * c / nc
        if self.kind == "simplex":
            y = np.zeros(n)
            y[int(np.argmin(c))] = 1.0
            return y
        raise ConfigurationError(f"psi kind {self.kind!r} has unbounded domain")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "l1":
            d["lam"] = self.lam
        elif self.kind == "box":
            d["lo"] = self.lo.tolist()
            d["hi"] = self.hi.tolist()
        elif self.kind == "ball":
            d["radius"] = self.radius
            if self.center is not None:
                d["center"] = self.center.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", "zero")
        allowed = {"zero": set(), "simplex": set(), "l1": {"lam"},
                   "box": {"lo", "hi"}, "ball": {"center", "radius"}}
        if kind not in allowed:
            raise ConfigurationError(f"unknown psi kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise ConfigurationError(f"unknown keys for {kind}: {sorted(extra)}")
        return cls(kind=kind, **d)


class Evaluation(NamedTuple):
    f: float
    grad: np.ndarray
    psi: float
    f_tilde: float


@dataclass
class CompositeProblem:
    """``min f(x) + Psi(x)`` with a first-order oracle for ``f``.

    ``q_set`` is the feasible set for the nonconvex gradient method; it is a
    :class:`PsiSpec` restricted to ``zero`` (whole space) or an indicator.
    The starting point is ``geometry.center``.
    """

    name: str
    dim: int
    f_oracle: Callable[[np.ndarray], tuple]
    psi: PsiSpec = field(default_factory=PsiSpec)
    geometry: Optional[ProxGeometry] = None
    q_set: PsiSpec = field(default_factory=PsiSpec)
    known_model: Optional[CurvatureModel] = None
    known_optimum: Optional[tuple] = None
    convex: bool = True
    sample_box: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry is None:
            self.geometry = ProxGeometry(center=np.zeros(self.dim))
        if self.geometry.dim != self.dim:
            raise ConfigurationError("geometry dimension does not match the problem")
        if self.q_set.kind == "l1":
            raise ConfigurationError("q_set must be the whole space or an indicator")

    @property
    def x0(self):
        return self.geometry.center.copy()

    @property
    def f_star(self):
        return None if self.known_optimum is None else self.known_optimum[1]

    @property
    def x_star(self):
        return None if self.known_optimum is None else self.known_optimum[0]

    def D(self):
        """``beta_d(x0, x*)`` when the optimum is known, else ``None``."""
        if self.known_optimum is None:
            return None
        return self.geometry.bregman(self.x0, self.known_optimum[0])

    def f_value(self, x):
        return evaluate(self, x).f


def evaluate(problem, x):
    """Oracle call at ``x``: returns ``(f, grad, psi, f_tilde)``."""
    x = np.asarray(x, dtype=float)
    f, g = problem.f_oracle(x)
    f = float(f)
    g = np.asarray(g, dtype=float)
    psi = problem.psi.value(x)
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        if math.isfinite(psi):
            raise OracleError(f"non-finite oracle answer at feasible point {x.tolist()}")
    return Evaluation(f, g, psi, f + psi)


def bregman_of_f(problem, x, y):
    """``f(y) - f(x) - <grad f(x), y - x>``; may be negative for nonconvex f."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fx, gx = problem.f_oracle(x)
    fy, _ = problem.f_oracle(y)
    return float(fy - fx - gx @ (y - x))


# ---------------------------------------------------------------------------
# catalog

def _separable_quadratic(a, c):
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)

    def oracle(x):
        r = x - c
        g = a * r
        return 0.5 * float(r @ g), g

    return oracle


def _hoelder_oracle(nu, L):
    def oracle(x):
        ax = np.abs(x)
        return L / (1.0 + nu) * float(np.sum(ax ** (1.0 + nu))), L * np.sign(x) * ax ** nu

    return oracle


def _example_1_1_oracle(x):
    ax = np.abs(x)
    # the |x|**1.5 part is differentiable at 0 with derivative 0; sign(0) = 0 gives that
    return (0.5 * float(x @ x) + (2.0 / 3.0) * float(np.sum(ax ** 1.5)),
            x + np.sign(x) * np.sqrt(ax))


def _cosine_oracle(x):
    return float(np.sum(1.0 - np.cos(x))), np.sin(x)


def _linear_oracle(c):
    c = np.asarray(c, dtype=float)
    return lambda x: (float(c @ x), c.copy())


def _vec(value, n, name):
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        return np.full(n, float(v))
    if v.shape != (n,):
        raise ConfigurationError(f"{name} must be a scalar or have length {n}")
    return v


def _quadratic_optimum(a, c, psi):
    if psi.kind == "zero":
        return c.copy()
    if psi.kind == "l1":
        t = psi.lam / a
        return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)
    if psi.kind == "box":
        return np.clip(c, psi.lo, psi.hi)
    if psi.kind == "simplex" and np.all(a == a[0]):
        return project_simplex(c)
    if psi.kind == "ball" and np.all(a == a[0]):
        ctr = psi._ball_center(c.size)
        r = c - ctr
        nr = float(np.linalg.norm(r))
        return c.copy() if nr <= psi.radius else ctr + psi.radius * r / nr
    return None


def _origin_optimum(psi, n):
    z = np.zeros(n)
    if psi.kind in ("zero", "l1") or (psi.is_indicator and psi.contains(z)):
        return z
    return None


def _rescale(model, s):
    """Model in a norm with ``||.||_2 <= s ||.||``: ``mu_B(t) <= mu_2(s t)``."""
    if s == 1.0 or model is None:
        return model
    if isinstance(model, QuadraticModel):
        return QuadraticModel(L=model.L * s * s, convex_full_domain=model.convex_full_domain)
    if isinstance(model, HoelderModel):
        return HoelderModel(nu=model.nu, L=model.L * s ** (1 + model.nu),
                            convex_full_domain=model.convex_full_domain)
    if isinstance(model, SumModel):
        return SumModel(members=tuple(_rescale(m, s) for m in model.members),
                        convex_full_domain=model.convex_full_domain)
    return None


def _quadratic_model(a, geometry):
    if geometry.prox_kind == "euclidean" and geometry.norm_matrix is not None:
        B = geometry.norm_matrix
        Bm = np.diag(B) if B.ndim == 1 else B
        ev = np.linalg.eigvals(np.linalg.solve(Bm, np.diag(a))).real
        L = float(np.max(np.abs(ev)))
    else:
        # l1 norm dominates l2, so the l2 constant stays valid for entropy geometry
        L = float(np.max(np.abs(a)))
    return QuadraticModel(L=L, convex_full_domain=bool(np.all(a >= 0)))


def builtin_problem(name, dim=None, params=None, *, psi=None, q=None, x0=None, geometry=None):
    """Build a catalog instance.

    Names: ``quadratic``, ``l1_quadratic``, ``box_quadratic``,
    ``simplex_quadratic``, ``hoelder``, ``example_1_1``, ``cosine``
    (nonconvex, for the gradient-mapping method) and ``linear``.

    ``psi``, ``q`` and ``geometry`` are dicts in the problem-file format;
    ``x0`` overrides the default start (which is also the prox center).
    """
    params = dict(params or {})
    if name not in BUILTIN_NAMES:
        raise CatalogError(f"unknown problem {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    n = int(dim if dim is not None else (1 if name == "example_1_1" else 10))
    if n < 1:
        raise ConfigurationError("dim must be positive")

    psi_spec = _default_psi(name, n, params) if psi is None else PsiSpec.from_dict(psi)
    q_spec = PsiSpec() if q is None else PsiSpec.from_dict(q)
    if q_spec.kind == "l1":
        raise ConfigurationError("q must be the whole space or an indicator set")

    geo = dict(geometry or {})
    unknown = set(geo) - {"prox", "norm_matrix"}
    if unknown:
        raise ConfigurationError(f"unknown geometry keys {sorted(unknown)}")
    prox_kind = geo.get("prox", params.pop("prox", "euclidean"))
    if x0 is None:
        x0 = _default_x0(name, n, prox_kind)
    x0 = _vec(x0, n, "x0")
    geometry_obj = ProxGeometry(center=x0, prox_kind=prox_kind,
                                norm_matrix=geo.get("norm_matrix"))
    if not psi_spec.contains(x0):
        raise ConfigurationError("x0 is outside dom Psi")
    if not q_spec.contains(x0):
        raise ConfigurationError("x0 is outside Q")
    scale = 1.0 / math.sqrt(geometry_obj.lambda_min())

    convex = True
    sample_box = (np.full(n, -1.0), np.full(n, 1.0))
    used = set()

    def p(key, default):
        used.add(key)
        return params.get(key, default)

    if name in ("quadratic", "l1_quadratic", "box_quadratic", "simplex_quadratic"):
        L = float(p("L", 1.0))
        flat = name == "simplex_quadratic"
        spectrum = p("spectrum", "flat" if flat else "linear")
        if spectrum == "linear":
            a = L * np.arange(1, n + 1) / n
        elif spectrum == "flat":
            a = np.full(n, L)
        else:
            raise ConfigurationError(f"unknown spectrum {spectrum!r}")
        default_c = 0.0 if name == "quadratic" else (
            np.linspace(0.0, 1.0, n) if flat else np.linspace(-1.0, 1.0, n))
        c = _vec(p("center", default_c), n, "center")
        oracle = _separable_quadratic(a, c)
        model = _quadratic_model(a, geometry_obj)
        xs = _quadratic_optimum(a, c, psi_spec)
    elif name == "hoelder":
        nu = float(p("nu", 0.5))
        L = float(p("L", 1.0))
        if not 0.0 <= nu <= 1.0 or L <= 0:
            raise ConfigurationError("hoelder needs nu in [0, 1] and L > 0")
        oracle = _hoelder_oracle(nu, L)
        # coordinatewise constant 2**(1-nu) L; power-mean inequality adds n**((1-nu)/2)
        model = _rescale(HoelderModel(nu=nu, L=L * 2.0 ** (1 - nu) * n ** ((1 - nu) / 2)), scale)
        xs = _origin_optimum(psi_spec, n)
    elif name == "example_1_1":
        R = float(p("R", 1.0))
        oracle = _example_1_1_oracle
        model = _rescale(example_1_1_model(n), scale)
        xs = _origin_optimum(psi_spec, n)
        sample_box = (np.full(n, -R), np.full(n, R))
    elif name == "cosine":
        oracle = _cosine_oracle
        model = _rescale(QuadraticModel(L=1.0, convex_full_domain=False), scale)
        xs = _origin_optimum(psi_spec, n)
        convex = False
    else:  # linear
        c = _vec(p("c", 1.0), n, "c")
        oracle = _linear_oracle(c)
        model = QuadraticModel(L=0.0)
        xs = None

    extra = set(params) - used
    if extra:
        raise ConfigurationError(f"unknown params for {name}: {sorted(extra)}")

    if psi_spec.kind == "box":
        sample_box = (np.broadcast_to(psi_spec.lo, (n,)).copy(),
                      np.broadcast_to(psi_spec.hi, (n,)).copy())

    optimum = None
    if xs is not None:
        fs, _ = oracle(xs)
        optimum = (xs, float(fs) + psi_spec.value(xs))

    return CompositeProblem(
        name=name, dim=n, f_oracle=oracle, psi=psi_spec, geometry=geometry_obj,
        q_set=q_spec, known_model=model, known_optimum=optimum, convex=convex,
        sample_box=sample_box, params=dict(params),
    )


def _default_psi(name, n, params):
    if name == "l1_quadratic":
        lam = float(params.pop("lam", params.pop("λ", 0.1)))
        return PsiSpec(kind="l1", lam=lam)
    if name == "box_quadratic":
        lo = params.pop("lo", -0.5)
        hi = params.pop("hi", 0.5)
        return PsiSpec(kind="box", lo=_vec(lo, n, "lo"), hi=_vec(hi, n, "hi"))
    if name == "simplex_quadratic":
        return PsiSpec(kind="simplex")
    return PsiSpec()


def _default_x0(name, n, prox_kind):
    if prox_kind == "entropy" or name == "simplex_quadratic":
        return np.full(n, 1.0 / n)
    if name == "box_quadratic":
        return np.zeros(n)
    return np.ones(n)


BUILTIN_NAMES = ("quadratic", "l1_quadratic", "box_quadratic", "simplex_quadratic",
                 "hoelder", "example_1_1", "cosine", "linear")

_SPEC_KEYS = {"problem", "dim", "params", "psi", "q", "x0", "geometry"}


def problem_from_spec(spec):
    """Build a problem from a problem-file dict; unknown keys are rejected."""
    if not isinstance(spec, dict):
        raise ConfigurationError("problem spec must be a JSON object")
    unknown = set(spec) - _SPEC_KEYS
    if unknown:
        raise ConfigurationError(f"unknown keys in problem spec: {sorted(unknown)}")
    if "problem" not in spec:
        raise ConfigurationError("problem spec needs a 'problem' name")
    return builtin_problem(spec["problem"], spec.get("dim"), spec.get("params"),
                           psi=spec.get("psi"), q=spec.get("q"), x0=spec.get("x0"),
                           geometry=spec.get("geometry"))


def load_problem(path):
    with open(path) as fh:
        return problem_from_spec(json.load(fh))
