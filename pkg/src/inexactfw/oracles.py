"""Quadratic objectives and inexact gradient oracles.

Objectives are ``f(x) = 0.5 x'Ax + b'x + c`` bound to a feasible set, which
fixes their constants: ``L`` (gradient Lipschitz constant), ``G_bound``
(``sup ||grad f||`` over the set) and, where it can be computed exactly,
``f_star``.

Oracle models perturb the exact gradient by an error vector ``e`` with
``||e|| <= level / D``, so that ``|<e, x - y>| <= level`` for every feasible
``y`` holds by Cauchy-Schwarz:

* ``exact``: no error.
* ``additive_worst``: level ``delta``; ``e`` points against the exact
  Frank-Wolfe direction ``x - lmo(grad f(x))``.
* ``additive_sign``: one-dimensional, ``e = -(delta / D) sign(x)``.
* ``additive_scheduled``: as ``additive_worst`` with the decaying level
  ``delta * L * D**2 / (k + 1)``.
* ``relative_worst``: as ``additive_worst`` with level ``delta * ||grad f(x)||``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import FeasibleSet, InvalidInput

OBJECTIVE_KINDS = ("quadratic", "scalar_square", "shifted_quadratic")
MODELS = ("exact", "additive_worst", "additive_sign", "additive_scheduled", "relative_worst")
ADDITIVE = ("additive_worst", "additive_sign", "additive_scheduled")

# exact face enumeration for f_star stays cheap up to these dimensions
_MAX_BOX_ENUM = 8
_MAX_SIMPLEX_ENUM = 12
_MAX_VERTEX_ENUM = 4096


@dataclass(frozen=True, eq=False)
class Objective:
    kind: str
    A: np.ndarray
    b: np.ndarray
    c: float
    L: float
    G_bound: float
    f_star: float | None
    convex: bool
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.A @ x + self.b @ x + self.c)

    def grad(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) + self.b


def grad_exact(obj: Objective, x) -> np.ndarray:
    return obj.grad(np.atleast_1d(np.asarray(x, dtype=float)))


def _spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(A)))) if A.size else 0.0


def _gradient_bound(A, b, fs: FeasibleSet) -> float:
    """Exact ``max ||Ax + b||`` over polytope vertices, else a norm bound."""
    if fs.is_polytope and (fs.kind != "box" or 2 ** fs.dim <= _MAX_VERTEX_ENUM):
        V = geo.vertices(fs)
        return float(np.max(np.linalg.norm(V @ A.T + b, axis=1)))
    return float(np.linalg.norm(A, 2) * fs.radius + np.linalg.norm(b))


def _consistent_solve(M, rhs):
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.linalg.norm(M @ sol - rhs) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
        return None
    return sol


def _box_min(A, b, c, lo, hi) -> float:
    """Global minimum of a (possibly indefinite) quadratic over a box.

    The global minimizer lies in the relative interior of some face, where
    the gradient restricted to the free coordinates vanishes; enumerating
    every face and solving that linear system is exact.
    """
    d = b.shape[0]
    best = math.inf
    for pattern in itertools.product((0, 1, 2), repeat=d):
        free = [i for i in range(d) if pattern[i] == 2]
        x = np.array([lo if p == 0 else hi for p in pattern], dtype=float)
        if free:
            fixed = [i for i in range(d) if pattern[i] != 2]
            rhs = -(b[free] + A[np.ix_(free, fixed)] @ x[fixed])
            sol = _consistent_solve(A[np.ix_(free, free)], rhs)
            if sol is None or np.any(sol < lo - 1e-12) or np.any(sol > hi + 1e-12):
                continue
            x[free] = sol
        best = min(best, 0.5 * x @ A @ x + b @ x + c)
    return float(best)


def _simplex_min(A, b, c) -> float:
    """Global minimum of a quadratic over the probability simplex (face KKT enumeration)."""
    d = b.shape[0]
    best = math.inf
    for size in range(1, d + 1):
        for support in itertools.combinations(range(d), size):
            F = list(support)
            n = len(F)
            M = np.zeros((n + 1, n + 1))
            M[:n, :n] = A[np.ix_(F, F)]
            M[:n, n] = 1.0
            M[n, :n] = 1.0
            rhs = np.concatenate([-b[F], [1.0]])
            sol = _consistent_solve(M, rhs)
            if sol is None or np.any(sol[:n] < -1e-12):
                continue
            x = np.zeros(d)
            x[F] = sol[:n]
            best = min(best, 0.5 * x @ A @ x + b @ x + c)
    return float(best)


def _convex_min(A, b, c, fs: FeasibleSet, iters: int = 20000) -> float:
    """Accelerated projected gradient for a convex quadratic.

    Stops once the Frank-Wolfe gap certifies the value to 1e-13.
    """
    L = max(_spectral_radius(A), 1e-12)
    x = y = fs.center()
    t = 1.0
    f = lambda z: 0.5 * z @ A @ z + b @ z + c
    for _ in range(iters):
        x_new = geo.project(fs, y - (A @ y + b) / L)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + (t - 1) / t_new * (x_new - x)
        x, t = x_new, t_new
        g = A @ x + b
        if g @ (x - geo.lmo(fs, g)) <= 1e-13:
            break
    return float(f(x))


def minimum_value(A, b, c, fs: FeasibleSet, convex: bool) -> float | None:
    if fs.kind in ("box", "interval") and fs.dim <= _MAX_BOX_ENUM:
        return _box_min(A, b, c, fs.lo, fs.hi)
    if fs.kind == "simplex" and fs.dim <= _MAX_SIMPLEX_ENUM:
        return _simplex_min(A, b, c)
    if convex:
        return _convex_min(A, b, c, fs)
    return None


def quadratic(A, b, fs: FeasibleSet, c: float = 0.0, L: float | None = None,
              f_star: float | None = None, kind: str = "quadratic",
              params: dict | None = None) -> Objective:
    """``0.5 x'Ax + b'x + c`` over ``fs`` with certified constants."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if A.shape != (fs.dim, fs.dim) or b.shape != (fs.dim,):
        raise InvalidInput(f"objective shapes {A.shape}, {b.shape} do not match dimension {fs.dim}")
    if not np.allclose(A, A.T, atol=1e-12):
        raise InvalidInput("A must be symmetric")
    A = 0.5 * (A + A.T)
    rho = _spectral_radius(A)
    if L is None:
        L = rho
    elif L < rho - 1e-12:
        raise InvalidInput(f"L = {L} is below the spectral radius {rho} of A")
    convex = bool(np.min(np.linalg.eigvalsh(A)) >= -1e-12)
    if f_star is None:
        f_star = minimum_value(A, b, c, fs, convex)
    return Objective(kind=kind, A=A, b=b, c=float(c), L=float(L),
                     G_bound=_gradient_bound(A, b, fs), f_star=f_star,
                     convex=convex, params=params or {})


def scalar_square(fs: FeasibleSet) -> Objective:
    """``f(x) = x**2 / 2`` on a one-dimensional set."""
    if fs.dim != 1:
        raise InvalidInput("scalar_square needs a one-dimensional set")
    p = geo.project(fs, [0.0])
    return quadratic([[1.0]], [0.0], fs, f_star=0.5 * float(p @ p), kind="scalar_square")


def shifted_quadratic(center, fs: FeasibleSet) -> Objective:
    """``f(x) = ||x - center||^2 / 2``; ``f_star`` is half the squared distance to the set."""
    center = geo.as_point(fs, center)
    p = geo.project(fs, center)
    return quadratic(np.eye(fs.dim), -center, fs, c=0.5 * float(center @ center),
                     f_star=0.5 * float((p - center) @ (p - center)),
                     kind="shifted_quadratic", params={"center": center.tolist()})


@dataclass(frozen=True, eq=False)
class InexactOracle:
    """Gradient oracle with a controlled, certified error.

    ``inflate`` scales the injected error beyond what ``delta`` certifies.
    It exists only to build corrupted oracles for negative controls.
    """

    objective: Objective
    fs: FeasibleSet
    model: str = "exact"
    delta: float = 0.0
    seed: int = 0
    D: float | None = None
    inflate: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidInput(f"unknown oracle model {self.model!r}; expected one of {MODELS}")
        if not self.delta >= 0:
            raise InvalidInput(f"delta must be nonnegative, got {self.delta}")
        if self.model == "additive_sign" and self.fs.dim != 1:
            raise InvalidInput("additive_sign is defined on one-dimensional sets only")

    @property
    def diameter(self) -> float:
        return self.fs.diameter if self.D is None else float(self.D)

    @property
    def is_additive(self) -> bool:
        return self.model in ADDITIVE

    @property
    def is_relative(self) -> bool:
        return self.model == "relative_worst"

    def level(self, x, k: int = 0) -> float:
        """Certified bound on ``|<g - grad f(x), x - y>|`` at iterate ``k``."""
        if self.model == "exact":
            return 0.0
        if self.model == "additive_scheduled":
            D = self.diameter
            return self.delta * self.objective.L * D * D / (k + 1)
        if self.model == "relative_worst":
            return self.delta * float(np.linalg.norm(self.objective.grad(x)))
        return self.delta

    def error(self, x, k: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        D = self.diameter
        lev = self.level(x, k)
        if lev == 0.0 or D == 0.0:
            return np.zeros_like(x)
        scale = self.inflate * lev / D
        if self.model == "additive_sign":
            return -scale * np.sign(x)
        direction = x - geo.lmo(self.fs, self.objective.grad(x))
        norm = np.linalg.norm(direction)
        if norm > 0:
            u = direction / norm
        else:
            u = np.random.default_rng([self.seed, k]).standard_normal(x.shape[0])
            u /= np.linalg.norm(u)
        return -scale * u

    def grad(self, x, k: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.objective.grad(x) + self.error(x, k)


def grad_inexact(oracle: InexactOracle, x, k: int = 0) -> np.ndarray:
    return oracle.grad(x, k)


def worst_directional_error(oracle: InexactOracle, x, k: int = 0) -> float:
    """Exact ``max_y |<g(x) - grad f(x), x - y>|`` over the set, via two LMO calls."""
    x = np.asarray(x, dtype=float)
    e = oracle.error(x, k)
    ex = float(e @ x)
    return max(ex - float(e @ geo.lmo(oracle.fs, e)), float(e @ geo.lmo(oracle.fs, -e)) - ex, 0.0)


def fw_gap(obj: Objective, fs: FeasibleSet, x) -> float:
    """Exact Frank-Wolfe gap ``max_s <grad f(x), x - s>``."""
    x = geo.as_point(fs, x)
    g = obj.grad(x)
    return float(g @ (x - geo.lmo(fs, g)))


def fw_gap_approx(oracle: InexactOracle, fs: FeasibleSet, x, k: int = 0) -> tuple[float, np.ndarray]:
    """Approximate gap from the oracle and the LMO vertex that attains it.

    Can be negative when the oracle error exceeds the true gap.
    """
    x = geo.as_point(fs, x)
    g = oracle.grad(x, k)
    s = geo.lmo(fs, g)
    return float(g @ (x - s)), s


def build_objective(spec: dict, fs: FeasibleSet) -> Objective:
    spec = dict(spec)
    kind = spec.get("kind", "quadratic")
    if kind == "scalar_square":
        return scalar_square(fs)
    if kind == "shifted_quadratic":
        return shifted_quadratic(spec["center"], fs)
    if kind == "quadratic":
        d = fs.dim
        A = spec.get("A")
        if A is None and "diag" in spec:
            A = np.diag(spec["diag"])
        if A is None:
            raise InvalidInput("quadratic objective needs 'A' or 'diag'")
        return quadratic(A, spec.get("b", [0.0] * d), fs, c=spec.get("c", 0.0),
                         L=spec.get("L"), f_star=spec.get("f_star"))
    raise InvalidInput(f"unknown objective kind {kind!r}; expected one of {OBJECTIVE_KINDS}")
