"""Compact convex feasible sets.

Each set exposes an exact linear minimization oracle (LMO), an exact
Euclidean projection, a K-approximate projection and its closed-form
constants (l2 diameter ``D`` and radius ``mu = sup ||c||``).

Supported kinds::

    simplex   {x >= 0, sum(x) = 1}
    box       {lo <= x_i <= hi}
    l1_ball   {||x||_1 <= r}
    l2_ball   {||x||_2 <= r}
    interval  [lo, hi]  (one-dimensional box)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

KINDS = ("simplex", "box", "l1_ball", "l2_ball", "interval")
POLYTOPES = ("simplex", "box", "l1_ball", "interval")

#: absolute tolerance used for membership and geometric identities
TOL = 1e-9


class InvalidInput(ValueError):
    """Raised on malformed points, dimensions or parameters."""


@dataclass(frozen=True)
class FeasibleSet:
    """Immutable description of a feasible set.

    ``lo``/``hi`` are the (uniform) bounds of boxes and intervals, ``r`` the
    radius parameter of the l1/l2 balls. Unused fields stay at their
    defaults.
    """

    kind: str
    dim: int
    lo: float = 0.0
    hi: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown set kind {self.kind!r}; expected one of {KINDS}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInput(f"dimension must be a positive integer, got {self.dim!r}")
        if self.kind == "interval" and self.dim != 1:
            raise InvalidInput("an interval is one-dimensional")
        if self.kind in ("box", "interval") and not self.lo <= self.hi:
            raise InvalidInput(f"need lo <= hi, got [{self.lo}, {self.hi}]")
        if self.kind in ("l1_ball", "l2_ball") and not self.r >= 0:
            raise InvalidInput(f"ball radius must be nonnegative, got {self.r}")

    @property
    def diameter(self) -> float:
        return set_constants(self)[0]

    @property
    def radius(self) -> float:
        return set_constants(self)[1]

    @property
    def is_polytope(self) -> bool:
        return self.kind in POLYTOPES

    def center(self) -> np.ndarray:
        if self.kind == "simplex":
            return np.full(self.dim, 1.0 / self.dim)
        if self.kind in ("box", "interval"):
            return np.full(self.dim, 0.5 * (self.lo + self.hi))
        return np.zeros(self.dim)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind in ("box", "interval"):
            out.update(lo=self.lo, hi=self.hi)
        elif self.kind in ("l1_ball", "l2_ball"):
            out["r"] = self.r
        return out

    @classmethod
    def from_dict(cls, spec: dict) -> "FeasibleSet":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        if kind == "interval":
            return interval(spec.get("lo", -1.0), spec.get("hi", 1.0))
        if kind == "simplex":
            return simplex(spec["dim"])
        if kind == "box":
            return box(spec["dim"], spec.get("lo", -1.0), spec.get("hi", 1.0))
        if kind == "l1_ball":
            return l1_ball(spec["dim"], spec.get("r", 1.0))
        if kind == "l2_ball":
            return l2_ball(spec["dim"], spec.get("r", 1.0))
        raise InvalidInput(f"unknown set kind {kind!r}")


def simplex(d: int) -> FeasibleSet:
    return FeasibleSet("simplex", int(d))


def box(d: int, lo: float = -1.0, hi: float = 1.0) -> FeasibleSet:
    return FeasibleSet("box", int(d), lo=float(lo), hi=float(hi))


def l1_ball(d: int, r: float = 1.0) -> FeasibleSet:
    return FeasibleSet("l1_ball", int(d), r=float(r))


def l2_ball(d: int, r: float = 1.0) -> FeasibleSet:
    return FeasibleSet("l2_ball", int(d), r=float(r))


def interval(lo: float = -1.0, hi: float = 1.0) -> FeasibleSet:
    return FeasibleSet("interval", 1, lo=float(lo), hi=float(hi))


def as_point(fs: FeasibleSet, x) -> np.ndarray:
    """Validate ``x`` as a finite point of the ambient space of ``fs``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != fs.dim:
        raise InvalidInput(f"expected a point of dimension {fs.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("point has non-finite entries")
    return x


def set_constants(fs: FeasibleSet) -> tuple[float, float]:
    """Closed-form ``(D, mu)``: l2 diameter and l2 radius ``sup ||c||``."""
    d = fs.dim
    if fs.kind == "simplex":
        return (math.sqrt(2.0) if d > 1 else 0.0), 1.0
    if fs.kind in ("box", "interval"):
        width = fs.hi - fs.lo
        return width * math.sqrt(d), math.sqrt(d) * max(abs(fs.lo), abs(fs.hi))
    return 2.0 * fs.r, fs.r


def contains(fs: FeasibleSet, x, tol: float = TOL) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (fs.dim,) or not np.all(np.isfinite(x)):
        return False
    if fs.kind == "simplex":
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
    if fs.kind in ("box", "interval"):
        return bool(np.all(x >= fs.lo - tol) and np.all(x <= fs.hi + tol))
    if fs.kind == "l1_ball":
        return bool(np.abs(x).sum() <= fs.r + tol)
    return bool(np.linalg.norm(x) <= fs.r + tol)


def lmo(fs: FeasibleSet, g) -> np.ndarray:
    """Exact minimizer of ``<g, v>`` over the set.

    Polytopes return a vertex. Ties go to the lowest coordinate index; a
    zero box coordinate picks ``lo`` and ``g = 0`` on a ball returns the
    center.
    """
    g = as_point(fs, g)
    if fs.kind == "simplex":
        v = np.zeros(fs.dim)
        v[int(np.argmin(g))] = 1.0
        return v
    if fs.kind in ("box", "interval"):
        return np.where(g < 0, fs.hi, fs.lo).astype(float)
    if fs.kind == "l1_ball":
        v = np.zeros(fs.dim)
        j = int(np.argmax(np.abs(g)))
        if g[j] != 0:
            v[j] = -fs.r * np.sign(g[j])
        return v
    norm = np.linalg.norm(g)
    if norm == 0:
        return np.zeros(fs.dim)
    return -fs.r * g / norm


def project_simplex(y: np.ndarray, a: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = a}`` by sorting."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - a
    ind = np.arange(1, y.shape[0] + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def project(fs: FeasibleSet, x) -> np.ndarray:
    """Exact Euclidean projection ``argmin_c 0.5 ||c - x||^2``."""
    x = as_point(fs, x)
    if fs.kind == "simplex":
        return project_simplex(x)
    if fs.kind in ("box", "interval"):
        return np.clip(x, fs.lo, fs.hi)
    if fs.kind == "l1_ball":
        if np.abs(x).sum() <= fs.r:
            return x.copy()
        return np.sign(x) * project_simplex(np.abs(x), fs.r)
    norm = np.linalg.norm(x)
    if norm <= fs.r:
        return x.copy()
    return fs.r * x / norm


def sample_points(fs: FeasibleSet, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` random feasible points, shape ``(n, dim)``."""
    d = fs.dim
    if fs.kind == "simplex":
        return rng.dirichlet(np.ones(d), size=n)
    if fs.kind in ("box", "interval"):
        return rng.uniform(fs.lo, fs.hi, size=(n, d))
    if fs.kind == "l1_ball":
        w = rng.dirichlet(np.ones(d + 1), size=n)[:, :d]
        return fs.r * w * rng.choice([-1.0, 1.0], size=(n, d))
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return fs.r * z * rng.uniform(size=(n, 1)) ** (1.0 / d)


def vertices(fs: FeasibleSet) -> np.ndarray:
    """All vertices of a polytope, shape ``(n_vertices, dim)``."""
    d = fs.dim
    if fs.kind == "simplex":
        return np.eye(d)
    if fs.kind in ("box", "interval"):
        return np.array(list(itertools.product((fs.lo, fs.hi), repeat=d)), dtype=float)
    if fs.kind == "l1_ball":
        e = fs.r * np.eye(d)
        return np.vstack([e, -e])
    raise InvalidInput(f"{fs.kind} is not a polytope")


def approx_project(fs: FeasibleSet, x, K: float, seed: int = 0, moves: int = 4) -> np.ndarray:
    """A K-approximate projection of ``x``.

    Starts from the exact projection and walks towards random feasible
    points, accepting each move only while the squared-distance objective
    stays within ``K`` of the optimum. The walk is seeded, so the output is
    reproducible yet genuinely uses slack when ``K > 0``.
    """
    if not K >= 0:
        raise InvalidInput(f"slack K must be nonnegative, got {K}")
    x = as_point(fs, x)
    p = project(fs, x)
    if K == 0:
        return p
    rng = np.random.default_rng(seed)
    # increments of 0.5||q - x||^2 are tracked directly; differencing two
    # large squared norms would lose the budget to cancellation
    used = 0.0
    q = p
    for c in sample_points(fs, rng, moves):
        step = c - q
        sq = float(step @ step)
        if sq == 0.0:
            continue
        lin = float((q - x) @ step)
        room = 0.999 * (K - used)
        t_max = (-lin + math.sqrt(max(lin * lin + 2.0 * sq * room, 0.0))) / sq
        t = min(1.0, t_max) * rng.uniform(0.5, 1.0)
        inc = t * lin + 0.5 * t * t * sq
        if t > 0 and used + inc <= K:
            q = q + t * step
            used += inc
    return q


def dist_to_boundary(fs: FeasibleSet, x) -> float:
    """Distance from ``x`` to the (relative) boundary of the set.

    For the simplex this is measured inside its affine hull, the only
    sense in which it has an interior.
    """
    x = as_point(fs, x)
    d = fs.dim
    if fs.kind == "simplex":
        if d == 1:
            return 0.0
        return float(np.min(x) * math.sqrt(d / (d - 1.0)))
    if fs.kind in ("box", "interval"):
        return float(np.min(np.minimum(x - fs.lo, fs.hi - x)))
    if fs.kind == "l1_ball":
        return float((fs.r - np.abs(x).sum()) / math.sqrt(d))
    return float(fs.r - np.linalg.norm(x))


def tangent(fs: FeasibleSet, g) -> np.ndarray:
    """Component of ``g`` parallel to the affine hull of the set."""
    g = np.asarray(g, dtype=float)
    if fs.kind == "simplex":
        return g - g.mean()
    return g
