"""Approximate linear minimization from one approximate projection.

A K-approximate projection ``p'`` of ``-lam * x`` onto ``C`` satisfies

    0 <= <p', x> - min_c <c, x> <= (K + D^2 / 2 + mu D) / lam

with ``D`` the diameter and ``mu`` the radius of ``C``. Taking
``lam = (K + D^2 / 2 + mu D) / eps`` turns the projection into an
eps-accurate LMO.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import geometry as geo
from .geometry import TOL, FeasibleSet, InvalidInput


@dataclass(frozen=True)
class ReductionReport:
    lam: float
    K: float
    eps_target: float | None
    lmo_value: float
    reduced_value: float
    bound_rhs: float
    pass_: bool

    @property
    def gap(self) -> float:
        return self.reduced_value - self.lmo_value

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("pass_")
        out["lambda"] = out.pop("lam")
        out["gap"] = self.gap
        return out


def bound_constant(fs: FeasibleSet, K: float) -> float:
    D, mu = geo.set_constants(fs)
    return K + 0.5 * D * D + mu * D


def lmo_via_projection(fs: FeasibleSet, x, K: float, eps: float | None = None,
                       lam: float | None = None, seed: int = 0) -> tuple[np.ndarray, ReductionReport]:
    """Approximate LMO at ``x`` from a K-approximate projection of ``-lam * x``.

    ``lam`` defaults to the smallest value that certifies accuracy ``eps``.
    Passing ``lam`` directly (for sweeps) leaves ``eps`` optional; the
    report then passes when the sandwich bound holds.
    """
    if not K >= 0:
        raise InvalidInput(f"slack K must be nonnegative, got {K}")
    if eps is not None and not eps > 0:
        raise InvalidInput(f"target accuracy eps must be positive, got {eps}")
    if lam is None:
        if eps is None:
            raise InvalidInput("need eps or lam")
        lam = bound_constant(fs, K) / eps
    if not lam > 0:
        raise InvalidInput(f"scaling lam must be positive, got {lam}")
    x = geo.as_point(fs, x)
    p = geo.approx_project(fs, -lam * x, K, seed=seed)
    v = geo.lmo(fs, x)
    lmo_value, reduced_value = float(v @ x), float(p @ x)
    rhs = bound_constant(fs, K) / lam
    gap = reduced_value - lmo_value
    ok = -TOL <= gap <= rhs + TOL
    if eps is not None:
        ok = ok and gap <= eps + TOL
    return p, ReductionReport(lam=float(lam), K=float(K), eps_target=eps, lmo_value=lmo_value,
                              reduced_value=reduced_value, bound_rhs=rhs, pass_=bool(ok))


def verify_sandwich_chain(fs: FeasibleSet, x, p, v, lam: float, K: float) -> dict[str, float]:
    """Slack of each inequality in the chain bounding ``lam <p' - v, x>``.

    ``projection`` K + |v - p'|^2 / 2 - <v - p', -lam x - p'>
    ``rearranged`` the same statement solved for ``lam <p' - v, x>``
    ``cauchy``     with ``<p', v - p'>`` replaced by ``|p'| |v - p'|``
    ``constants``  with ``|v - p'| <= D`` and ``|p'| <= mu``

    Each line weakens the previous one, so the slacks are nondecreasing.
    """
    x, p, v = (np.asarray(a, dtype=float) for a in (x, p, v))
    D, mu = geo.set_constants(fs)
    diff = v - p
    nd = float(np.linalg.norm(diff))
    lhs = lam * float((p - v) @ x)
    return {
        "projection": K + 0.5 * nd * nd - float(diff @ (-lam * x - p)),
        "rearranged": K + 0.5 * nd * nd + float(p @ diff) - lhs,
        "cauchy": K + 0.5 * nd * nd + float(np.linalg.norm(p)) * nd - lhs,
        "constants": K + 0.5 * D * D + mu * D - lhs,
    }
