"""Named inequality checks over solver traces.

Every check reduces to ``slack = rhs - lhs`` evaluated at each iterate (or
prefix) of a trace; the reported triple is the worst one, and the check
passes when that slack is at least ``-tol``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import geometry as geo
from ..solvers import SLACK_TOL, IterateTrace, averaging_sequences, margin_check

SUM_TOL = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    at: int | None = None
    note: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return {k: _jsonable(v) for k, v in out.items()}


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def worst(name: str, lhs, rhs, tol: float = SLACK_TOL, scale=None, note: str = "") -> CheckResult:
    """Reduce per-iterate ``lhs <= rhs`` to its worst instance.

    With ``scale`` the slack is measured relative to ``scale`` (per entry).
    """
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    slack = rhs - lhs
    if scale is not None:
        slack = slack / np.maximum(np.abs(np.asarray(scale, dtype=float)), 1e-300)
    if slack.size == 0:
        return CheckResult(name, math.nan, math.nan, math.inf, True, None, note or "empty")
    i = int(np.argmin(slack))
    return CheckResult(name, float(lhs[i]), float(rhs[i]), float(slack[i]),
                       bool(slack[i] >= -tol), i, note)


def feasibility(tr: IterateTrace, fs: geo.FeasibleSet) -> CheckResult:
    viol = np.array([_violation(fs, x) for x in tr.x])
    return worst("feasibility", viol, np.zeros_like(viol), note="max constraint violation per iterate")


def _violation(fs, x) -> float:
    if fs.kind == "simplex":
        return max(float(-np.min(x)), abs(float(x.sum()) - 1.0))
    if fs.kind in ("box", "interval"):
        return max(float(np.max(fs.lo - x)), float(np.max(x - fs.hi)), 0.0)
    if fs.kind == "l1_ball":
        return max(float(np.abs(x).sum()) - fs.r, 0.0)
    return max(float(np.linalg.norm(x)) - fs.r, 0.0)


# convex runs ---------------------------------------------------------------

def convex_one_step(tr: IterateTrace) -> CheckResult:
    """``f_{k+1} - f* <= (1 - a)(f_k - f*) + 2 a delta_k + L D^2 a^2 / 2``."""
    lhs = tr.f[1:] - tr.meta["f_star"]
    return worst("convex_one_step", lhs, lhs + tr.slack)


def averaging_telescope(tr: IterateTrace) -> CheckResult:
    """``beta_{k+1} - beta_k = a_k beta_{k+1}`` and the telescoped sum, relative to ``beta_{k+1}``."""
    a = tr.step
    beta = averaging_sequences(a).beta
    diff = beta[1:] - beta[:-1]
    scale = beta[1:]
    id_gap = np.abs(diff - a * beta[1:]) / scale
    tele_gap = np.abs(np.cumsum(diff) - (beta[1:] - 1.0)) / scale
    gap = np.maximum(id_gap, tele_gap)
    return worst("averaging_telescope", gap, np.zeros_like(gap), note="relative identity error")


def weighted_recursion(tr: IterateTrace) -> CheckResult:
    """``beta_{k+1}(f_{k+1} - f*) <= beta_k(f_k - f*) + beta_{k+1}(2 a delta + L D^2 a^2 / 2)``."""
    a, lev = tr.step, tr.level[:-1]
    beta = averaging_sequences(a).beta
    e = tr.f - tr.meta["f_star"]
    LD2 = tr.meta["L"] * tr.meta["D"] ** 2
    lhs = beta[1:] * e[1:]
    rhs = beta[:-1] * e[:-1] + 2 * a * beta[1:] * lev + 0.5 * LD2 * a * a * beta[1:]
    return worst("weighted_recursion", lhs, rhs, scale=beta[1:], note="slack relative to beta_{k+1}")


def summed_recursion(tr: IterateTrace) -> CheckResult:
    """Summed recursion divided by ``beta_{k+1}``, per prefix."""
    a, lev = tr.step, tr.level[:-1]
    beta = averaging_sequences(a).beta
    e = tr.f - tr.meta["f_star"]
    LD2 = tr.meta["L"] * tr.meta["D"] ** 2
    lhs = e[1:]
    rhs = (e[0] + np.cumsum(2 * a * beta[1:] * lev) + 0.5 * LD2 * np.cumsum(a * a * beta[1:])) / beta[1:]
    return worst("summed_recursion", lhs, rhs, scale=np.maximum(1.0, np.abs(rhs)))


def convex_floor(tr: IterateTrace, tol: float = 0.01) -> CheckResult:
    """Final suboptimality at most ``2 delta + tol``."""
    delta = float(tr.level[-1])
    return CheckResult("convex_floor", tr.final_suboptimality, 2 * delta + tol,
                       2 * delta + tol - tr.final_suboptimality,
                       bool(tr.final_suboptimality <= 2 * delta + tol), tr.n_steps,
                       f"tolerance {tol}")


# nonconvex runs --------------------------------------------------------------

def nonconvex_rate(tr: IterateTrace) -> np.ndarray:
    """``sqrt(2C(f_0 - f*) / (K + 1))`` for every prefix ``K``."""
    K = np.arange(tr.f.shape[0])
    return np.sqrt(2 * tr.meta["C"] * (tr.meta["f0"] - tr.meta["f_star"]) / (K + 1))


def nonconvex_one_step(tr: IterateTrace, name: str = "nonconvex_one_step") -> CheckResult:
    lhs = tr.f[1:]
    return worst(name, lhs, lhs + tr.slack)


def decrease_sum(tr: IterateTrace) -> CheckResult:
    """``sum_{k<=K} (g_k - delta)_+^2 <= 2C(f_0 - f_{K+1})`` for every prefix."""
    C, delta = tr.meta["C"], tr.meta["delta"]
    n = tr.n_steps
    lhs = np.cumsum(np.maximum(tr.gap_approx[:n] - delta, 0.0) ** 2)
    rhs = 2 * C * (tr.f[0] - tr.f[1:])
    return worst("decrease_sum", lhs, rhs, tol=SUM_TOL)


def nonconvex_rate_prefix(tr: IterateTrace, prefixes=None) -> CheckResult:
    """``min_{k<=K} G(x_k) <= sqrt(2C(f_0 - f*) / (K + 1)) + 2 delta``.

    Checked at every prefix; ``prefixes`` only selects what the note reports.
    """
    rhs = nonconvex_rate(tr) + 2 * tr.meta["delta"]
    res = worst("nonconvex_rate_prefix", tr.running_min_gap, rhs)
    if prefixes:
        shown = ", ".join(f"K={K}: {tr.running_min_gap[K]:.4g} <= {rhs[K]:.4g}"
                          for K in prefixes if K < rhs.shape[0])
        res = CheckResult(**{**asdict(res), "note": shown})
    return res


def nonconvex_iteration_budget(tr: IterateTrace, eps: float | None = None, factor: float = 1.05) -> CheckResult:
    """First prefix reaching gap ``eps > 2 delta`` within the stated iteration budget.

    ``eps`` defaults to ``3 delta`` (``0.1`` for exact runs).

    The budget is ``2C(f_0 - f*) / (eps - 2 delta)^2`` times ``factor``, and
    never below its ceiling (the bound is stated for integer iteration counts).
    """
    delta = tr.meta["delta"]
    if eps is None:
        eps = 3 * delta if delta > 0 else 0.1
    if not eps > 2 * delta:
        return CheckResult("nonconvex_iteration_budget", math.nan, math.nan, math.nan, False, None,
                           f"needs eps > 2 delta, got eps={eps}")
    budget = 2 * tr.meta["C"] * (tr.meta["f0"] - tr.meta["f_star"]) / (eps - 2 * delta) ** 2
    allowed = max(factor * budget, math.ceil(budget))
    hit = np.nonzero(tr.running_min_gap <= eps)[0]
    if hit.size == 0:
        ok = tr.f.shape[0] < allowed
        return CheckResult("nonconvex_iteration_budget", math.nan, allowed, math.nan, bool(ok), None,
                           f"gap {eps} not reached within {tr.n_steps} steps")
    K1 = float(hit[0] + 1)
    return CheckResult("nonconvex_iteration_budget", K1, allowed, allowed - K1, bool(K1 <= allowed),
                       int(hit[0]), f"eps={eps}")


# relative-oracle runs --------------------------------------------------------

def relative_rate_prefix(tr: IterateTrace) -> CheckResult:
    """``min_{k<=K} (G(x_k) - 2 delta ||grad f(x_k)||)_+ <= sqrt(2C(f_0 - f*) / (K + 1))``."""
    resid = np.maximum(tr.gap_exact - 2 * tr.meta["delta"] * tr.grad_norm, 0.0)
    return worst("relative_rate_prefix", np.minimum.accumulate(resid), nonconvex_rate(tr))


def margin_rate(tr: IterateTrace, fs: geo.FeasibleSet, r: float) -> CheckResult:
    """Residual-free rate ``min G <= rate / (1 - 2 delta / r)`` under a verified margin ``r``."""
    delta = tr.meta["delta"]
    try:
        rep = margin_check(tr, fs, r)
    except AssertionError as exc:
        return CheckResult("margin_rate", math.nan, math.nan, -math.inf, False, None, str(exc))
    if not rep.inside:
        k = int(np.argmin(rep.distances))
        return CheckResult("margin_rate", float(rep.distances[k]), r,
                           float(rep.distances[k] - r), False, k, "iterate closer than r to the boundary")
    if not delta < r / 2:
        return CheckResult("margin_rate", delta, r / 2, r / 2 - delta, False, None,
                           "needs delta < r / 2")
    rhs = nonconvex_rate(tr) / (1 - 2 * delta / r)
    res = worst("margin_rate", tr.running_min_gap, rhs)
    return CheckResult(**{**asdict(res), "note": f"r={r}, worst margin slack {rep.worst_slack:.3e}"})


def relative_stationarity(tr: IterateTrace, target: float = 1e-3) -> CheckResult:
    return CheckResult("relative_stationarity", tr.min_gap, target, target - tr.min_gap,
                       bool(tr.min_gap <= target), int(np.argmin(tr.gap_exact)),
                       f"final ||grad f|| = {tr.grad_norm[-1]:.3e}")


def backtracking_decrease(tr: IterateTrace) -> CheckResult:
    """``f_k - f_{k+1} >= eta (g_k - e_k)_+^2 / (2C)``."""
    dec = tr.f[:-1] - tr.f[1:]
    return worst("backtracking_decrease", dec - tr.slack, dec)


def run_checks(tr: IterateTrace, fs: geo.FeasibleSet, names, params: dict | None = None) -> list[CheckResult]:
    params = params or {}
    table = {
        "feasibility": lambda: feasibility(tr, fs),
        "convex_one_step": lambda: convex_one_step(tr),
        "averaging_telescope": lambda: averaging_telescope(tr),
        "weighted_recursion": lambda: weighted_recursion(tr),
        "summed_recursion": lambda: summed_recursion(tr),
        "convex_floor": lambda: convex_floor(tr, params.get("floor_tol", 0.01)),
        "nonconvex_one_step": lambda: nonconvex_one_step(tr),
        "decrease_sum": lambda: decrease_sum(tr),
        "nonconvex_rate_prefix": lambda: nonconvex_rate_prefix(tr, params.get("prefixes")),
        "nonconvex_iteration_budget": lambda: nonconvex_iteration_budget(tr, params.get("complexity_eps")),
        "relative_one_step": lambda: nonconvex_one_step(tr, "relative_one_step"),
        "relative_rate_prefix": lambda: relative_rate_prefix(tr),
        "margin_rate": lambda: margin_rate(tr, fs, params.get("margin", 0.0)),
        "relative_stationarity": lambda: relative_stationarity(tr, params.get("stationarity_target", 1e-3)),
        "backtracking_decrease": lambda: backtracking_decrease(tr),
    }
    out = []
    for name in names:
        if name not in table:
            raise KeyError(f"unknown check {name!r}")
        out.append(table[name]())
    return out
