"""Seeded invariant suites over every module.

``verify_all(seed)`` runs each named suite and reports its worst slack.
Passing ``oracle_inflate > 1`` corrupts every oracle (its actual error
exceeds the certified level), which the oracle suites must flag.
"""

from __future__ import annotations

import time

import numpy as np

from .. import geometry as geo
from .. import oracles as orc
from .. import reduction as red
from .. import solvers as sv
from ..geometry import TOL
from . import checks as ck

N_LMO = 10_000
N_POINTS = 1000


def _rng(seed, *salt):
    return np.random.default_rng([seed, *salt])


def suite_sets():
    return [geo.simplex(3), geo.simplex(12), geo.box(2), geo.box(8, -1.0, 2.0),
            geo.l1_ball(4, 2.0), geo.l1_ball(12), geo.l2_ball(3), geo.interval(-1, 1)]


def lmo_optimality(seed: int) -> list[ck.CheckResult]:
    out = []
    for i, fs in enumerate(suite_sets()):
        rng = _rng(seed, 1, i)
        G = rng.standard_normal((N_LMO, fs.dim))
        vals = np.array([g @ geo.lmo(fs, g) for g in G])
        if fs.is_polytope:
            best = (G @ geo.vertices(fs).T).min(axis=1)
            out.append(ck.worst(f"lmo_vs_vertices[{fs.kind}{fs.dim}]", vals, best,
                                note="<g, lmo(g)> against brute-force vertex minimum"))
        C = geo.sample_points(fs, rng, N_POINTS)
        sub = G[:N_POINTS]
        out.append(ck.worst(f"lmo_vs_samples[{fs.kind}{fs.dim}]", vals[:N_POINTS],
                            (sub * C).sum(axis=1), note="against random feasible points"))
    return out


def projection_checks(seed: int) -> list[ck.CheckResult]:
    out = []
    for i, fs in enumerate(suite_sets()):
        rng = _rng(seed, 2, i)
        X = 2.0 * rng.standard_normal((200, fs.dim))
        vi, memb, approx, slack_ineq = [], [], [], []
        for j, x in enumerate(X):
            p = geo.project(fs, x)
            memb.append(0.0 if geo.contains(fs, p) else 1.0)
            C = geo.sample_points(fs, rng, 20)
            vi.append(np.max((C - p) @ (x - p)))
            K = float(rng.choice([0.0, 0.01, 0.1, 1.0]))
            q = geo.approx_project(fs, x, K, seed=seed * 7919 + j)
            memb.append(0.0 if geo.contains(fs, q) else 1.0)
            approx.append(0.5 * (q - x) @ (q - x) - 0.5 * (p - x) @ (p - x) - K)
            slack_ineq.append(np.max((C - q) @ (x - q) - K - 0.5 * np.sum((C - q) ** 2, axis=1)))
        tag = f"{fs.kind}{fs.dim}"
        out += [
            ck.worst(f"projection_vi[{tag}]", vi, np.zeros(len(vi))),
            ck.worst(f"membership[{tag}]", memb, np.zeros(len(memb))),
            ck.worst(f"approx_projection[{tag}]", approx, np.zeros(len(approx))),
            ck.worst(f"slack_ineq[{tag}]", slack_ineq, np.zeros(len(slack_ineq))),
        ]
    return out


def oracle_pairs(seed: int):
    """``(set, objective)`` pairs used by the oracle and solver suites."""
    rng = _rng(seed, 3)
    M = rng.standard_normal((4, 4))
    S = rng.standard_normal((5, 5))
    I1 = geo.interval(-1, 1)
    s3 = geo.simplex(3)
    b2 = geo.box(2)
    l2 = geo.l2_ball(3)
    l1 = geo.l1_ball(4, 1.5)
    s5 = geo.simplex(5)
    return [
        (I1, orc.scalar_square(I1)),
        (s3, orc.shifted_quadratic([0.5, 0.3, 0.2], s3)),
        (b2, orc.quadratic(np.diag([1.0, -1.0]), [0.0, 0.0], b2)),
        (l2, orc.shifted_quadratic([1.5, -0.5, 0.25], l2)),
        (l1, orc.quadratic(M @ M.T / 4, rng.standard_normal(4), l1)),
        (s5, orc.quadratic((S + S.T) / 2, rng.standard_normal(5), s5)),
    ]


def oracle_models(fs, obj, inflate: float = 1.0):
    models = [("exact", 0.0), ("additive_worst", 0.1), ("additive_scheduled", 0.01),
              ("relative_worst", 0.2)]
    if fs.dim == 1:
        models.append(("additive_sign", 0.1))
    return [orc.InexactOracle(obj, fs, m, d, seed=3, inflate=inflate) for m, d in models]


def oracle_checks(seed: int, inflate: float = 1.0) -> list[ck.CheckResult]:
    out = []
    for i, (fs, obj) in enumerate(oracle_pairs(seed)):
        rng = _rng(seed, 4, i)
        X = geo.sample_points(fs, rng, N_POINTS)
        if fs.is_polytope:
            X[: fs.dim] = geo.vertices(fs)[: fs.dim]
        for oracle in oracle_models(fs, obj, inflate):
            tag = f"{oracle.model}@{fs.kind}{fs.dim}"
            cert, sampled, levels, transfer, transfer_rhs, close, lower_model = [], [], [], [], [], [], []
            Y = geo.sample_points(fs, rng, 200)
            for n, x in enumerate(X):
                k = n % 50
                lev = oracle.level(x, k)
                levels.append(lev)
                e = oracle.grad(x, k) - obj.grad(x)
                cert.append(orc.worst_directional_error(oracle, x, k))
                sampled.append(float(np.max(np.abs((x - Y) @ e))))
                grad = obj.grad(x)
                g = oracle.grad(x, k)
                transfer.append(float(grad @ geo.lmo(fs, g)))
                transfer_rhs.append(float(grad @ geo.lmo(fs, grad)) + 2 * lev)
                close.append(abs(orc.fw_gap(obj, fs, x) - orc.fw_gap_approx(oracle, fs, x, k)[0]) - lev)
                if obj.convex:
                    lower_model.append(obj.value(x) + float(g @ (geo.lmo(fs, g) - x)) - lev - obj.f_star)
            levels = np.array(levels)
            out.append(ck.worst(f"oracle_certification[{tag}]", cert, levels, tol=1e-12))
            out.append(ck.worst(f"oracle_sampled[{tag}]", sampled, levels, tol=1e-12))
            out.append(ck.worst(f"subproblem_transfer[{tag}]", transfer, transfer_rhs))
            out.append(ck.worst(f"gap_closeness[{tag}]", close, np.zeros(len(close))))
            if lower_model:
                out.append(ck.worst(f"inexact_lower_model[{tag}]", lower_model, np.zeros(len(lower_model))))
    return out


def solver_checks(seed: int) -> list[ck.CheckResult]:
    out = []
    I1 = geo.interval(-1, 1)
    sq = orc.scalar_square(I1)
    for delta in (0.01, 0.05, 0.1):
        o = orc.InexactOracle(sq, I1, "additive_sign", delta, seed=seed)
        tr = sv.solve_convex_fw(sq, I1, o, sv.StepRule("harmonic"), [0.7], 2000)
        tag = f"scalar_floor delta={delta}"
        for r in (ck.convex_one_step(tr), ck.averaging_telescope(tr), ck.weighted_recursion(tr),
                  ck.summed_recursion(tr), ck.convex_floor(tr), ck.feasibility(tr, I1)):
            out.append(_renamed(r, tag))
    s3 = geo.simplex(3)
    center = [0.5, 0.3, 0.2]
    shifted = orc.shifted_quadratic(center, s3)
    o = orc.InexactOracle(shifted, s3, "additive_scheduled", 0.01, seed=seed)
    tr = sv.solve_convex_fw(shifted, s3, o, sv.StepRule("power", p=0.75), s3.center(), 500)
    for r in (ck.convex_one_step(tr), ck.averaging_telescope(tr), ck.weighted_recursion(tr),
              ck.feasibility(tr, s3)):
        out.append(_renamed(r, "simplex scheduled power"))

    b2 = geo.box(2)
    q = orc.quadratic(np.diag([1.0, -1.0]), [0.0, 0.0], b2)
    for model, delta in (("exact", 0.0), ("additive_worst", 0.1)):
        o = orc.InexactOracle(q, b2, model, delta, seed=seed)
        tr = sv.solve_nonconvex_fw(q, b2, o, x0=[0.5, 0.0], K_max=10_000)
        tag = f"box saddle delta={delta}"
        for r in (ck.nonconvex_one_step(tr), ck.decrease_sum(tr), ck.nonconvex_rate_prefix(tr),
                  ck.nonconvex_iteration_budget(tr), ck.feasibility(tr, b2)):
            out.append(_renamed(r, tag))

    ball = geo.l2_ball(2)
    shifted = orc.shifted_quadratic([0.1, -0.05], ball)
    o = orc.InexactOracle(shifted, ball, "relative_worst", 0.125, seed=seed)
    tr = sv.solve_relative_fw(shifted, ball, o, x0=[0.3, 0.2], K_max=2000)
    for r in (ck.nonconvex_one_step(tr, "relative_one_step"), ck.relative_rate_prefix(tr),
              ck.margin_rate(tr, ball, 0.5), ck.feasibility(tr, ball)):
        out.append(_renamed(r, "ball relative"))

    o = orc.InexactOracle(q, b2, "additive_worst", 0.05, seed=seed)
    tr = sv.solve_backtracking_fw(q, b2, o, eta=0.5, x0=[0.5, 0.0], K_max=500)
    out.append(_renamed(ck.backtracking_decrease(tr), "box saddle"))

    runs = [sv.solve_nonconvex_fw(q, b2, orc.InexactOracle(q, b2, "additive_worst", 0.1, seed=seed),
                                  x0=[0.5, 0.0], K_max=300) for _ in range(2)]
    same = all(np.array_equal(getattr(runs[0], f), getattr(runs[1], f))
               for f in ("x", "f", "gap_exact", "gap_approx", "step", "slack"))
    out.append(ck.CheckResult("determinism", 0.0 if same else 1.0, 0.0, 0.0 if same else -1.0, same))
    return out


def reduction_checks(seed: int) -> list[ck.CheckResult]:
    rng = _rng(seed, 5)
    sets = [geo.simplex(5), geo.box(4), geo.l2_ball(3)]
    lower, upper, rhs, eps_gap, chain = [], [], [], [], []
    eps = 0.05
    for i in range(N_POINTS):
        fs = sets[i % 3]
        x = rng.standard_normal(fs.dim)
        K = float((0.0, 0.1, 0.5, 1.0)[i % 4])
        p, rep = red.lmo_via_projection(fs, x, K, eps=eps, seed=seed * 104729 + i)
        v = geo.lmo(fs, x)
        lower.append(-rep.gap)
        upper.append(rep.gap)
        rhs.append(rep.bound_rhs)
        eps_gap.append(rep.gap)
        chain.append(-min(red.verify_sandwich_chain(fs, x, p, v, rep.lam, K).values()))
    z = np.zeros(N_POINTS)
    return [
        ck.worst("sandwich_lower", lower, z),
        ck.worst("sandwich_upper", upper, rhs),
        ck.worst("eps_lmo", eps_gap, np.full(N_POINTS, eps)),
        ck.worst("sandwich_chain", chain, z),
    ]


def _renamed(r: ck.CheckResult, tag: str) -> ck.CheckResult:
    return ck.CheckResult(f"{r.name}[{tag}]", r.lhs, r.rhs, r.slack, r.passed, r.at, r.note)


SUITES = {
    "geometry.lmo": lambda seed, inflate: lmo_optimality(seed),
    "geometry.projection": lambda seed, inflate: projection_checks(seed),
    "oracles": lambda seed, inflate: oracle_checks(seed, inflate),
    "solvers": lambda seed, inflate: solver_checks(seed),
    "reduction": lambda seed, inflate: reduction_checks(seed),
}


def verify_all(seed: int = 0, oracle_inflate: float = 1.0, suites=None) -> dict:
    """Run the invariant suites; returns a JSON-ready verdict."""
    t0 = time.perf_counter()
    report = {"seed": seed, "oracle_inflate": oracle_inflate, "suites": {}}
    failures = []
    for name, fn in SUITES.items():
        if suites is not None and name not in suites:
            continue
        t = time.perf_counter()
        results = fn(seed, oracle_inflate)
        report["suites"][name] = {
            "checks": [r.to_dict() for r in results],
            "worst_slack": min(r.slack for r in results),
            "pass": all(r.passed for r in results),
            "seconds": round(time.perf_counter() - t, 3),
        }
        failures += [r.name for r in results if not r.passed]
    report["failures"] = failures
    report["pass"] = not failures
    report["seconds"] = round(time.perf_counter() - t0, 3)
    return report
