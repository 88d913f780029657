"""Run experiments described by configs and write their artifacts.

Each run writes a CSV trace and a JSON verdict; its exit code is 0 iff
every enabled check passed. Output goes to ``output.dir`` from the config
unless ``$INEXACTFW_OUTPUT_DIR`` (or an explicit argument) overrides it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import geometry as geo
from .. import reduction as red
from .. import solvers as sv
from ..geometry import TOL
from . import checks as ck
from .config import ConfigInvalid, ExperimentConfig, build_parts, checked, step_rule, validate_reduction

OUTPUT_ENV = "INEXACTFW_OUTPUT_DIR"
SWEEP_PARAMS = ("delta", "K_max", "lambda", "eps", "step")


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    checks: list = field(default_factory=list)
    trace: sv.IterateTrace | None = None
    paths: dict = field(default_factory=dict)


def output_dir(cfg: ExperimentConfig, override=None) -> Path:
    root = override or os.environ.get(OUTPUT_ENV) or cfg.output.get("dir", "out")
    return Path(root)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(type(v))


def solve(cfg: ExperimentConfig):
    """Run the configured solver; returns ``(trace, set, objective, oracle)``."""
    fs, obj, oracle = build_parts(cfg)
    s = cfg.solver
    x0 = s.get("x0")
    if x0 is None:
        x0 = fs.center()
    K_max = int(s["K_max"])
    variant = cfg.variant
    if variant == "convex":
        tr = sv.solve_convex_fw(obj, fs, oracle, step_rule(s.get("step")), x0, K_max)
    elif variant == "nonconvex":
        tr = sv.solve_nonconvex_fw(obj, fs, oracle, s.get("C"), s.get("delta"), x0, K_max,
                                   early_stop=s.get("early_stop"))
    elif variant == "relative":
        tr = sv.solve_relative_fw(obj, fs, oracle, s.get("C"), s.get("delta"), x0, K_max)
    else:
        step = dict(s.get("step") or {})
        tr = sv.solve_backtracking_fw(obj, fs, oracle, s.get("L"), step.get("eta", 0.5),
                                      step.get("alpha0", 1.0), x0, K_max)
    return tr, fs, obj, oracle


def _bound_rhs(cfg: ExperimentConfig, tr: sv.IterateTrace):
    if tr.meta.get("f_star") is None:
        return None
    if cfg.variant == "convex":
        return 2 * float(tr.level[-1]) + cfg.checks.get("floor_tol", 0.01)
    if cfg.variant == "nonconvex":
        return float(ck.nonconvex_rate(tr)[-1] + 2 * tr.meta["delta"])
    if cfg.variant == "relative":
        return float(ck.nonconvex_rate(tr)[-1])
    return None


def run(cfg: ExperimentConfig, outdir=None, write: bool = True) -> RunResult:
    """Execute one solver experiment; invalid configs return exit code 2."""
    if cfg.reduction is not None and not cfg.solver:
        return reduce(cfg, outdir, write)
    try:
        checked(cfg)
    except ConfigInvalid as exc:
        return RunResult(2, {"name": cfg.name, "pass": False, "errors": exc.problems})
    try:
        tr, fs, obj, oracle = solve(cfg)
    except sv.StepFailure as exc:
        return RunResult(1, {"name": cfg.name, "pass": False, "errors": [str(exc)]})
    params = dict(cfg.checks)
    params.setdefault("margin", cfg.solver.get("margin", 0.0))
    results = ck.run_checks(tr, fs, cfg.enabled_checks, params)
    ok = all(r.passed for r in results)
    summary = {
        "name": cfg.name,
        "variant": cfg.variant,
        "K_max": tr.n_steps,
        "min_gap": tr.min_gap,
        "final_suboptimality": tr.final_suboptimality,
        "bound_rhs": _bound_rhs(cfg, tr),
        "checks": [r.to_dict() for r in results],
        "pass": ok,
    }
    if "C" in tr.meta:
        summary["C"] = tr.meta["C"]
    if np.any(tr.clamped):
        summary["clamped_steps"] = int(np.sum(tr.clamped))
    res = RunResult(0 if ok else 1, summary, results, tr)
    if write:
        out = output_dir(cfg, outdir)
        prefix = cfg.output.get("prefix", cfg.name)
        buf = io.StringIO()
        tr.write_csv(buf)
        res.paths = {"trace": out / f"{prefix}_trace.csv", "verdict": out / f"{prefix}_verdict.json"}
        write_atomic(res.paths["trace"], buf.getvalue())
        write_atomic(res.paths["verdict"], _json(summary))
    return res


# reduction mode --------------------------------------------------------------

def reduction_instances(cfg: ExperimentConfig):
    """Yield ``(set, x, K, instance_seed)`` for the configured fuzzing campaign."""
    spec = cfg.reduction
    sets = [geo.FeasibleSet.from_dict(s) for s in spec.get("sets", [cfg.set])]
    Ks = spec.get("K", 0.0)
    Ks = Ks if isinstance(Ks, list) else [Ks]
    n = int(spec.get("n_instances", 100))
    seed = int(spec.get("seed", 0))
    rng = np.random.default_rng(seed)
    for i in range(n):
        fs = sets[i % len(sets)]
        yield fs, rng.standard_normal(fs.dim), float(Ks[i % len(Ks)]), seed * 1_000_003 + i


def reduce(cfg: ExperimentConfig, outdir=None, write: bool = True) -> RunResult:
    """Fuzz the projection-to-LMO reduction over seeded instances."""
    if cfg.reduction is None:
        return RunResult(2, {"name": cfg.name, "pass": False, "errors": ["config has no [reduction] table"]})
    problems = validate_reduction(cfg)
    if problems:
        return RunResult(2, {"name": cfg.name, "pass": False, "errors": problems})
    spec = cfg.reduction
    eps, lam = spec.get("eps"), spec.get("lambda")
    rows = []
    gaps, rhss, chain_min, chain_mono, slack_ineq_min = [], [], [], [], []
    eps_ok = True
    for i, (fs, x, K, seed) in enumerate(reduction_instances(cfg)):
        p, rep = red.lmo_via_projection(fs, x, K, eps=eps if lam is None else None, lam=lam, seed=seed)
        v = geo.lmo(fs, x)
        chain = red.verify_sandwich_chain(fs, x, p, v, rep.lam, K)
        vals = list(chain.values())
        chain_min.append(min(vals))
        chain_mono.append(min(b - a for a, b in zip(vals, vals[1:])))
        cs = geo.sample_points(fs, np.random.default_rng(seed), 16)
        z = -rep.lam * x
        slack_ineq = K + 0.5 * np.sum((cs - p) ** 2, axis=1) - (cs - p) @ (z - p)
        slack_ineq_min.append(float(np.min(slack_ineq)) / max(1.0, rep.lam))
        gaps.append(rep.gap)
        rhss.append(rep.bound_rhs)
        if eps is not None and rep.gap > eps + TOL:
            eps_ok = False
        rows.append({"i": i, "set": fs.kind, "dim": fs.dim, "K": K, "lambda": rep.lam,
                     "lmo_value": rep.lmo_value, "reduced_value": rep.reduced_value,
                     "gap": rep.gap, "bound_rhs": rep.bound_rhs, "pass": rep.pass_})
    gaps, rhss = np.array(gaps), np.array(rhss)
    results = [
        ck.worst("sandwich_lower", -gaps, np.zeros_like(gaps), note="0 <= <p', x> - <v, x>"),
        ck.worst("sandwich_upper", gaps, rhss),
        ck.worst("sandwich_chain", -np.array(chain_min), np.zeros(len(chain_min))),
        ck.worst("sandwich_chain_monotone", -np.array(chain_mono), np.zeros(len(chain_mono)),
                 note="each line of the chain weakens the previous one"),
        ck.worst("projection_slack_inequality", -np.array(slack_ineq_min), np.zeros(len(slack_ineq_min)),
                 note="slack relative to max(1, lambda)"),
    ]
    if eps is not None and lam is None:
        i = int(np.argmax(gaps))
        results.append(ck.CheckResult("eps_lmo", float(gaps[i]), eps, eps - float(gaps[i]), eps_ok, i))
    ok = all(r.passed for r in results)
    summary = {"name": cfg.name, "mode": "reduce", "n_instances": len(rows),
               "max_gap": float(gaps.max()), "max_bound_rhs": float(rhss.max()),
               "lambda": lam, "eps": eps, "checks": [r.to_dict() for r in results], "pass": ok}
    res = RunResult(0 if ok else 1, summary, results)
    if write:
        out = output_dir(cfg, outdir)
        prefix = cfg.output.get("prefix", cfg.name)
        res.paths = {"instances": out / f"{prefix}_reduction.csv", "verdict": out / f"{prefix}_verdict.json"}
        write_atomic(res.paths["instances"], _csv(rows, f"# {sv.CSV_VERSION} reduction"))
        write_atomic(res.paths["verdict"], _json(summary))
    return res


def _csv(rows: list[dict], header: str) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


# sweeps ----------------------------------------------------------------------

def parse_step(value: str) -> dict:
    """``"harmonic"``, ``"power:0.75"`` or ``"backtracking:0.5"`` to a step table."""
    kind, _, arg = str(value).partition(":")
    spec = {"kind": kind}
    if arg:
        spec["p" if kind == "power" else "eta"] = float(arg)
    return spec


def sweep_point(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    data = cfg.to_dict()
    if param == "delta":
        data["oracle"]["delta"] = float(value)
        data["solver"].pop("delta", None)
    elif param == "K_max":
        data["solver"]["K_max"] = int(value)
    elif param == "step":
        data["solver"]["step"] = parse_step(value)
    else:
        if cfg.reduction is None:
            raise ValueError(f"sweeping {param!r} needs a [reduction] table")
        key = "lambda" if param == "lambda" else "eps"
        data["reduction"][key] = float(value)
        if param == "lambda":
            data["reduction"].pop("eps", None)
    return ExperimentConfig.from_dict(data)


def _sweep_row(args):
    cfg, param, value = args
    res = run(sweep_point(cfg, param, value), write=False)
    s = res.summary
    row = {"param": param, "value": value, "pass": s.get("pass", False), "exit_code": res.exit_code}
    if s.get("mode") == "reduce":
        row.update(max_gap=s["max_gap"], bound_rhs=s["max_bound_rhs"])
    else:
        row.update(min_gap=s.get("min_gap"), final_suboptimality=s.get("final_suboptimality"),
                   bound_rhs=s.get("bound_rhs"))
        delta = res.trace.meta.get("delta", res.trace.level[-1]) if res.trace is not None else None
        row["delta"] = delta
    return row


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``; NaN if any ``y <= 0``."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if np.any(ys <= 0) or xs.size < 2:
        return math.nan
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


@dataclass
class SweepResult:
    exit_code: int
    rows: list
    summary: dict
    paths: dict = field(default_factory=dict)


def sweep(cfg: ExperimentConfig, param: str, values, outdir=None, jobs: int = 1,
          write: bool = True) -> SweepResult:
    """One run per value (same seed); aggregated into one CSV row each."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    tasks = [(cfg, param, v) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    summary = {"name": cfg.name, "param": param, "values": list(values),
               "pass": all(r["pass"] for r in rows)}
    if param == "K_max" and cfg.variant == "nonconvex":
        excess = [r["min_gap"] - 2 * r["delta"] for r in rows]
        summary["loglog_slope"] = loglog_slope([r["value"] for r in rows], excess)
    if param == "lambda":
        scaled = [r["bound_rhs"] * float(r["value"]) for r in rows]
        summary["rhs_times_lambda_spread"] = float((max(scaled) - min(scaled)) / max(scaled))
    if param == "delta" and cfg.variant == "convex":
        subs = [r["final_suboptimality"] for r in rows]
        summary["nondecreasing"] = bool(all(b >= a for a, b in zip(subs, subs[1:])))
    res = SweepResult(0 if summary["pass"] else 1, rows, summary)
    if write:
        out = output_dir(cfg, outdir)
        prefix = cfg.output.get("prefix", cfg.name)
        res.paths = {"csv": out / f"{prefix}_sweep_{param}.csv",
                     "summary": out / f"{prefix}_sweep_{param}.json"}
        write_atomic(res.paths["csv"], _csv(rows, f"# {sv.CSV_VERSION} sweep"))
        write_atomic(res.paths["summary"], _json(summary))
    return res
