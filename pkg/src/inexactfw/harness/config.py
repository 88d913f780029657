"""Experiment configuration files.

A config is a TOML document with the tables ``[set]``, ``[objective]``,
``[oracle]``, ``[solver]``, ``[checks]``, ``[output]`` and, for the
reduction mode, ``[reduction]``. See ``inexactfw/configs/`` for examples.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .. import geometry as geo
from .. import oracles as orc
from .. import solvers as sv
from ..geometry import InvalidInput

VARIANTS = ("convex", "nonconvex", "relative", "backtracking")

CHECKS_BY_VARIANT = {
    "convex": ("convex_one_step", "averaging_telescope", "weighted_recursion",
               "summed_recursion", "convex_floor"),
    "nonconvex": ("nonconvex_one_step", "decrease_sum", "nonconvex_rate_prefix", "nonconvex_iteration_budget"),
    "relative": ("relative_one_step", "relative_rate_prefix", "margin_rate", "relative_stationarity"),
    "backtracking": ("backtracking_decrease",),
}
COMMON_CHECKS = ("feasibility",)

DEFAULT_OUTPUT = {"dir": "out", "prefix": "run"}


class ConfigInvalid(InvalidInput):
    """Raised with every violated rule listed, one per line."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n  - " + "\n  - ".join(self.problems))


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    set: dict = field(default_factory=dict)
    objective: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=lambda: {"model": "exact"})
    solver: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    reduction: dict | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(data)
        known = {"name", "set", "objective", "oracle", "solver", "checks", "output", "reduction"}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid([f"unknown top-level keys: {sorted(unknown)}"])
        output = dict(DEFAULT_OUTPUT)
        output.update(data.pop("output", {}))
        return cls(output=output, **data)

    def to_dict(self) -> dict:
        out = {"name": self.name, "set": self.set, "objective": self.objective,
               "oracle": self.oracle, "solver": self.solver, "checks": self.checks,
               "output": self.output}
        if self.reduction is not None:
            out["reduction"] = self.reduction
        return copy.deepcopy(out)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def with_updates(self, section: str, **values) -> "ExperimentConfig":
        data = self.to_dict()
        data.setdefault(section, {}).update(values)
        return ExperimentConfig.from_dict(data)

    @property
    def variant(self) -> str:
        return self.solver.get("variant", "convex")

    @property
    def enabled_checks(self) -> list[str]:
        enabled = self.checks.get("enabled")
        if enabled is None:
            return list(COMMON_CHECKS) + list(CHECKS_BY_VARIANT.get(self.variant, ()))
        return list(enabled)


def loads(text: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(tomllib.loads(text))


def load(path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def step_rule(spec: dict | None) -> sv.StepRule:
    spec = dict(spec or {"kind": "harmonic"})
    return sv.StepRule(**spec)


def build_parts(cfg: ExperimentConfig):
    """Instantiate ``(set, objective, oracle)``; raises on the first problem."""
    fs = geo.FeasibleSet.from_dict(cfg.set)
    obj = orc.build_objective(cfg.objective, fs)
    spec = dict(cfg.oracle)
    oracle = orc.InexactOracle(obj, fs, model=spec.get("model", "exact"),
                               delta=float(spec.get("delta", 0.0)), seed=int(spec.get("seed", 0)),
                               D=spec.get("D"), inflate=float(spec.get("inflate", 1.0)))
    return fs, obj, oracle


def validate(cfg: ExperimentConfig) -> list[str]:
    """Every violated cross-field rule, as human-readable messages."""
    problems: list[str] = []
    if cfg.reduction is not None and not cfg.solver:
        return validate_reduction(cfg)
    try:
        fs, obj, oracle = build_parts(cfg)
    except (InvalidInput, KeyError, TypeError, ValueError) as exc:
        return [f"cannot build set/objective/oracle: {exc}"]

    variant = cfg.variant
    if variant not in VARIANTS:
        return [f"unknown solver variant {variant!r}; expected one of {VARIANTS}"]
    solver = cfg.solver
    K_max = solver.get("K_max")
    if not isinstance(K_max, int) or K_max < 0:
        problems.append(f"solver.K_max must be a nonnegative integer, got {K_max!r}")

    if variant == "convex":
        if not obj.convex:
            problems.append("convex solver requires a convex objective")
        if obj.f_star is None:
            problems.append("convex solver requires a known f_star")
        try:
            rule = step_rule(solver.get("step"))
            if rule.kind not in sv.OPEN_LOOP:
                problems.append(f"convex solver requires an open-loop step rule, got {rule.kind!r}")
        except InvalidInput as exc:
            problems.append(f"step rule: {exc}")
        if oracle.is_relative:
            problems.append("convex solver requires an additive or exact oracle")
    if variant == "relative" and oracle.model not in ("relative_worst", "exact"):
        problems.append(f"relative solver requires a relative oracle, got {oracle.model!r}")
    if variant == "nonconvex" and oracle.is_relative:
        problems.append("nonconvex solver requires an additive or exact oracle")
    if variant in ("nonconvex", "relative"):
        floor = sv.curvature_constant(obj, fs)
        C = solver.get("C")
        if C is not None and C < floor * (1 - 1e-12):
            problems.append(f"C invariant violated: C = {C} < max(L D^2, G D) = {floor}")
        delta = solver.get("delta")
        certified = oracle.delta if oracle.model != "exact" else 0.0
        if oracle.model == "additive_scheduled":
            certified = oracle.level(fs.center(), 0)
        if delta is not None and delta < certified * (1 - 1e-12):
            problems.append(f"solver.delta = {delta} is below the oracle's certified level {certified}")
    if variant == "backtracking":
        step = dict(solver.get("step") or {})
        step.setdefault("kind", "backtracking")
        try:
            step_rule(step)
        except InvalidInput as exc:
            problems.append(f"step rule: {exc}")
    if obj.f_star is None and variant != "backtracking":
        problems.append("bound checks require f_star; supply objective.f_star")

    x0 = solver.get("x0")
    if x0 is not None:
        try:
            if not geo.contains(fs, geo.as_point(fs, x0)):
                problems.append(f"solver.x0 = {x0} is not feasible")
        except InvalidInput as exc:
            problems.append(f"solver.x0: {exc}")

    allowed = set(COMMON_CHECKS) | set(CHECKS_BY_VARIANT[variant])
    for name in cfg.enabled_checks:
        if name not in allowed:
            problems.append(f"check {name!r} does not apply to the {variant} solver")
    if "margin_rate" in cfg.enabled_checks and not solver.get("margin", 0) > 0:
        problems.append("margin_rate needs solver.margin > 0")
    return problems


def validate_reduction(cfg: ExperimentConfig) -> list[str]:
    problems: list[str] = []
    red = cfg.reduction
    if red is None:
        return ["config has no [reduction] table"]
    for spec in red.get("sets", [cfg.set]):
        try:
            geo.FeasibleSet.from_dict(spec)
        except (InvalidInput, KeyError, TypeError) as exc:
            problems.append(f"cannot build set {spec}: {exc}")
    Ks = red.get("K", 0.0)
    for K in (Ks if isinstance(Ks, list) else [Ks]):
        if not K >= 0:
            problems.append(f"reduction.K must be nonnegative, got {K}")
    eps, lam = red.get("eps"), red.get("lambda")
    if eps is None and lam is None:
        problems.append("reduction needs eps or lambda")
    if eps is not None and not eps > 0:
        problems.append(f"reduction.eps must be positive, got {eps}")
    if lam is not None and not lam > 0:
        problems.append(f"reduction.lambda must be positive, got {lam}")
    n = red.get("n_instances", 100)
    if not isinstance(n, int) or n < 1:
        problems.append(f"reduction.n_instances must be a positive integer, got {n!r}")
    return problems


def checked(cfg: ExperimentConfig) -> ExperimentConfig:
    problems = validate(cfg)
    if problems:
        raise ConfigInvalid(problems)
    return cfg
