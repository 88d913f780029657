"""Frank-Wolfe variants driven by inexact gradient oracles.

Every solver returns an :class:`IterateTrace` that keeps the full iterate
history together with the slack of the one-step inequality the variant is
known to satisfy, so that traces can be audited after the fact.

Variants
--------
``convex``
    open-loop steps (``harmonic`` or ``power``) with the one-step bound
    ``f_{k+1} - f* <= (1 - a)(f_k - f*) + 2 a delta + L D^2 a^2 / 2``.
``nonconvex``
    adaptive step ``a = (g_k - delta)_+ / C`` and the decrease
    ``f_{k+1} <= f_k - (g_k - delta)_+^2 / (2C)``.
``relative``
    adaptive step ``a = (g_k - delta ||grad f(x_k)||)_+ / C`` under a
    relative oracle, same decrease form.
``backtracking``
    model-based backtracking from ``alpha0`` with decrease constant
    ``C / eta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import FeasibleSet, InvalidInput
from .oracles import InexactOracle, Objective

STEP_KINDS = ("harmonic", "power", "adaptive_nonconvex", "adaptive_relative", "backtracking")
OPEN_LOOP = ("harmonic", "power")
CSV_COLUMNS = ("k", "f", "gap_exact", "gap_approx", "step", "grad_norm", "slack_onestep", "beta")
CSV_VERSION = "inexactfw-trace v1"

#: absolute tolerance for per-step inequality slacks
SLACK_TOL = 1e-9
_CLAMP = 1.0 - 1e-12
MAX_SHRINKS = 60


class ConfigError(InvalidInput):
    """Raised when a solver configuration violates a precondition of its guarantee."""


class StepFailure(RuntimeError):
    """Backtracking could not accept any step; usually ``L`` is too small."""


@dataclass(frozen=True)
class StepRule:
    """Step-size rule.

    Open-loop rules are indexed from ``shift``: ``harmonic`` emits
    ``2 / (k + 2 + shift)`` and ``power`` emits ``(k + 1 + shift) ** -p``.
    The default ``shift = 1`` keeps every step strictly below 1.
    """

    kind: str = "harmonic"
    p: float = 1.0
    shift: int = 1
    eta: float = 0.5
    alpha0: float = 1.0

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ConfigError(f"unknown step rule {self.kind!r}; expected one of {STEP_KINDS}")
        if self.kind == "power" and not 0.5 < self.p <= 1.0:
            # sum a_k = inf and sum a_k^2 < inf hold exactly for p in (1/2, 1]
            raise ConfigError(f"power rule needs p in (0.5, 1], got {self.p}")
        if self.kind in OPEN_LOOP and (int(self.shift) != self.shift or self.shift < 1):
            raise ConfigError(f"open-loop shift must be an integer >= 1, got {self.shift}")
        if self.kind == "backtracking":
            if not 0.0 < self.eta < 1.0:
                raise ConfigError(f"backtracking needs eta in (0, 1), got {self.eta}")
            if not self.alpha0 > 0:
                raise ConfigError(f"backtracking needs alpha0 > 0, got {self.alpha0}")

    def open_loop(self, k: int) -> float:
        if self.kind == "harmonic":
            return 2.0 / (k + 2 + self.shift)
        if self.kind == "power":
            return (k + 1 + self.shift) ** (-self.p)
        raise ConfigError(f"{self.kind} is not an open-loop rule")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "power":
            out["p"] = self.p
        if self.kind in OPEN_LOOP:
            out["shift"] = self.shift
        if self.kind == "backtracking":
            out.update(eta=self.eta, alpha0=self.alpha0)
        return out


@dataclass(frozen=True)
class AveragingSequences:
    beta: np.ndarray
    alpha: np.ndarray


def averaging_sequences(steps) -> AveragingSequences:
    """``beta_k = 1 / prod_{j<k} (1 - a_j)`` and ``alpha_k = beta_k a_k / (1 - a_k)``.

    ``beta`` has one more entry than ``steps`` (``beta_0 = 1``).
    """
    a = np.asarray(steps, dtype=float)
    if np.any(a < 0) or np.any(a >= 1):
        raise InvalidInput("averaging sequences need every step in [0, 1)")
    beta = np.concatenate([[1.0], 1.0 / np.cumprod(1.0 - a)])
    alpha = beta[:-1] * a / (1.0 - a)
    return AveragingSequences(beta=beta, alpha=alpha)


def curvature_constant(obj: Objective, fs: FeasibleSet, C: float | None = None) -> float:
    """``max(L D^2, G D)``, or a user override that must not be smaller."""
    D = fs.diameter
    floor = max(obj.L * D * D, obj.G_bound * D)
    if C is None:
        return floor
    if C < floor * (1 - 1e-12):
        raise ConfigError(f"curvature constant C = {C} is below max(L D^2, G D) = {floor}")
    return float(C)


@dataclass
class IterateTrace:
    """Iterate history of one solver run.

    Iterate-indexed arrays have ``K_max + 1`` entries, step-indexed arrays
    (``step``, ``slack``, ``clamped``, ``trials``) have ``K_max``.
    """

    variant: str
    x: np.ndarray
    f: np.ndarray
    gap_exact: np.ndarray
    gap_approx: np.ndarray
    grad_norm: np.ndarray
    tangent_grad_norm: np.ndarray
    level: np.ndarray
    step: np.ndarray
    slack: np.ndarray
    clamped: np.ndarray
    trials: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.step.shape[0]

    @property
    def beta(self) -> np.ndarray:
        return averaging_sequences(self.step).beta

    @property
    def running_min_gap(self) -> np.ndarray:
        return np.minimum.accumulate(self.gap_exact)

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gap_exact))

    @property
    def final_suboptimality(self) -> float | None:
        f_star = self.meta.get("f_star")
        return None if f_star is None else float(self.f[-1] - f_star)

    def rows(self):
        beta = self.beta if np.all(self.step < 1) else np.full(self.f.shape, np.nan)
        n = self.n_steps
        for k in range(n + 1):
            yield {
                "k": k,
                "f": self.f[k],
                "gap_exact": self.gap_exact[k],
                "gap_approx": self.gap_approx[k],
                "step": self.step[k] if k < n else "",
                "grad_norm": self.grad_norm[k],
                "slack_onestep": self.slack[k] if k < n else "",
                "beta": beta[k],
            }

    def write_csv(self, target) -> None:
        """Write the versioned CSV trace to a path or an open text file."""
        if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
            with open(target, "w", newline="") as fh:
                self.write_csv(fh)
            return
        target.write(f"# {CSV_VERSION}\n")
        writer = csv.DictWriter(target, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for k, v in row.items()})


def _check_start(fs: FeasibleSet, x0) -> np.ndarray:
    x0 = geo.as_point(fs, x0)
    if not geo.contains(fs, x0):
        raise InvalidInput(f"starting point {x0.tolist()} is not feasible")
    return x0


def _run(obj, fs, oracle, x0, K_max, choose_step, variant, meta, early_stop=None):
    """Shared Frank-Wolfe loop; ``choose_step(k, x, fx, g_tilde, s, lev)`` returns ``(a, trials)``."""
    if int(K_max) != K_max or K_max < 0:
        raise InvalidInput(f"K_max must be a nonnegative integer, got {K_max}")
    K_max = int(K_max)
    x = _check_start(fs, x0)
    d = fs.dim
    xs = np.empty((K_max + 1, d))
    cols = {name: np.empty(K_max + 1) for name in
            ("f", "gap_exact", "gap_approx", "grad_norm", "tangent_grad_norm", "level")}
    step = np.zeros(K_max)
    trials = np.zeros(K_max, dtype=int)
    clamped = np.zeros(K_max, dtype=bool)
    null_run = 0
    n = K_max
    for k in range(K_max + 1):
        grad = obj.grad(x)
        g = oracle.grad(x, k)
        s = geo.lmo(fs, g)
        fx = obj.value(x)
        xs[k] = x
        cols["f"][k] = fx
        cols["gap_exact"][k] = grad @ (x - geo.lmo(fs, grad))
        g_tilde = float(g @ (x - s))
        cols["gap_approx"][k] = g_tilde
        cols["grad_norm"][k] = np.linalg.norm(grad)
        cols["tangent_grad_norm"][k] = np.linalg.norm(geo.tangent(fs, grad))
        lev = oracle.level(x, k)
        cols["level"][k] = lev
        if k == K_max:
            break
        a, trials[k] = choose_step(k, x, fx, g_tilde, s, lev)
        if a >= 1.0:
            a, clamped[k] = _CLAMP, True
        step[k] = a
        if a > 0:
            x = x + a * (s - x)
        null_run = null_run + 1 if a == 0 else 0
        if early_stop is not None and null_run >= early_stop:
            # the last step was null, so x_{k+1} repeats x_k
            n = k + 1
            xs[n] = xs[k]
            for v in cols.values():
                v[n] = v[k]
            break
    if n < K_max:
        xs = xs[: n + 1]
        cols = {name: v[: n + 1] for name, v in cols.items()}
        step, trials, clamped = step[:n], trials[:n], clamped[:n]
    meta = dict(meta, D=fs.diameter, L=obj.L, f0=float(cols["f"][0]), f_star=obj.f_star,
                set=fs.to_dict(), oracle=oracle.model, oracle_delta=oracle.delta)
    return IterateTrace(variant=variant, x=xs, step=step, slack=np.zeros(step.shape[0]),
                        clamped=clamped, trials=trials, meta=meta, **cols)


def _plus(u):
    return np.maximum(u, 0.0)


def solve_convex_fw(obj: Objective, fs: FeasibleSet, oracle: InexactOracle, step: StepRule,
                    x0, K_max: int) -> IterateTrace:
    """Frank-Wolfe with open-loop steps on a convex objective."""
    if step.kind not in OPEN_LOOP:
        raise ConfigError(f"convex solver needs an open-loop step rule, got {step.kind!r}")
    if not obj.convex:
        raise ConfigError("convex solver needs a convex objective")
    if obj.f_star is None:
        raise ConfigError("convex solver needs a known f_star")
    if oracle.is_relative:
        raise ConfigError("convex solver needs an additive or exact oracle")

    def choose(k, x, fx, g_tilde, s, lev):
        return step.open_loop(k), 1

    tr = _run(obj, fs, oracle, x0, K_max, choose, "convex", {"step": step.to_dict()})
    a, f, lev = tr.step, tr.f - obj.f_star, tr.level[:-1]
    D = fs.diameter
    tr.slack = (1 - a) * f[:-1] + 2 * a * lev + 0.5 * obj.L * D * D * a * a - f[1:]
    return tr


def _additive_delta(oracle: InexactOracle, delta: float | None) -> float:
    if oracle.is_relative:
        raise ConfigError("nonconvex solver needs an additive or exact oracle")
    # level at k = 0 is the largest one for scheduled oracles
    certified = oracle.level(np.zeros(oracle.fs.dim), 0)
    if delta is None:
        return certified
    if delta < certified * (1 - 1e-12):
        raise ConfigError(f"solver delta = {delta} is below the oracle's certified level {certified}")
    return float(delta)


def solve_nonconvex_fw(obj: Objective, fs: FeasibleSet, oracle: InexactOracle,
                       C: float | None = None, delta: float | None = None, x0=None,
                       K_max: int = 100, early_stop: int | None = None) -> IterateTrace:
    """Adaptive-step Frank-Wolfe for smooth nonconvex objectives.

    ``early_stop=n`` ends the run after ``n`` consecutive null steps; by
    default the run always takes ``K_max`` steps.
    """
    C = curvature_constant(obj, fs, C)
    delta = _additive_delta(oracle, delta)

    def choose(k, x, fx, g_tilde, s, lev):
        return max(g_tilde - delta, 0.0) / C, 1

    x0 = fs.center() if x0 is None else x0
    tr = _run(obj, fs, oracle, x0, K_max, choose, "nonconvex", {"C": C, "delta": delta},
              early_stop=early_stop)
    n = tr.n_steps
    tr.slack = tr.f[:n] - _plus(tr.gap_approx[:n] - delta) ** 2 / (2 * C) - tr.f[1:]
    return tr


def solve_relative_fw(obj: Objective, fs: FeasibleSet, oracle: InexactOracle,
                      C: float | None = None, delta: float | None = None, x0=None,
                      K_max: int = 100) -> IterateTrace:
    """Adaptive-step Frank-Wolfe under a relative oracle."""
    if oracle.model not in ("relative_worst", "exact"):
        raise ConfigError(f"relative solver needs a relative oracle, got {oracle.model!r}")
    C = curvature_constant(obj, fs, C)
    if delta is None:
        delta = oracle.delta if oracle.is_relative else 0.0
    elif delta < (oracle.delta if oracle.is_relative else 0.0) * (1 - 1e-12):
        raise ConfigError(f"solver delta = {delta} is below the oracle's relative level {oracle.delta}")

    def choose(k, x, fx, g_tilde, s, lev):
        return max(g_tilde - delta * float(np.linalg.norm(obj.grad(x))), 0.0) / C, 1

    x0 = fs.center() if x0 is None else x0
    tr = _run(obj, fs, oracle, x0, K_max, choose, "relative", {"C": C, "delta": delta})
    n = tr.n_steps
    resid = _plus(tr.gap_approx[:n] - delta * tr.grad_norm[:n])
    tr.slack = tr.f[:n] - resid ** 2 / (2 * C) - tr.f[1:]
    return tr


def solve_backtracking_fw(obj: Objective, fs: FeasibleSet, oracle: InexactOracle,
                          L: float | None = None, eta: float = 0.5, alpha0: float = 1.0,
                          x0=None, K_max: int = 100) -> IterateTrace:
    """Frank-Wolfe with backtracking on the smoothness upper model.

    Each iteration tries ``alpha = min(alpha0, (g_k - e_k)_+ / C)`` with
    ``e_k`` the oracle's certified directional error and ``C`` built from
    ``L``, then shrinks by ``eta`` until

        f(x + alpha d) <= f(x) + alpha (<g, d> + e_k) + L alpha^2 ||d||^2 / 2.

    Both sides are compared through the exact quadratic expansion of
    ``f`` along ``d``, so a rejection is never undone by rounding.

    The recorded slack is the decrease over ``eta (g_k - e_k)_+^2 / (2C)``.
    """
    rule = StepRule("backtracking", eta=eta, alpha0=alpha0)
    L = obj.L if L is None else float(L)
    if not L > 0:
        raise ConfigError(f"backtracking needs L > 0, got {L}")
    D = fs.diameter
    C = max(L * D * D, obj.G_bound * D)

    def choose(k, x, fx, g_tilde, s, lev):
        drop = g_tilde - lev
        if drop <= 0:
            return 0.0, 0
        d = s - x
        dd = float(d @ d)
        # f(x + a d) - model(a) = a * lin + a^2 * quad, exactly, for a quadratic f.
        # Differencing two f values instead loses the a^2 term to cancellation
        # once a is around 1e-6, after which any step passes.
        lin = float(obj.grad(x) @ d) + g_tilde - lev
        dAd = float(d @ obj.A @ d)
        quad = 0.5 * (dAd - L * dd)
        scale_lin = abs(lin) + lev
        scale_quad = 0.5 * (abs(dAd) + L * dd)
        alpha = min(rule.alpha0, drop / C)
        for trial in range(1, MAX_SHRINKS + 2):
            excess = alpha * lin + alpha * alpha * quad
            if excess <= 1e-12 * (alpha * scale_lin + alpha * alpha * scale_quad):
                return alpha, trial
            alpha *= rule.eta
        raise StepFailure(f"no step accepted after {MAX_SHRINKS} shrinks at k={k}; is L = {L} too small?")

    x0 = fs.center() if x0 is None else x0
    tr = _run(obj, fs, oracle, x0, K_max, choose, "backtracking",
              {"C": C, "L_model": L, "step": rule.to_dict()})
    n = tr.n_steps
    resid = _plus(tr.gap_approx[:n] - tr.level[:n])
    tr.slack = tr.f[:n] - tr.f[1:] - rule.eta * resid ** 2 / (2 * C)
    return tr


@dataclass(frozen=True)
class MarginReport:
    inside: bool
    distances: np.ndarray
    slack: np.ndarray | None

    @property
    def worst_slack(self) -> float:
        return math.inf if self.slack is None or self.slack.size == 0 else float(np.min(self.slack))


def margin_check(trace: IterateTrace, fs: FeasibleSet, r: float) -> MarginReport:
    """Verify an interior margin ``r`` along a trace.

    ``inside`` holds iff every iterate is at distance at least ``r`` from
    the boundary. In that case ``slack[k] = G(x_k) - r ||grad f(x_k)||``,
    where on the simplex only the gradient component inside the affine hull
    counts. An inside trace with a slack below ``-1e-9`` raises
    ``AssertionError``.
    """
    if not r > 0:
        raise InvalidInput(f"margin r must be positive, got {r}")
    dist = np.array([geo.dist_to_boundary(fs, x) for x in trace.x])
    inside = bool(np.all(dist >= r - 1e-12))
    if not inside:
        return MarginReport(False, dist, None)
    slack = trace.gap_exact - r * trace.tangent_grad_norm
    if np.min(slack) < -SLACK_TOL:
        raise AssertionError(f"margin inequality violated, worst slack {np.min(slack):.3e}")
    return MarginReport(True, dist, slack)
