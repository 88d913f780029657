"""Frank-Wolfe under inexact gradient oracles.

Modules: :mod:`geometry` (sets, LMOs, projections), :mod:`oracles`
(objectives and inexact gradients), :mod:`solvers` (Frank-Wolfe variants
and traces), :mod:`reduction` (approximate projection to approximate LMO)
and :mod:`harness` (configs, bound checks, CLI).
"""

from .geometry import FeasibleSet, InvalidInput, approx_project, lmo, project, set_constants
from .oracles import InexactOracle, Objective, fw_gap, fw_gap_approx, grad_exact, grad_inexact
from .reduction import ReductionReport, lmo_via_projection, verify_sandwich_chain
from .solvers import (
    ConfigError,
    IterateTrace,
    StepFailure,
    StepRule,
    averaging_sequences,
    margin_check,
    solve_backtracking_fw,
    solve_convex_fw,
    solve_nonconvex_fw,
    solve_relative_fw,
)

__version__ = "0.1.0"
