"""Composite minimization of h(c(x)) by proximal linearization.

A smooth inner map c is linearized at each iterate; the structured outer
function h keeps its exact form in the subproblem

    min_d  h(c(x) + grad c(x) d) + (mu/2) |d|^2,

which is solved in closed form (shrink, group shrink, Huber, singular
value thresholding), through a simplex dual (polyhedral max functions),
or by a primal-dual iteration (any convex h with a prox).  An adaptive
outer loop accepts steps under a sufficient-decrease test and adjusts
mu, with restoration hooks for extended-valued h.  Diagnostics track the
active manifold the iterates identify and the multiplier limit.
"""

from .core import (
    IterateRecord,
    ManifoldSignature,
    NoDescentCandidate,
    OuterFunction,
    ProblemInstance,
    ProxPolicy,
    RestorationFailed,
    SignatureKind,
    SmoothMap,
    SolveConfig,
    SubproblemTolFail,
    SvdConvergenceError,
    composite_eval,
    linearized_eval,
)
from .identify import IdentificationReport, build_report, format_report
from .linalg import jacobi_svd, project_simplex
from .oracle import fd_jacobian, grid_prox_1d, grid_subproblem
from .outer import (
    BoxIndicator,
    BoxIndicatorComposite,
    GroupL2Norm,
    HuberSum,
    L1Norm,
    MangasarianExp,
    NuclearNorm,
    PenaltyComposite,
    PiecewiseScalar1D,
    PolyhedralMax,
    RegularizedComposite,
    SquaredL2Norm,
    ZhangPhi,
    group_shrink,
    huber_prox,
    max_of_quadratics,
    nonconvex_prox,
    nuclear_prox,
    polyhedral_signature,
    shrink,
    two_branch_jump,
)
from .problems import InstanceFile, build_problem, generate, load_instance, load_packaged
from .solver import (
    RestorationHook,
    SolverState,
    SolveStatus,
    box_clamp_hook,
    check_acceptance,
    criticality_measure,
    default_hook,
    identity_hook,
    proxdescent_run,
)
from .subproblem import (
    SubproblemResult,
    solve_generic_convex,
    solve_polyhedral,
    solve_regularized,
    solve_scalar_piecewise,
    solve_subproblem,
)

__version__ = "0.1.0"
