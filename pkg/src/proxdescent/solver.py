"""Adaptive proximal linearized descent.

Each outer iteration solves the proximal linearized subproblem at the
current point, derives a trial point (identity or a projection hook),
and accepts it when the actual objective drop reaches a fraction sigma
of the model-predicted drop and the trial point stays within |d|/2 of
the linearized step.  Acceptance relaxes the proximal parameter mu by
1/tau; rejection tightens it by tau and retries.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    IterateRecord,
    NoDescentCandidate,
    ProblemInstance,
    RestorationFailed,
    SolveConfig,
    composite_eval,
)
from .subproblem import SubproblemResult, solve_subproblem

SIGNATURE_TOL = 1e-6


class SolveStatus(enum.Enum):
    RUNNING = "Running"
    CRITICAL = "Critical"
    MAX_ITERS = "MaxIters"
    SUBPROBLEM_NO_DESCENT = "SubproblemNoDescent"
    MU_OVERFLOW = "MuOverflow"
    RESTORATION_FAIL = "RestorationFail"


@dataclass(frozen=True)
class RestorationHook:
    """Derives the trial point x+ from x + d.  The default is the
    identity; box problems clamp back onto the feasible box, which is an
    exact projection there."""

    restore: Callable[[np.ndarray, np.ndarray, ProblemInstance], np.ndarray]
    name: str = "identity"


def identity_hook():
    return RestorationHook(restore=lambda xpd, d, p: xpd, name="identity")


def box_clamp_hook(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def restore(xpd, d, p):
        return np.clip(xpd, lower, upper)

    return RestorationHook(restore=restore, name="box-clamp")


def default_hook(problem: ProblemInstance):
    if problem.box is not None:
        return box_clamp_hook(*problem.box)
    return identity_hook()


@dataclass
class SolverState:
    """Mutable run state: current iterate, proximal parameter, the trace
    of accepted iterations, and the final stop certificate."""

    k: int
    x: np.ndarray
    obj: float
    mu: float
    trace: list = field(default_factory=list)
    status: SolveStatus = SolveStatus.RUNNING
    crit_measure: float | None = None
    final_subproblem: SubproblemResult | None = None

    @property
    def accepted(self):
        return len(self.trace)


def criticality_measure(d, mu) -> float:
    """mu |d|; equals |grad c(x)' v| at subproblem solutions, so it is a
    computable surrogate for the first-order criticality residual."""
    return mu * float(np.linalg.norm(d))


def check_acceptance(obj_x, obj_xplus, pred, x_plus, x_plus_d, d, sigma) -> bool:
    """Sufficient decrease at fraction sigma of the predicted drop, and
    the restored point no farther than |d|/2 from the linearized step.
    Both inequalities are non-strict."""
    if obj_x - obj_xplus < sigma * pred:
        return False
    return float(np.linalg.norm(np.asarray(x_plus) - np.asarray(x_plus_d))) \
        <= 0.5 * float(np.linalg.norm(d))


def proxdescent_run(problem: ProblemInstance, x0=None, cfg: SolveConfig = None,
                    hook: RestorationHook = None) -> SolverState:
    """Run the adaptive proximal linearized method to termination.

    Stops with status Critical when the subproblem returns no descent
    step (d = 0 or no model decrease) or when mu |d| falls below
    cfg.tol_crit; with MaxIters at the iteration cap; with MuOverflow
    when rejections push mu past cfg.mu_max; with SubproblemNoDescent if
    the nonconvex candidate search keeps failing as mu grows; and with
    RestorationFail when the hook cannot restore a trial point.

    The returned trace holds one record per accepted iteration, and the
    final subproblem certificate (step and multiplier) for the stop.
    """
    cfg = cfg or SolveConfig()
    hook = hook or default_hook(problem)
    x = problem.smooth.check_point(x0 if x0 is not None else problem.x0)
    obj = composite_eval(problem, x)
    if not np.isfinite(obj):
        raise ValueError("objective is not finite at the starting point")

    state = SolverState(k=0, x=x, obj=obj, mu=cfg.mu0)
    mu = cfg.mu0
    for k in range(cfg.max_iters):
        state.k = k
        c_x = np.asarray(problem.smooth.value(x), dtype=float)
        G = np.asarray(problem.smooth.jacobian(x), dtype=float)
        inner_rejections = 0
        accepted = False
        while not accepted:
            try:
                res = solve_subproblem(problem, x, mu, policy=cfg.prox_policy,
                                       c_x=c_x, G=G)
            except NoDescentCandidate:
                inner_rejections += 1
                mu = cfg.tau * mu
                if mu > cfg.mu_max:
                    state.status = SolveStatus.SUBPROBLEM_NO_DESCENT
                    state.mu = mu
                    return state
                continue

            crit = criticality_measure(res.d, mu)
            if not res.descent or np.all(res.d == 0.0) or crit <= cfg.tol_crit:
                state.status = SolveStatus.CRITICAL
                state.crit_measure = crit
                state.final_subproblem = res
                state.mu = mu
                return state

            x_plus_d = x + res.d
            try:
                x_plus = np.asarray(hook.restore(x_plus_d, res.d, problem), dtype=float)
            except RestorationFailed:
                state.status = SolveStatus.RESTORATION_FAIL
                state.crit_measure = crit
                state.final_subproblem = res
                state.mu = mu
                return state

            obj_plus = composite_eval(problem, x_plus)
            pred = obj - res.lin_value
            if check_acceptance(obj, obj_plus, pred, x_plus, x_plus_d, res.d, cfg.sigma):
                sig = problem.outer.signature(c_x + G @ res.d, SIGNATURE_TOL)
                state.trace.append(IterateRecord(
                    k=k,
                    x=x_plus,
                    obj=obj_plus,
                    mu_used=mu,
                    d_norm=float(np.linalg.norm(res.d)),
                    pred_decrease=pred,
                    actual_decrease=obj - obj_plus,
                    crit_measure=crit,
                    signature=sig,
                    inner_rejections=inner_rejections,
                    x_prev=x.copy(),
                    d=res.d.copy(),
                    v=res.v.copy(),
                ))
                x, obj = x_plus, obj_plus
                state.x, state.obj = x, obj
                state.crit_measure = crit
                state.final_subproblem = res
                mu = max(cfg.mu_min, mu / cfg.tau)
                state.mu = mu
                accepted = True
            else:
                inner_rejections += 1
                mu = cfg.tau * mu
                if mu > cfg.mu_max:
                    state.status = SolveStatus.MU_OVERFLOW
                    state.crit_measure = crit
                    state.final_subproblem = res
                    state.mu = mu
                    return state

    state.status = SolveStatus.MAX_ITERS
    state.k = cfg.max_iters
    return state
