"""Solvers for the proximal linearized subproblem

    min_d  h(c(x) + G d) + (mu/2)|d|^2,   G = grad c(x),

exact for separable regularized and polyhedral outer functions, to
tolerance for generic convex ones, and by exhaustive branch enumeration
for scalar piecewise outers.  Every result carries the multiplier v with
G'v + mu d = 0 and v in dh(c(x) + G d), plus a solver certificate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Inf,
    ProblemInstance,
    ProxPolicy,
    SubproblemTolFail,
    checked_value,
)
from .linalg import operator_norm_est
from .outer import (
    MangasarianExp,
    PiecewiseScalar1D,
    PolyhedralMax,
    RegularizedComposite,
    ZhangPhi,
    simplex_qp_ascent,
)

GENERIC_TOL_GAP = 1e-11  # PDHG stopping target; keeps stationarity well below 1e-8
GENERIC_MAX_ITERS = 50000


@dataclass(frozen=True, eq=False)
class SubproblemResult:
    """Step d, multiplier v, the linearized value h(c + G d), the full
    model value, and solver diagnostics (gap certificate, iteration
    count, nonconvex candidate ties)."""

    d: np.ndarray
    v: np.ndarray
    lin_value: float
    model_value: float
    descent: bool
    gap: float = 0.0
    iterations: int = 0
    ties: int = 0


def solve_regularized(f_val, grad_f, x, reg, reg_weight, mu, policy=None):
    """Closed-form step for h(f, x) = f + reg_weight * reg(x) with the
    identity-tail map c(x) = (f(x), x).

    The change of variables z = x + d turns the model into a pure prox:
    z minimizes reg_weight * reg(z) + (mu/2)|z - y|^2 at y = x - grad_f/mu.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    grad_f = np.atleast_1d(np.asarray(grad_f, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = x - grad_f / mu
    ties = 0
    if reg_weight == 0.0:
        z = y
    elif isinstance(reg, (MangasarianExp, ZhangPhi)):
        z, ties = reg.prox_info(y, mu / reg_weight, policy)
    else:
        z = reg.prox(y, mu / reg_weight)
    d = z - x
    v = np.concatenate([[1.0], -mu * d - grad_f])
    reg_of = lambda t: reg_weight * reg.eval(t) if reg_weight else 0.0
    lin = checked_value(f_val + float(grad_f @ d) + reg_of(z))
    model = lin + 0.5 * mu * float(d @ d)
    h0 = checked_value(f_val + reg_of(x))
    return SubproblemResult(
        d=d, v=v, lin_value=lin, model_value=model, descent=model < h0, ties=ties
    )


def solve_polyhedral(c_x, G, pieces, mu, tol_gap=1e-10):
    """Dual solve for polyhedral h(z) = max_i <h_i, z> + beta_i.

    Maximizes the concave dual q(lam) = lam'b - |G'H'lam|^2 / (2 mu) over
    the unit simplex by projected gradient ascent with exact projection;
    the step is recovered as d = -G'v/mu with v = H'lam, so stationarity
    holds by construction and the duality gap certifies optimality.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    h = pieces if isinstance(pieces, PolyhedralMax) else PolyhedralMax(
        np.array([np.asarray(hi, dtype=float) for hi, _ in pieces]),
        np.array([float(bi) for _, bi in pieces]),
    )
    c_x = np.atleast_1d(np.asarray(c_x, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    H, beta = h.h_mat, h.beta
    b = H @ c_x + beta
    A = H @ G
    Q = A @ A.T / mu

    def recover(lam):
        v = H.T @ lam
        d = -(G.T @ v) / mu
        return v, d

    def gap_fn(lam):
        v, d = recover(lam)
        primal = float(np.max(H @ (c_x + G @ d) + beta)) + 0.5 * mu * float(d @ d)
        dual = float(b @ lam - 0.5 * lam @ Q @ lam)
        return primal - dual

    lam, gap, iters = simplex_qp_ascent(b, Q, gap_fn, tol_gap, 10 * h.n_pieces * 1000)
    v, d = recover(lam)
    lin = float(np.max(H @ (c_x + G @ d) + beta))
    model = lin + 0.5 * mu * float(d @ d)
    return SubproblemResult(
        d=d, v=v, lin_value=lin, model_value=model,
        descent=model < float(np.max(b)), gap=gap, iterations=iters,
    )


def solve_generic_convex(c_x, G, h, mu, tol_gap=GENERIC_TOL_GAP,
                         max_iters=GENERIC_MAX_ITERS):
    """Primal-dual hybrid-gradient iteration for any convex h with a prox.

    The dual prox comes from h's prox by the Moreau identity; step sizes
    satisfy s_p * s_d * |G|^2 < 1 with |G| estimated by 50 power
    iterations.  Stops when both the stationarity residual |mu d + G'v|
    and the dual-point mismatch |z~ - (c_x + G d)| fall below tol_gap at
    their natural scales; the reported gap is the larger scaled
    residual.  The strong convexity of the quadratic term makes the
    plain overrelaxed iteration converge linearly on the piecewise
    problems packaged here.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if not h.convex:
        raise ValueError("generic path requires a convex outer function")
    c_x = np.atleast_1d(np.asarray(c_x, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    m, n = G.shape
    gnorm = operator_norm_est(G, iters=50) * 1.05
    if gnorm > 0:
        s_p = s_d = 0.95 / gnorm
    else:
        s_p = s_d = 1.0

    d = np.zeros(n)
    dbar = d.copy()
    v = np.zeros(m)
    z_tilde = c_x.copy()
    scale_z = 1.0 + float(np.linalg.norm(c_x))
    gap = Inf
    it = 0
    while it < max_iters:
        it += 1
        u_in = v + s_d * (G @ dbar)
        z_tilde = h.prox(c_x + u_in / s_d, s_d)
        v_new = u_in + s_d * (c_x - z_tilde)
        d_new = (d - s_p * (G.T @ v_new)) / (1.0 + s_p * mu)

        r_stat = float(np.linalg.norm(mu * d_new + G.T @ v_new))
        r_feas = float(np.linalg.norm(z_tilde - (c_x + G @ d_new)))
        nd = float(np.linalg.norm(d_new))
        gap = max(r_stat / (1.0 + mu * nd), r_feas / scale_z)

        dbar = 2.0 * d_new - d
        d, v = d_new, v_new
        if gap <= tol_gap:
            break
    else:
        raise SubproblemTolFail(
            "primal-dual iteration: residual %.3e > %.3e after %d iterations"
            % (gap, tol_gap, max_iters)
        )

    z = c_x + G @ d
    lin = h.eval(z)
    if lin == Inf:
        # d is only tol-feasible for extended-valued h; the dual prox
        # point z_tilde is in dom h and within r_feas of z
        lin = h.eval(z_tilde)
    lin = checked_value(lin)
    model = lin + 0.5 * mu * float(d @ d)
    h0 = h.eval(c_x)
    return SubproblemResult(
        d=d, v=v, lin_value=lin, model_value=model, descent=model < h0,
        gap=gap, iterations=it,
    )


def solve_scalar_piecewise(c_x, G, h, mu):
    """All local minimizers of the scalar model h(c_x + G d) + (mu/2)d^2.

    Enumerates the piecewise-quadratic branches exactly and returns one
    SubproblemResult per local minimizer, ordered by model value; the
    first entry is the global minimizer.
    """
    if not isinstance(h, PiecewiseScalar1D):
        raise TypeError("scalar solver needs a PiecewiseScalar1D outer")
    c_x = float(np.asarray(c_x).reshape(()))
    G = float(np.asarray(G).reshape(()))
    if G == 0.0:
        raise ValueError("scalar solver requires a nonzero derivative")
    if mu <= 0:
        raise ValueError("mu must be positive")
    rho = mu / (G * G)
    h0 = h.eval(c_x)
    out = []
    for z, val in h.local_minimizers(rho, c_x):
        d = (z - c_x) / G
        out.append(SubproblemResult(
            d=np.array([d]),
            v=np.array([-mu * d / G]),
            lin_value=val - 0.5 * mu * d * d,
            model_value=val,
            descent=val < h0,
            iterations=len(h.coeffs),
        ))
    return out


def solve_subproblem(problem: ProblemInstance, x, mu,
                     policy=ProxPolicy.GLOBAL_CANDIDATE,
                     tol_gap=1e-10, c_x=None, G=None):
    """Dispatch to the best solver for the instance's outer function:
    closed form for identity-tail regularized composites, the simplex
    dual for polyhedral max functions, branch enumeration for scalar
    piecewise outers, and the primal-dual iteration for everything
    convex with a prox."""
    x = problem.smooth.check_point(x)
    if c_x is None:
        c_x = np.asarray(problem.smooth.value(x), dtype=float)
    if G is None:
        G = np.asarray(problem.smooth.jacobian(x), dtype=float)
    outer = problem.outer

    if isinstance(outer, RegularizedComposite) and problem.identity_tail:
        return solve_regularized(
            float(c_x[0]), G[0], x, outer.reg, outer.reg_weight, mu, policy
        )
    if isinstance(outer, PolyhedralMax):
        return solve_polyhedral(c_x, G, outer, mu, tol_gap=tol_gap)
    if isinstance(outer, PiecewiseScalar1D) and problem.smooth.dim_in == 1:
        results = solve_scalar_piecewise(c_x[0], G[0, 0], outer, mu)
        if policy is ProxPolicy.NEAREST_LOCAL:
            descending = [r for r in results if r.descent]
            if descending:
                return min(descending, key=lambda r: abs(float(r.d[0])))
        return results[0]
    if outer.convex and outer.has_closed_prox:
        return solve_generic_convex(c_x, G, outer, mu, tol_gap=max(tol_gap, GENERIC_TOL_GAP))
    raise ValueError("no subproblem solver available for %s" % type(outer).__name__)
