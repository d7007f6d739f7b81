"""Brute-force references: grid scans for prox and subproblem solutions,
finite-difference Jacobians.

These are the independent checks every closed-form or iterative solver
in the package is validated against before being trusted.  They stay
deliberately dumb: dense scans, no reuse of any solver code path.
"""
from __future__ import annotations

import numpy as np

from .core import Inf, ProblemInstance, SmoothMap


def grid_prox_1d(h_scalar, y, w, lo=None, hi=None, step=1e-4):
    """Grid argmin of h(z) + (w/2)(z - y)^2 over [lo, hi].

    ``h_scalar`` maps a float to a float.  Defaults cover
    [y - |y| - 10, y + |y| + 10], wide enough for every packaged family.
    Exact value ties resolve to the smallest |z|.
    """
    if lo is None:
        lo = y - abs(y) - 10.0
    if hi is None:
        hi = y + abs(y) + 10.0
    if not (lo < hi and step > 0):
        raise ValueError("need lo < hi and step > 0")
    grid = np.arange(lo, hi + step, step)
    try:  # vectorized callables are scanned in one shot
        hvals = np.asarray(h_scalar(grid), dtype=float)
        if hvals.shape != grid.shape:
            raise TypeError
    except Exception:
        hvals = np.array([float(h_scalar(z)) for z in grid])
    vals = hvals + 0.5 * w * (grid - y) ** 2
    best = np.min(vals)
    ties = grid[vals == best]
    return float(ties[np.argmin(np.abs(ties))])


def _model_on_grid(p, x, mu, pts):
    """h(c(x) + G d) + (mu/2)|d|^2 for each row d of pts."""
    c_x = np.asarray(p.smooth.value(x), dtype=float)
    G = np.asarray(p.smooth.jacobian(x), dtype=float)
    Z = c_x[None, :] + pts @ G.T
    hv = p.outer.eval_batch(Z)
    return hv + 0.5 * mu * np.sum(pts * pts, axis=1)


def grid_subproblem(p: ProblemInstance, x, mu, box_radius=2.0, step=1e-4):
    """Grid minimizer of the proximal linearized model over |d|_inf <= box_radius.

    Returns (d_best, local_minimizers).  In one dimension the scan runs
    directly at ``step`` and the local minimizers are all grid points
    below both neighbours.  In two dimensions a coarse scan is refined
    twice around the incumbent to reach ``step`` resolution; local
    minimizers come from the coarse pass (8-neighbour test).
    """
    x = p.smooth.check_point(x)
    n = p.smooth.dim_in
    if n > 2:
        raise ValueError("grid oracle supports n <= 2 only")

    if n == 1:
        grid = np.arange(-box_radius, box_radius + step, step)
        vals = _model_on_grid(p, x, mu, grid[:, None])
        vals = np.where(np.isfinite(vals), vals, Inf)
        i = int(np.argmin(vals))
        locs = []
        for j in range(len(grid)):
            left = vals[j - 1] if j > 0 else Inf
            right = vals[j + 1] if j + 1 < len(grid) else Inf
            if vals[j] < Inf and vals[j] <= left and vals[j] <= right:
                locs.append(float(grid[j]))
        # merge plateaus to one representative
        merged = []
        for z in locs:
            if not merged or z - merged[-1] > 1.5 * step:
                merged.append(z)
        return np.array([grid[i]]), [np.array([z]) for z in merged]

    coarse = max(step, 2.0 * box_radius / 150.0)
    axis = np.arange(-box_radius, box_radius + coarse, coarse)
    D1, D2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([D1.ravel(), D2.ravel()])
    vals = _model_on_grid(p, x, mu, pts).reshape(D1.shape)
    vals = np.where(np.isfinite(vals), vals, Inf)

    locs = []
    for i in range(vals.shape[0]):
        for j in range(vals.shape[1]):
            v = vals[i, j]
            if v == Inf:
                continue
            nb = vals[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if v <= np.min(nb):
                locs.append(np.array([axis[i], axis[j]]))

    flat = int(np.argmin(vals))
    d = pts[flat].copy()
    width = coarse
    while width > step:
        width = max(step, width / 10.0)
        ax1 = d[0] + np.linspace(-10 * width, 10 * width, 21)
        ax2 = d[1] + np.linspace(-10 * width, 10 * width, 21)
        E1, E2 = np.meshgrid(ax1, ax2, indexing="ij")
        ep = np.column_stack([E1.ravel(), E2.ravel()])
        ev = _model_on_grid(p, x, mu, ep)
        ev = np.where(np.isfinite(ev), ev, Inf)
        d = ep[int(np.argmin(ev))].copy()
        if width == step:
            break
    return d, locs


def fd_jacobian(smooth: SmoothMap, x, h_step=1e-6):
    """Central-difference Jacobian, column by column, with steps scaled
    by 1 + |x_j|."""
    if h_step <= 0:
        raise ValueError("h_step must be positive")
    x = smooth.check_point(x)
    J = np.zeros((smooth.dim_out, smooth.dim_in))
    for j in range(smooth.dim_in):
        h = h_step * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(smooth.value(xp), dtype=float)
                   - np.asarray(smooth.value(xm), dtype=float)) / (2.0 * h)
    return J
