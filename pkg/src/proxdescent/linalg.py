"""Dense linear-algebra kernels: one-sided Jacobi SVD, simplex projection,
and a power-iteration operator-norm estimate.

Everything here targets desk-scale matrices (a few hundred rows or
columns at most), so simplicity wins over blocking or pivot orderings.
"""
from __future__ import annotations

import math

import numpy as np

from .core import SvdConvergenceError


def jacobi_svd(a, tol=1e-12, max_sweeps=60):
    """Thin SVD of a dense matrix by one-sided Jacobi rotations.

    Columns of the working matrix are orthogonalized pairwise until every
    normalized off-diagonal inner product falls below ``tol``.  Returns
    ``(u, s, v)`` with ``a = u @ diag(s) @ v.T``, ``s`` descending and of
    length min(m, n).  Columns of ``u`` belonging to zero singular values
    are left as zeros (they never enter a reconstruction).

    Raises SvdConvergenceError if ``max_sweeps`` sweeps do not converge.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    m, n = a.shape
    if m < n:
        v, s, u = jacobi_svd(a.T, tol=tol, max_sweeps=max_sweeps)
        return u, s, v

    b = a.copy()
    v = np.eye(n)
    converged = False
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = b[:, i] @ b[:, i]
                beta = b[:, j] @ b[:, j]
                gamma = b[:, i] @ b[:, j]
                denom = math.sqrt(alpha * beta)
                if denom == 0.0 or abs(gamma) <= tol * denom:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                bi = b[:, i].copy()
                b[:, i] = c * bi - s * b[:, j]
                b[:, j] = s * bi + c * b[:, j]
                vi = v[:, i].copy()
                v[:, i] = c * vi - s * v[:, j]
                v[:, j] = s * vi + c * v[:, j]
        if not rotated:
            converged = True
            break
    if not converged:
        raise SvdConvergenceError(
            "one-sided Jacobi SVD did not converge in %d sweeps" % max_sweeps
        )

    sing = np.sqrt(np.sum(b * b, axis=0))
    order = np.argsort(-sing)
    sing = sing[order]
    b = b[:, order]
    v = v[:, order]
    u = np.zeros((m, n))
    scale = sing[0] if sing.size and sing[0] > 0 else 1.0
    for i in range(n):
        if sing[i] > 1e-300 * scale and sing[i] > 0:
            u[:, i] = b[:, i] / sing[i]
    return u, sing, v


def singular_values(a, tol=1e-12, max_sweeps=60):
    return jacobi_svd(a, tol=tol, max_sweeps=max_sweeps)[1]


def project_simplex(u):
    """Exact Euclidean projection onto the unit simplex (sort based)."""
    u = np.asarray(u, dtype=float)
    k = u.size
    srt = np.sort(u)[::-1]
    css = np.cumsum(srt) - 1.0
    idx = np.arange(1, k + 1)
    cond = srt - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(u - theta, 0.0)


def operator_norm_est(g, iters=50):
    """Largest singular value of g, estimated by power iteration on g.T g.

    The start vector is deterministic (ones plus a small ramp, so it is
    never orthogonal to the top eigenvector in practice).
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[1]
    x = np.ones(n) + 1e-3 * np.arange(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = g.T @ (g @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        est = math.sqrt(ny)
        x = y / ny
    return est
