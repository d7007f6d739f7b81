"""Catalog of outer functions with exact proxes and manifold signatures.

Separable penalties (l1, squared l2, Huber, group l2, two nonconvex
regularizers), finite polyhedral max functions, the nuclear norm on
flattened matrices, box indicators, penalty composites for constrained
smooth problems, and general piecewise-quadratic scalar functions.

Each family implements the OuterFunction contract: eval, weighted prox,
subgradient membership test, manifold signature, domain test.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Inf,
    ManifoldSignature,
    NoDescentCandidate,
    OuterFunction,
    ProxPolicy,
    SignatureKind,
    SubproblemTolFail,
    checked_value,
)
from .linalg import jacobi_svd, project_simplex

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# closed-form prox operators


def shrink(y, alpha):
    """Componentwise soft threshold: 0 where |y_i| <= alpha, else move
    y_i toward zero by alpha.  The tie |y_i| = alpha maps to exactly 0."""
    if alpha < 0:
        raise ValueError("threshold must be nonnegative")
    y = np.asarray(y, dtype=float)
    return np.where(np.abs(y) <= alpha, 0.0, y - alpha * np.sign(y))


def group_shrink(y, groups, alpha):
    """Blockwise shrink: each group g is scaled by max(0, 1 - alpha/|y_g|)."""
    if alpha < 0:
        raise ValueError("threshold must be nonnegative")
    y = np.asarray(y, dtype=float)
    z = np.zeros_like(y)
    for g in groups:
        g = list(g)
        ng = math.sqrt(float(np.sum(y[g] ** 2)))
        if ng > alpha:
            z[g] = (1.0 - alpha / ng) * y[g]
    return z


def huber_prox(y, T, w):
    """Componentwise prox of the Huber penalty with transition T, weight w.

    Quadratic branch gives w y/(1+w) when that value stays inside [-T, T];
    otherwise the linear branch gives y - (T/w) sign(y).
    """
    if T <= 0 or w <= 0:
        raise ValueError("need T > 0 and w > 0")
    y = np.asarray(y, dtype=float)
    q = w * y / (1.0 + w)
    return np.where(np.abs(q) <= T, q, y - (T / w) * np.sign(y))


def hinge_prox(y, alpha):
    """Prox of alpha * max(0, z): shift positive values down by alpha,
    clamp the band [0, alpha] to zero, leave negatives alone."""
    y = np.asarray(y, dtype=float)
    return np.where(y > alpha, y - alpha, np.where(y < 0.0, y, 0.0))


def nuclear_prox(Y, w, reg_weight):
    """Singular value thresholding: shrink the singular values of Y by
    reg_weight/w and reconstruct with the same singular vectors."""
    if w <= 0:
        raise ValueError("need w > 0")
    Y = np.asarray(Y, dtype=float)
    thr = reg_weight / w
    if thr == 0.0:
        return Y.copy()
    u, s, v = jacobi_svd(Y)
    s = np.maximum(s - thr, 0.0)
    return (u * s) @ v.T


def polyhedral_signature(z, pieces, tol):
    """Active index set of a finite max of affine pieces at z.

    ``pieces`` is a PolyhedralMax or an iterable of (h_i, beta_i) pairs.
    A piece is active when its value is within tol of the max.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(pieces, PolyhedralMax):
        H, beta = pieces.h_mat, pieces.beta
    else:
        H = np.array([np.asarray(h, dtype=float) for h, _ in pieces])
        beta = np.array([float(b) for _, b in pieces])
    vals = H @ np.asarray(z, dtype=float) + beta
    top = float(np.max(vals))
    active = tuple(int(i) for i in np.nonzero(vals >= top - tol)[0])
    return ManifoldSignature(SignatureKind.ACTIVE_INDEX_SET, active)


def nonconvex_prox(y, kind, w, policy=ProxPolicy.GLOBAL_CANDIDATE):
    """Componentwise prox of a nonconvex separable regularizer.

    Enumerates the closed-form stationary candidates per branch plus the
    kink at zero, then selects per policy (global minimizer, or local
    minimizer nearest the prox center).
    """
    if not isinstance(kind, (MangasarianExp, ZhangPhi)):
        raise TypeError("kind must be MangasarianExp or ZhangPhi")
    z, _ = kind.prox_info(y, w, policy)
    return z


# ---------------------------------------------------------------------------
# scalar solves for the nonconvex families


def _bisect(fun, lo, hi, tol=1e-12):
    # fun(lo) < 0 < fun(hi) assumed
    flo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            return mid
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _select_candidate(cands, y, policy):
    """Select from (z, value, is_local_min) triples; returns (z, tie_flag)."""
    if not cands:
        raise NoDescentCandidate("no prox candidate found; weight too small")
    by_val = sorted(cands, key=lambda c: (c[1], abs(c[0])))
    tie = len(by_val) > 1 and (
        by_val[1][1] - by_val[0][1] <= 1e-12 * (1.0 + abs(by_val[0][1]))
        and abs(by_val[1][0] - by_val[0][0]) > 1e-9
    )
    if policy is ProxPolicy.GLOBAL_CANDIDATE:
        return by_val[0][0], tie
    locs = [c for c in cands if c[2]]
    if not locs:
        raise NoDescentCandidate("no local minimizer among prox candidates")
    best = min(locs, key=lambda c: (abs(c[0] - y), c[1]))
    return best[0], tie


def _mangasarian_prox_1d(y, alpha, w, policy):
    """Minimize (1 - exp(-alpha|z|)) + (w/2)(z - y)^2 over z."""
    if y == 0.0:
        return 0.0, False
    s = 1.0 if y > 0 else -1.0
    t = abs(y)

    def dpos(z):  # derivative of the objective on the branch z > 0
        return alpha * math.exp(-alpha * z) + w * (z - t)

    def value(z):
        return (1.0 - math.exp(-alpha * z)) + 0.5 * w * (z - t) ** 2

    root = None
    d0 = alpha - w * t
    if d0 < 0.0:
        root = _bisect(dpos, 0.0, t)
    elif w < alpha * alpha:
        zstar = math.log(alpha * alpha / w) / alpha
        if 0.0 < zstar < t and dpos(zstar) < 0.0:
            root = _bisect(dpos, zstar, t)
    cands = [(0.0, 0.5 * w * t * t, d0 >= 0.0)]
    if root is not None:
        cands.append((root, value(root), True))
    z, tie = _select_candidate(cands, t, policy)
    return s * z, tie


def _zhang_prox_1d(y, lam, a, w, policy):
    """Minimize phi(z) + (w/2)(z - y)^2 for the three-branch regularizer
    (linear up to lam, concave quadratic up to a*lam, constant beyond)."""
    if y == 0.0:
        return 0.0, False
    s = 1.0 if y > 0 else -1.0
    t = abs(y)
    alam = a * lam
    flat = 0.5 * (a + 1.0) * lam * lam

    def phi(z):
        if z <= lam:
            return lam * z
        if z <= alam:
            return -(z * z - 2.0 * alam * z + lam * lam) / (2.0 * (a - 1.0))
        return flat

    def dphi(z, side):
        # one-sided derivative of phi at z >= 0
        if z < lam or (z == lam and side < 0):
            return lam
        if z < alam or (z == alam and side < 0):
            return (alam - z) / (a - 1.0)
        return 0.0

    def curv(z, side):
        if z < lam or (z == lam and side < 0):
            return 0.0
        if z < alam or (z == alam and side < 0):
            return -1.0 / (a - 1.0)
        return 0.0

    def value(z):
        return phi(z) + 0.5 * w * (z - t) ** 2

    eps = 1e-10 * (1.0 + w + lam)
    cands = []

    def consider(z):
        for zc, _, _ in cands:
            if abs(zc - z) <= 1e-13 * (1.0 + abs(z)):
                return
        if z == 0.0:
            # left side of the reflected objective always decreases into 0
            loc = lam - w * t >= -eps
            cands.append((0.0, value(0.0), loc))
            return
        dl = dphi(z, -1) + w * (z - t)
        dr = dphi(z, +1) + w * (z - t)
        ok = dl <= eps and dr >= -eps
        if ok and abs(dl) <= eps and curv(z, -1) + w < -eps:
            ok = False
        if ok and abs(dr) <= eps and curv(z, +1) + w < -eps:
            ok = False
        cands.append((z, value(z), ok))

    consider(0.0)
    consider(lam)
    consider(alam)
    c1 = t - lam / w
    if 0.0 <= c1 <= lam:
        consider(c1)
    denom = w - 1.0 / (a - 1.0)
    if denom != 0.0:
        c2 = (w * t - alam / (a - 1.0)) / denom
        if lam <= c2 <= alam:
            consider(c2)
    if t >= alam:
        consider(t)
    z, tie = _select_candidate(cands, t, policy)
    return s * z, tie


# ---------------------------------------------------------------------------
# separable convex families


class L1Norm(OuterFunction):
    """Sum of absolute values."""

    def eval(self, z):
        return float(np.sum(np.abs(z)))

    def eval_batch(self, Z):
        return np.sum(np.abs(Z), axis=1)

    def prox(self, y, w):
        return shrink(y, 1.0 / w)

    def subgrad_residual(self, z, v, tol):
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        lo = np.where(z > tol, 1.0, -1.0)
        hi = np.where(z < -tol, -1.0, 1.0)
        return bool(np.all(v >= lo - tol) and np.all(v <= hi + tol))

    def signature(self, z, tol):
        pat = tuple(0 if abs(t) <= tol else (1 if t > 0 else -1) for t in np.asarray(z))
        return ManifoldSignature(SignatureKind.SIGN_PATTERN, pat)


class SquaredL2Norm(OuterFunction):
    """|z|^2, the smooth least-squares outer function."""

    def eval(self, z):
        return float(np.sum(np.asarray(z, dtype=float) ** 2))

    def eval_batch(self, Z):
        return np.sum(Z * Z, axis=1)

    def prox(self, y, w):
        y = np.asarray(y, dtype=float)
        return w * y / (w + 2.0)

    def subgrad_residual(self, z, v, tol):
        g = 2.0 * np.asarray(z, dtype=float)
        return bool(np.max(np.abs(np.asarray(v, dtype=float) - g)) <= tol)

    def signature(self, z, tol):
        return ManifoldSignature(SignatureKind.TRIVIAL)


@dataclass(frozen=True)
class HuberSum(OuterFunction):
    """Sum of scalar Huber penalties with transition T."""

    T: float = 1.0

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")

    def eval(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        return float(np.sum(np.where(z <= self.T, 0.5 * z * z, self.T * z - 0.5 * self.T**2)))

    def eval_batch(self, Z):
        Z = np.abs(Z)
        return np.sum(np.where(Z <= self.T, 0.5 * Z * Z, self.T * Z - 0.5 * self.T**2), axis=1)

    def prox(self, y, w):
        return huber_prox(y, self.T, w)

    def _grad(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) <= self.T, z, self.T * np.sign(z))

    def subgrad_residual(self, z, v, tol):
        return bool(np.max(np.abs(np.asarray(v, dtype=float) - self._grad(z))) <= tol)

    def signature(self, z, tol):
        z = np.asarray(z, dtype=float)
        zones = tuple(0 if abs(t) <= self.T else (1 if t > 0 else -1) for t in z)
        return ManifoldSignature(SignatureKind.HUBER_ZONES, zones)


@dataclass(frozen=True)
class GroupL2Norm(OuterFunction):
    """Sum of Euclidean norms over a partition of the coordinates."""

    groups: tuple

    def __post_init__(self):
        seen = sorted(i for g in self.groups for i in g)
        if seen != list(range(len(seen))):
            raise ValueError("groups must partition the coordinate index set")

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        return float(sum(math.sqrt(float(np.sum(z[list(g)] ** 2))) for g in self.groups))

    def prox(self, y, w):
        return group_shrink(y, self.groups, 1.0 / w)

    def subgrad_residual(self, z, v, tol):
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        for g in self.groups:
            g = list(g)
            ng = math.sqrt(float(np.sum(z[g] ** 2)))
            if ng > tol:
                if np.linalg.norm(v[g] - z[g] / ng) > tol:
                    return False
            elif np.linalg.norm(v[g]) > 1.0 + tol:
                return False
        return True

    def signature(self, z, tol):
        z = np.asarray(z, dtype=float)
        active = tuple(
            gi for gi, g in enumerate(self.groups)
            if math.sqrt(float(np.sum(z[list(g)] ** 2))) > tol
        )
        return ManifoldSignature(SignatureKind.ACTIVE_GROUPS, active)


# ---------------------------------------------------------------------------
# nonconvex separable regularizers


@dataclass(frozen=True)
class MangasarianExp(OuterFunction):
    """sum_i (1 - exp(-alpha |z_i|)): a saturating sparsity penalty,
    nonconvex but sharp at zero."""

    alpha: float
    policy: ProxPolicy = ProxPolicy.GLOBAL_CANDIDATE
    convex = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def eval(self, z):
        return float(np.sum(1.0 - np.exp(-self.alpha * np.abs(np.asarray(z, dtype=float)))))

    def eval_batch(self, Z):
        return np.sum(1.0 - np.exp(-self.alpha * np.abs(Z)), axis=1)

    def prox_info(self, y, w, policy=None):
        policy = policy or self.policy
        y = np.atleast_1d(np.asarray(y, dtype=float))
        z = np.empty_like(y)
        ties = 0
        for i, yi in enumerate(y):
            z[i], tie = _mangasarian_prox_1d(float(yi), self.alpha, w, policy)
            ties += tie
        if ties:
            log.debug("nonconvex prox hit %d candidate ties", ties)
        return z, ties

    def prox(self, y, w, policy=None):
        return self.prox_info(y, w, policy)[0]

    def subgrad_residual(self, z, v, tol):
        a = self.alpha
        for zi, vi in zip(np.asarray(z, dtype=float), np.asarray(v, dtype=float)):
            if abs(zi) <= tol:
                if abs(vi) > a + tol:
                    return False
            elif abs(vi - a * math.exp(-a * abs(zi)) * math.copysign(1.0, zi)) > tol:
                return False
        return True

    def signature(self, z, tol):
        pat = tuple(0 if abs(t) <= tol else (1 if t > 0 else -1) for t in np.asarray(z))
        return ManifoldSignature(SignatureKind.SIGN_PATTERN, pat)


@dataclass(frozen=True)
class ZhangPhi(OuterFunction):
    """Piecewise regularizer: lam|z| near zero, concave quadratic bridge,
    constant (a+1) lam^2 / 2 beyond a*lam."""

    lam: float
    a: float
    policy: ProxPolicy = ProxPolicy.GLOBAL_CANDIDATE
    convex = False

    def __post_init__(self):
        if self.lam <= 0 or self.a <= 1:
            raise ValueError("need lam > 0 and a > 1")

    def _phi(self, t):
        lam, a = self.lam, self.a
        t = np.abs(t)
        mid = -(t * t - 2.0 * a * lam * t + lam * lam) / (2.0 * (a - 1.0))
        return np.where(t <= lam, lam * t, np.where(t <= a * lam, mid, 0.5 * (a + 1.0) * lam * lam))

    def eval(self, z):
        return float(np.sum(self._phi(np.asarray(z, dtype=float))))

    def eval_batch(self, Z):
        return np.sum(self._phi(Z), axis=1)

    def prox_info(self, y, w, policy=None):
        policy = policy or self.policy
        y = np.atleast_1d(np.asarray(y, dtype=float))
        z = np.empty_like(y)
        ties = 0
        for i, yi in enumerate(y):
            z[i], tie = _zhang_prox_1d(float(yi), self.lam, self.a, w, policy)
            ties += tie
        if ties:
            log.debug("nonconvex prox hit %d candidate ties", ties)
        return z, ties

    def prox(self, y, w, policy=None):
        return self.prox_info(y, w, policy)[0]

    def _dphi(self, t):
        lam, a = self.lam, self.a
        at = abs(t)
        if at <= lam:
            g = lam
        elif at <= a * lam:
            g = (a * lam - at) / (a - 1.0)
        else:
            g = 0.0
        return g * math.copysign(1.0, t)

    def subgrad_residual(self, z, v, tol):
        for zi, vi in zip(np.asarray(z, dtype=float), np.asarray(v, dtype=float)):
            if abs(zi) <= tol:
                if abs(vi) > self.lam + tol:
                    return False
            elif abs(vi - self._dphi(zi)) > tol:
                return False
        return True

    def signature(self, z, tol):
        pat = tuple(0 if abs(t) <= tol else (1 if t > 0 else -1) for t in np.asarray(z))
        return ManifoldSignature(SignatureKind.SIGN_PATTERN, pat)


# ---------------------------------------------------------------------------
# polyhedral max functions


@dataclass(frozen=True, eq=False)
class PolyhedralMax(OuterFunction):
    """h(z) = max_i <h_i, z> + beta_i over a finite list of affine pieces."""

    h_mat: np.ndarray
    beta: np.ndarray
    has_closed_prox = False

    def __post_init__(self):
        object.__setattr__(self, "h_mat", np.atleast_2d(np.asarray(self.h_mat, dtype=float)))
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        if self.h_mat.shape[0] != self.beta.shape[0] or self.h_mat.shape[0] < 1:
            raise ValueError("need one offset per piece and at least one piece")

    @property
    def n_pieces(self):
        return self.h_mat.shape[0]

    def eval(self, z):
        return float(np.max(self.h_mat @ np.asarray(z, dtype=float) + self.beta))

    def eval_batch(self, Z):
        return np.max(Z @ self.h_mat.T + self.beta, axis=1)

    def prox(self, y, w, tol_gap=1e-10):
        """Prox by projected gradient ascent on the simplex dual."""
        y = np.asarray(y, dtype=float)
        b = self.h_mat @ y + self.beta
        Q = self.h_mat @ self.h_mat.T / w

        def gap_fn(lam):
            z = y - self.h_mat.T @ lam / w
            primal = self.eval(z) + 0.5 * w * float(np.sum((z - y) ** 2))
            dual = float(b @ lam - 0.5 * lam @ Q @ lam)
            return primal - dual

        lam, _, _ = simplex_qp_ascent(b, Q, gap_fn, tol_gap, 10 * self.n_pieces * 1000)
        return y - self.h_mat.T @ lam / w

    def subgrad_residual(self, z, v, tol):
        vals = self.h_mat @ np.asarray(z, dtype=float) + self.beta
        act = np.nonzero(vals >= np.max(vals) - tol)[0]
        H = self.h_mat[act]
        v = np.asarray(v, dtype=float)
        b = H @ v
        Q = H @ H.T

        def gap_fn(lam):
            return float(np.linalg.norm(H.T @ lam - v))

        lam, dist, _ = simplex_qp_ascent(
            b, Q, gap_fn, tol, 2000 * max(len(act), 1), raise_on_cap=False
        )
        return dist <= tol

    def signature(self, z, tol):
        return polyhedral_signature(z, self, tol)


def simplex_qp_ascent(b, Q, gap_fn, tol_gap, max_iters, check_every=25, raise_on_cap=True):
    """Maximize b'lam - lam'Q lam/2 over the unit simplex by projected
    gradient ascent with exact sort-based projection.

    ``gap_fn(lam)`` supplies the caller's optimality certificate; the
    iteration stops once it is <= tol_gap.  Returns (lam, gap, iters).
    """
    k = b.shape[0]
    if k == 1:
        lam = np.ones(1)
        return lam, gap_fn(lam), 0
    L = float(np.max(np.linalg.eigvalsh(Q))) if Q.size else 0.0
    if L <= 1e-300:
        lam = np.zeros(k)
        lam[int(np.argmax(b))] = 1.0
        return lam, gap_fn(lam), 0
    step = 1.0 / L
    lam = np.full(k, 1.0 / k)
    gap = gap_fn(lam)
    it = 0
    while gap > tol_gap:
        if it >= max_iters:
            if raise_on_cap:
                raise SubproblemTolFail(
                    "simplex QP ascent: gap %.3e > %.3e after %d iterations"
                    % (gap, tol_gap, it)
                )
            break
        for _ in range(check_every):
            lam = project_simplex(lam + step * (b - Q @ lam))
        it += check_every
        gap = gap_fn(lam)
    return lam, gap, it


# ---------------------------------------------------------------------------
# nuclear norm on flattened matrices


@dataclass(frozen=True)
class NuclearNorm(OuterFunction):
    """Sum of singular values of a rows x cols matrix flattened
    column-major into a vector."""

    rows: int
    cols: int

    def _mat(self, z):
        return np.asarray(z, dtype=float).reshape(self.rows, self.cols, order="F")

    def eval(self, z):
        return float(np.sum(jacobi_svd(self._mat(z))[1]))

    def prox(self, y, w):
        return nuclear_prox(self._mat(y), w, 1.0).reshape(-1, order="F")

    def subgrad_residual(self, z, v, tol):
        u, s, vt = jacobi_svd(self._mat(z))
        r = int(np.sum(s > tol))
        Vm = self._mat(v)
        Ur, Vr = u[:, :r], vt[:, :r]
        W = Vm - Ur @ Vr.T
        scale = 1.0 + float(np.linalg.norm(Vm))
        if np.linalg.norm(Ur.T @ W) > tol * scale:
            return False
        if np.linalg.norm(W @ Vr) > tol * scale:
            return False
        smax = jacobi_svd(W)[1]
        return float(smax[0]) <= 1.0 + tol if smax.size else True

    def signature(self, z, tol):
        s = jacobi_svd(self._mat(z))[1]
        return ManifoldSignature(SignatureKind.RANK, (int(np.sum(s > tol)),))


# ---------------------------------------------------------------------------
# indicators and composites


@dataclass(frozen=True, eq=False)
class BoxIndicator(OuterFunction):
    """Indicator of the box lower <= z <= upper (entries may be infinite)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds inconsistent")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def in_domain(self, z):
        z = np.asarray(z, dtype=float)
        return bool(np.all(z >= self.lower) and np.all(z <= self.upper))

    def eval(self, z):
        return 0.0 if self.in_domain(z) else Inf

    def eval_batch(self, Z):
        ok = np.all(Z >= self.lower, axis=1) & np.all(Z <= self.upper, axis=1)
        return np.where(ok, 0.0, Inf)

    def prox(self, y, w):
        return np.clip(np.asarray(y, dtype=float), self.lower, self.upper)

    def subgrad_residual(self, z, v, tol):
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        for zi, vi, lo, hi in zip(z, v, self.lower, self.upper):
            at_lo = zi - lo <= tol
            at_hi = hi - zi <= tol
            if at_lo and at_hi:
                continue
            if at_lo:
                if vi > tol:
                    return False
            elif at_hi:
                if vi < -tol:
                    return False
            elif abs(vi) > tol:
                return False
        return True

    def signature(self, z, tol):
        z = np.asarray(z, dtype=float)
        items = []
        for i, (zi, lo, hi) in enumerate(zip(z, self.lower, self.upper)):
            if zi - lo <= tol:
                items.append((i, -1))
            if hi - zi <= tol:
                items.append((i, +1))
        return ManifoldSignature(SignatureKind.ACTIVE_INDEX_SET, tuple(items))


@dataclass(frozen=True, eq=False)
class PenaltySeparable(OuterFunction):
    """nu * (sum |z_eq| + sum max(0, z_ineq)) + box indicator on the tail.

    The coordinate layout is (equalities, inequalities, variables); used
    as the nonsmooth block of exact-penalty formulations of constrained
    smooth problems.
    """

    nu: float
    n_eq: int
    n_ineq: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, dtype=float)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=float)))

    def _split(self, z):
        z = np.asarray(z, dtype=float)
        j, k = self.n_eq, self.n_eq + self.n_ineq
        return z[:j], z[j:k], z[k:]

    def in_domain(self, z):
        tail = self._split(z)[2]
        return bool(np.all(tail >= self.lower) and np.all(tail <= self.upper))

    def eval(self, z):
        eq, ineq, tail = self._split(z)
        if not (np.all(tail >= self.lower) and np.all(tail <= self.upper)):
            return Inf
        return float(self.nu * (np.sum(np.abs(eq)) + np.sum(np.maximum(ineq, 0.0))))

    def eval_batch(self, Z):
        j, k = self.n_eq, self.n_eq + self.n_ineq
        pen = self.nu * (np.sum(np.abs(Z[:, :j]), axis=1)
                         + np.sum(np.maximum(Z[:, j:k], 0.0), axis=1))
        tail = Z[:, k:]
        ok = np.all(tail >= self.lower, axis=1) & np.all(tail <= self.upper, axis=1)
        return np.where(ok, pen, Inf)

    def prox(self, y, w):
        eq, ineq, tail = self._split(y)
        return np.concatenate([
            shrink(eq, self.nu / w),
            hinge_prox(ineq, self.nu / w),
            np.clip(tail, self.lower, self.upper),
        ])

    def subgrad_residual(self, z, v, tol):
        eq, ineq, tail = self._split(z)
        veq, vineq, vtail = self._split(v)
        nu = self.nu
        for zi, vi in zip(eq, veq):
            if abs(zi) <= tol:
                if abs(vi) > nu + tol:
                    return False
            elif abs(vi - nu * math.copysign(1.0, zi)) > tol:
                return False
        for zi, vi in zip(ineq, vineq):
            if abs(zi) <= tol:
                if vi < -tol or vi > nu + tol:
                    return False
            elif zi > 0 and abs(vi - nu) > tol:
                return False
            elif zi < 0 and abs(vi) > tol:
                return False
        return BoxIndicator(self.lower, self.upper).subgrad_residual(tail, vtail, tol)

    def signature(self, z, tol):
        eq, ineq, tail = self._split(z)
        items = [("e", i) for i, t in enumerate(eq) if abs(t) <= tol]
        items += [("i", i) for i, t in enumerate(ineq) if abs(t) <= tol]
        items += [("i+", i) for i, t in enumerate(ineq) if t > tol]
        box = BoxIndicator(self.lower, self.upper).signature(tail, tol)
        items += [("b", i, s) for i, s in box.data]
        return ManifoldSignature(SignatureKind.ACTIVE_INDEX_SET, tuple(items))


@dataclass(frozen=True, eq=False)
class RegularizedComposite(OuterFunction):
    """h(f, x) = f + reg_weight * reg(x) on the augmented vector (f, x).

    The first coordinate carries the smooth objective value, the tail a
    separable (or nuclear-norm, or indicator) regularizer.
    """

    reg: OuterFunction
    reg_weight: float

    def __post_init__(self):
        if self.reg_weight < 0:
            raise ValueError("reg_weight must be nonnegative")

    @property
    def convex(self):
        return self.reg.convex

    @property
    def has_closed_prox(self):
        return self.reg.has_closed_prox

    def in_domain(self, z):
        return self.reg_weight == 0.0 or self.reg.in_domain(np.asarray(z)[1:])

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        if self.reg_weight == 0.0:
            return float(z[0])
        return checked_value(z[0] + self.reg_weight * self.reg.eval(z[1:]))

    def eval_batch(self, Z):
        Z = np.asarray(Z, dtype=float)
        if self.reg_weight == 0.0:
            return Z[:, 0].copy()
        return Z[:, 0] + self.reg_weight * self.reg.eval_batch(Z[:, 1:])

    def prox(self, y, w, policy=None):
        y = np.asarray(y, dtype=float)
        head = y[0] - 1.0 / w
        if self.reg_weight == 0.0:
            return np.concatenate([[head], y[1:]])
        if isinstance(self.reg, (MangasarianExp, ZhangPhi)):
            tail = self.reg.prox(y[1:], w / self.reg_weight, policy=policy)
        else:
            tail = self.reg.prox(y[1:], w / self.reg_weight)
        return np.concatenate([[head], tail])

    def subgrad_residual(self, z, v, tol):
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        if abs(v[0] - 1.0) > tol:
            return False
        if self.reg_weight == 0.0:
            return bool(np.max(np.abs(v[1:]), initial=0.0) <= tol)
        return self.reg.subgrad_residual(z[1:], v[1:] / self.reg_weight, tol)

    def signature(self, z, tol):
        if self.reg_weight == 0.0:
            return ManifoldSignature(SignatureKind.TRIVIAL)
        return self.reg.signature(np.asarray(z, dtype=float)[1:], tol)


class BoxIndicatorComposite(RegularizedComposite):
    """h(f, x) = f + indicator of the box lower <= x <= upper."""

    def __init__(self, lower, upper):
        super().__init__(reg=BoxIndicator(lower, upper), reg_weight=1.0)

    @property
    def lower(self):
        return self.reg.lower

    @property
    def upper(self):
        return self.reg.upper


class PenaltyComposite(RegularizedComposite):
    """h(f, g, x) = f + nu * (|g_eq|_1 + sum max(0, g_ineq)) + box on x."""

    def __init__(self, nu, n_eq, n_ineq, lower, upper):
        super().__init__(
            reg=PenaltySeparable(nu, n_eq, n_ineq, lower, upper), reg_weight=1.0
        )


# ---------------------------------------------------------------------------
# scalar piecewise-quadratic outer functions


@dataclass(frozen=True, eq=False)
class PiecewiseScalar1D(OuterFunction):
    """Piecewise-quadratic function of one variable.

    Branch i holds on (breaks[i-1], breaks[i]] with quadratic
    coefficients coeffs[i] = (q2, q1, q0); a breakpoint belongs to the
    branch on its left.  Jumps up across a breakpoint are allowed (the
    function stays lower semicontinuous); jumps down are not.
    """

    breaks: tuple
    coeffs: tuple
    is_convex: bool = False
    has_closed_prox = True

    def __post_init__(self):
        if len(self.coeffs) != len(self.breaks) + 1:
            raise ValueError("need one more coefficient triple than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def convex(self):
        return self.is_convex

    def _branch(self, z):
        return int(np.searchsorted(np.asarray(self.breaks), z, side="left"))

    def _value_on(self, i, z):
        q2, q1, q0 = self.coeffs[i]
        return q2 * z * z + q1 * z + q0

    def eval(self, z):
        z = float(np.asarray(z).reshape(()))
        return self._value_on(self._branch(z), z)

    def eval_batch(self, Z):
        Z = np.asarray(Z, dtype=float).reshape(-1)
        idx = np.searchsorted(np.asarray(self.breaks), Z, side="left")
        out = np.empty_like(Z)
        for i in range(len(self.coeffs)):
            m = idx == i
            q2, q1, q0 = self.coeffs[i]
            out[m] = q2 * Z[m] ** 2 + q1 * Z[m] + q0
        return out

    def local_minimizers(self, rho, z0):
        """All local minimizers of h(z) + (rho/2)(z - z0)^2, as
        (z, value) pairs sorted by value.  rho > 0 makes the objective
        coercive, so the enumeration over branches is exhaustive."""
        if rho <= 0:
            raise ValueError("need rho > 0")
        eps = 1e-11 * (1.0 + rho + abs(z0))
        bounds = (-Inf,) + tuple(self.breaks) + (Inf,)
        out = []

        def total(i, z):
            return self._value_on(i, z) + 0.5 * rho * (z - z0) ** 2

        def dtotal(i, z):
            q2, q1, _ = self.coeffs[i]
            return 2.0 * q2 * z + q1 + rho * (z - z0)

        for i, (q2, q1, _) in enumerate(self.coeffs):
            lo, hi = bounds[i], bounds[i + 1]
            A = q2 + 0.5 * rho
            if A > 0:
                zs = -(q1 - rho * z0) / (2.0 * A)
                if lo < zs < hi:
                    out.append((zs, total(i, zs)))
        for i, b in enumerate(self.breaks):
            v_here = total(i, b)
            v_right = total(i + 1, b)
            if v_right < v_here - eps:
                continue  # downward jump: not a local minimizer
            dl = dtotal(i, b)
            ok = dl <= eps and (abs(dl) > eps or self.coeffs[i][0] + 0.5 * rho >= -eps)
            if ok and v_right <= v_here + eps:
                dr = dtotal(i + 1, b)
                ok = dr >= -eps and (
                    abs(dr) > eps or self.coeffs[i + 1][0] + 0.5 * rho >= -eps
                )
            if ok:
                out.append((b, v_here))
        dedup = []
        for z, val in sorted(out, key=lambda t: (t[1], abs(t[0] - z0))):
            if all(abs(z - z2) > 1e-12 * (1.0 + abs(z)) for z2, _ in dedup):
                dedup.append((z, val))
        return dedup

    def prox(self, y, w, policy=None):
        policy = policy or ProxPolicy.GLOBAL_CANDIDATE
        y = float(np.asarray(y).reshape(()))
        mins = self.local_minimizers(w, y)
        if not mins:
            raise NoDescentCandidate("piecewise prox found no local minimizer")
        if policy is ProxPolicy.NEAREST_LOCAL:
            z = min(mins, key=lambda t: (abs(t[0] - y), t[1]))[0]
        else:
            z = mins[0][0]
        return np.array([z])

    def _one_sided(self, z, side):
        i = self._branch(z)
        if side < 0 and z in self.breaks:
            pass
        elif side > 0 and z in self.breaks:
            i += 1
        q2, q1, _ = self.coeffs[i]
        return 2.0 * q2 * z + q1

    def subgrad_residual(self, z, v, tol):
        z = float(np.asarray(z).reshape(()))
        v = float(np.asarray(v).reshape(()))
        near = [b for b in self.breaks if abs(z - b) <= tol]
        if not near:
            i = self._branch(z)
            q2, q1, _ = self.coeffs[i]
            return abs(v - (2.0 * q2 * z + q1)) <= tol
        b = near[0]
        i = self._branch(b)
        sl = self._one_sided(b, -1)
        sr = self._one_sided(b, +1)
        vl = self._value_on(i, b)
        vr = self._value_on(i + 1, b)
        if vr > vl + 1e-12 * (1.0 + abs(vl)):
            return v >= sl - tol  # upward jump to the right: all slopes above sl
        return min(sl, sr) - tol <= v <= max(sl, sr) + tol

    def signature(self, z, tol):
        z = float(np.asarray(z).reshape(()))
        for bi, b in enumerate(self.breaks):
            if abs(z - b) <= tol:
                return ManifoldSignature(SignatureKind.ACTIVE_INDEX_SET, (("kink", bi),))
        return ManifoldSignature(
            SignatureKind.ACTIVE_INDEX_SET, (("branch", self._branch(z)),)
        )


def two_branch_jump():
    """The scalar outer function -z for z <= 0 and 1 + z beyond: continuous
    from the left, with an upward jump at zero.  Its proximal linearized
    subproblem develops two competing local minimizers once mu x > 1."""
    return PiecewiseScalar1D(breaks=(0.0,), coeffs=((0.0, -1.0, 0.0), (0.0, 1.0, 1.0)))


def max_of_quadratics(pieces):
    """Upper envelope of scalar quadratics as a PiecewiseScalar1D.

    ``pieces`` is a sequence of (q2, q1, q0) triples; breakpoints are the
    crossings where the argmax changes.
    """
    pieces = [tuple(float(c) for c in p) for p in pieces]
    roots = []
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            a = pieces[i][0] - pieces[j][0]
            b = pieces[i][1] - pieces[j][1]
            c = pieces[i][2] - pieces[j][2]
            if abs(a) < 1e-14:
                if abs(b) > 1e-14:
                    roots.append(-c / b)
            else:
                disc = b * b - 4 * a * c
                if disc > 0:
                    roots.extend([(-b - math.sqrt(disc)) / (2 * a),
                                  (-b + math.sqrt(disc)) / (2 * a)])
    roots = sorted(set(roots))
    span = max((abs(r) for r in roots), default=1.0) + 1.0

    def argmax_at(z):
        vals = [q2 * z * z + q1 * z + q0 for q2, q1, q0 in pieces]
        return int(np.argmax(vals))

    probes = [-span] + roots + [span]
    mids = [0.5 * (a + b) for a, b in zip(probes, probes[1:])] or [0.0]
    owners = [argmax_at(-span - 1.0)] if not roots else [argmax_at(m) for m in mids]
    breaks, coeffs = [], [pieces[owners[0]]]
    for r, owner in zip(roots, owners[1:]):
        if pieces[owner] != coeffs[-1]:
            breaks.append(r)
            coeffs.append(pieces[owner])
    convex = all(p[0] >= 0 for p in pieces)
    return PiecewiseScalar1D(breaks=tuple(breaks), coeffs=tuple(coeffs), is_convex=convex)
