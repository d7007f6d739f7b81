"""Shared contracts for composite minimization of h(c(x)).

The objective is the composition of a smooth inner map ``c: R^n -> R^m``
with a structured nonsmooth outer function ``h: R^m -> (-inf, +inf]``.
Objective values are plain floats; ``+inf`` marks points outside
``dom h``.  ``-inf`` and NaN are rejected wherever they could enter,
since every supported outer function is bounded below near its iterates.
"""
from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Inf = math.inf


class SubproblemTolFail(RuntimeError):
    """Iterative subproblem solver hit its iteration cap before the requested gap."""


class NoDescentCandidate(RuntimeError):
    """Candidate enumeration for a nonconvex prox found no usable minimizer."""


class RestorationFailed(RuntimeError):
    """A restoration hook could not produce a feasible point."""


class SvdConvergenceError(RuntimeError):
    """Jacobi SVD sweep cap reached before off-diagonal convergence."""


def checked_value(v):
    """Validate an extended-real objective value: finite or +inf only."""
    v = float(v)
    if math.isnan(v) or v == -Inf:
        raise ValueError("objective value must be finite or +inf, got %r" % v)
    return v


@dataclass(frozen=True)
class SmoothMap:
    """Smooth inner map c: R^n -> R^m together with its Jacobian.

    ``value`` and ``jacobian`` must be deterministic; the Jacobian is a
    dense (m, n) array.  Problem dimensions are desk scale, so no
    sparsity is exploited anywhere.
    """

    dim_in: int
    dim_out: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.dim_in < 1 or self.dim_out < 1:
            raise ValueError("map dimensions must be >= 1")

    def check_point(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim_in,):
            raise ValueError(
                "expected point of length %d, got shape %s" % (self.dim_in, x.shape)
            )
        return x


class SignatureKind(enum.Enum):
    SIGN_PATTERN = "sign"
    ACTIVE_INDEX_SET = "active"
    RANK = "rank"
    ACTIVE_GROUPS = "groups"
    HUBER_ZONES = "zones"
    TRIVIAL = "trivial"


@dataclass(frozen=True)
class ManifoldSignature:
    """Discrete descriptor of the active manifold at a point.

    ``data`` is a hashable, family-specific payload (sign tuple, sorted
    index tuple, integer rank, ...).  Equality is exact.
    """

    kind: SignatureKind
    data: tuple = ()

    def __str__(self):
        if self.kind is SignatureKind.TRIVIAL:
            return "-"
        if self.kind is SignatureKind.SIGN_PATTERN:
            return "s:" + "".join({-1: "-", 0: "0", 1: "+"}[t] for t in self.data)
        if self.kind is SignatureKind.HUBER_ZONES:
            return "z:" + "".join({-1: "-", 0: "q", 1: "+"}[t] for t in self.data)
        if self.kind is SignatureKind.RANK:
            return "r:%d" % self.data[0]
        if self.kind is SignatureKind.ACTIVE_GROUPS:
            return "g:" + ";".join(str(i) for i in self.data)
        return "a:" + ";".join(_fmt_sig_item(t) for t in self.data)


def _fmt_sig_item(t):
    if isinstance(t, tuple):
        return "(" + "|".join(_fmt_sig_item(u) for u in t) + ")"
    return str(t)


class OuterFunction(ABC):
    """Structured outer function h: R^m -> (-inf, +inf].

    Implementations supply evaluation, a weighted prox, a subgradient
    membership test, an active-manifold signature, and a domain test.
    All implementations are immutable and reentrant.
    """

    has_closed_prox: bool = True
    convex: bool = True

    @abstractmethod
    def eval(self, z) -> float:
        """h(z) as a float, +inf outside dom h."""

    def eval_batch(self, Z) -> np.ndarray:
        """h applied to each row of Z; subclasses override with vector code."""
        return np.array([self.eval(z) for z in np.asarray(Z, dtype=float)])

    @abstractmethod
    def prox(self, y, w) -> np.ndarray:
        """argmin_z h(z) + (w/2)|z - y|^2 for weight w > 0.

        For nonconvex families the candidate selected by the instance's
        prox policy is returned.
        """

    @abstractmethod
    def subgrad_residual(self, z, v, tol) -> bool:
        """Test v in dh(z) up to tol (tol also resolves zone membership)."""

    @abstractmethod
    def signature(self, z, tol) -> ManifoldSignature:
        """Discrete active-manifold signature of z at tolerance tol."""

    def in_domain(self, z) -> bool:
        return True


class ProxPolicy(enum.Enum):
    """Candidate selection for nonconvex separable proxes.

    GLOBAL_CANDIDATE picks the global minimizer among the closed-form
    stationary candidates; NEAREST_LOCAL picks the local minimizer
    nearest the prox center.  The two genuinely differ once the prox
    objective develops several local minimizers.
    """

    GLOBAL_CANDIDATE = "global"
    NEAREST_LOCAL = "nearest"


@dataclass(frozen=True)
class SolveConfig:
    """Outer-loop constants: mu scaling tau > 1, sufficient-decrease
    fraction sigma in (0,1), mu bracket, stopping tolerance on mu|d|,
    and the prox policy for nonconvex families.

    ``seed`` is reserved for randomized subroutines; the packaged
    solvers are deterministic and ignore it.
    """

    tau: float = 5.0
    sigma: float = 0.1
    mu_min: float = 1e-6
    mu0: float = 1.0
    mu_max: float = 1e12
    tol_crit: float = 1e-8
    max_iters: int = 10000
    prox_policy: ProxPolicy = ProxPolicy.GLOBAL_CANDIDATE
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 1:
            raise ValueError("tau must be > 1")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 < self.mu_min <= self.mu0 <= self.mu_max:
            raise ValueError("need 0 < mu_min <= mu0 <= mu_max")
        if not self.tol_crit > 0:
            raise ValueError("tol_crit must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True, eq=False)
class IterateRecord:
    """One accepted outer iteration.

    ``x`` is the accepted iterate x_{k+1} and ``obj`` its objective;
    ``x_prev``, ``d`` and ``v`` keep enough of the subproblem to rebuild
    the linearized point c(x_k) + J(x_k) d_k and its multiplier after
    the run.
    """

    k: int
    x: np.ndarray
    obj: float
    mu_used: float
    d_norm: float
    pred_decrease: float
    actual_decrease: float
    crit_measure: float
    signature: ManifoldSignature
    inner_rejections: int
    x_prev: np.ndarray
    d: np.ndarray
    v: np.ndarray


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A smooth inner map paired with an outer function.

    ``identity_tail`` marks maps of the form c(x) = (f(x), x), which is
    what the closed-form regularized subproblem path requires.  ``box``
    carries bound constraints on x for families whose outer function
    contains a box indicator; the solver's default restoration clamps
    to it.
    """

    name: str
    family: str
    smooth: SmoothMap
    outer: OuterFunction
    x0: np.ndarray
    identity_tail: bool = False
    box: tuple | None = None
    known_solution: np.ndarray | None = None
    known_multiplier: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.smooth.dim_in


def composite_eval(p: ProblemInstance, x) -> float:
    """h(c(x)); +inf iff c(x) lies outside dom h."""
    x = p.smooth.check_point(x)
    z = np.asarray(p.smooth.value(x), dtype=float)
    if z.shape != (p.smooth.dim_out,):
        raise ValueError("smooth map returned shape %s, expected (%d,)"
                         % (z.shape, p.smooth.dim_out))
    if not p.outer.in_domain(z):
        return Inf
    return checked_value(p.outer.eval(z))


def linearized_eval(p: ProblemInstance, x, d) -> float:
    """h(c(x) + grad c(x) d), the inner term of the proximal linearized model."""
    x = p.smooth.check_point(x)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape != (p.smooth.dim_in,):
        raise ValueError("step has shape %s, expected (%d,)" % (d.shape, p.smooth.dim_in))
    z = np.asarray(p.smooth.value(x), dtype=float) + np.asarray(p.smooth.jacobian(x), dtype=float) @ d
    if not p.outer.in_domain(z):
        return Inf
    return checked_value(p.outer.eval(z))
