"""Packaged problem instances, the instance-file format, and
deterministic generators.

Every generator is pure in (dims, seed).  Instances meant for
identification experiments are built backwards from a planted solution:
the residual/offset data is chosen so the known point satisfies the
criticality inclusion exactly, with strict margins (interior multipliers
on the active pieces, slack at least 10% everywhere else).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import ProblemInstance, SmoothMap
from .linalg import jacobi_svd, singular_values
from .outer import (
    BoxIndicatorComposite,
    GroupL2Norm,
    L1Norm,
    MangasarianExp,
    NuclearNorm,
    PenaltyComposite,
    PolyhedralMax,
    RegularizedComposite,
    ZhangPhi,
    max_of_quadratics,
    two_branch_jump,
)

SCHEMA_VERSION = 1
HEADER = "proxdescent-instance"

FAMILIES = (
    "LeastSquaresL1", "LogisticL1", "GroupSparse", "L1PenaltyNLP",
    "PolyhedralMinimax", "MatrixCompletion", "NonconvexReg", "BoxComposite",
    "Sec62Counterexample", "MaxOfQuadratics",
)

PACKAGED = (
    ("cs_small", "LeastSquaresL1", {"m": 8, "n": 20, "support": 3}, 7),
    ("logit_small", "LogisticL1", {"m": 30, "n": 12}, 3),
    ("group_small", "GroupSparse", {"m": 9, "n": 12, "group_size": 2,
                                    "active_groups": 2}, 11),
    ("l1pen_small", "L1PenaltyNLP", {"n": 4, "n_eq": 1, "n_ineq": 2}, 5),
    ("polymax4", "PolyhedralMinimax", {"m": 5, "n": 3, "pieces": 4}, 1),
    ("matcomp10", "MatrixCompletion", {"rows": 10, "cols": 10, "rank": 2,
                                       "p": 60}, 3),
    ("mang_small", "NonconvexReg", {"n": 10, "kind": "mangasarian"}, 13),
    ("zhang_small", "NonconvexReg", {"n": 10, "kind": "zhang"}, 17),
    ("box_small", "BoxComposite", {"n": 6}, 19),
    ("sec62", "Sec62Counterexample", {}, 0),
    ("maxquad3", "MaxOfQuadratics", {"pieces": 3}, 23),
)


class InstanceFormatError(ValueError):
    pass


def _fmt(v):
    return "%.17g" % float(v)


@dataclass
class InstanceFile:
    """Parsed or generated instance data: named scalars, vectors and
    row-major matrix blocks under a versioned one-line header."""

    name: str
    family: str
    scalars: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    comments: tuple = ()

    def to_text(self):
        if self.family not in FAMILIES:
            raise InstanceFormatError("unknown family %r" % self.family)
        lines = ["%s %d" % (HEADER, SCHEMA_VERSION)]
        lines += ["# " + c for c in self.comments]
        lines.append("name %s" % self.name)
        lines.append("family %s" % self.family)
        for key, v in self.scalars.items():
            lines.append("scalar %s %s" % (key, _fmt(v)))
        for key, v in self.vectors.items():
            v = np.atleast_1d(np.asarray(v, dtype=float))
            lines.append("vector %s %d" % (key, v.size))
            lines.append(" ".join(_fmt(t) for t in v))
        for key, mat in self.matrices.items():
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            lines.append("matrix %s %d %d" % (key, mat.shape[0], mat.shape[1]))
            for row in mat:
                lines.append(" ".join(_fmt(t) for t in row))
        lines.append("end")
        return "\n".join(lines) + "\n"

    def write(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def parse(cls, text):
        lines = text.splitlines()
        pos = 0

        def fail(msg):
            raise InstanceFormatError("line %d: %s" % (pos + 1, msg))

        def next_line():
            nonlocal pos
            while pos < len(lines) and (not lines[pos].strip()
                                        or lines[pos].lstrip().startswith("#")):
                pos += 1
            if pos >= len(lines):
                fail("unexpected end of file")
            line = lines[pos]
            pos += 1
            return line.strip()

        head = next_line().split()
        if len(head) != 2 or head[0] != HEADER:
            fail("missing '%s <version>' header" % HEADER)
        if int(head[1]) != SCHEMA_VERSION:
            fail("schema version %s not supported" % head[1])

        inst = cls(name="", family="")
        while True:
            line = next_line()
            tok = line.split()
            kind = tok[0]
            if kind == "end":
                break
            if kind == "name":
                inst.name = tok[1]
            elif kind == "family":
                if tok[1] not in FAMILIES:
                    fail("field family: unknown value %r" % tok[1])
                inst.family = tok[1]
            elif kind == "scalar":
                if len(tok) != 3:
                    fail("field %s: expected 'scalar <name> <value>'" % tok[1:2])
                try:
                    inst.scalars[tok[1]] = float(tok[2])
                except ValueError:
                    fail("field %s: bad scalar %r" % (tok[1], tok[2]))
            elif kind == "vector":
                if len(tok) != 3:
                    fail("expected 'vector <name> <len>'")
                key, ln = tok[1], int(tok[2])
                vals = next_line().split()
                if len(vals) != ln:
                    fail("field %s: got %d entries, expected %d" % (key, len(vals), ln))
                try:
                    inst.vectors[key] = np.array([float(t) for t in vals])
                except ValueError:
                    fail("field %s: non-numeric entry" % key)
            elif kind == "matrix":
                if len(tok) != 4:
                    fail("expected 'matrix <name> <rows> <cols>'")
                key, r, c = tok[1], int(tok[2]), int(tok[3])
                rows = []
                for _ in range(r):
                    vals = next_line().split()
                    if len(vals) != c:
                        fail("field %s: row has %d entries, expected %d"
                             % (key, len(vals), c))
                    try:
                        rows.append([float(t) for t in vals])
                    except ValueError:
                        fail("field %s: non-numeric entry" % key)
                inst.matrices[key] = np.array(rows).reshape(r, c)
            else:
                fail("unknown directive %r" % kind)
        if not inst.name or not inst.family:
            raise InstanceFormatError("instance is missing name or family")
        return inst

    @classmethod
    def read(cls, path):
        return cls.parse(Path(path).read_text())


# ---------------------------------------------------------------------------
# smooth-map builders


def _identity_tail_map(f, grad, n):
    def value(x):
        return np.concatenate([[f(x)], x])

    def jac(x):
        return np.vstack([np.asarray(grad(x), dtype=float)[None, :], np.eye(n)])

    return SmoothMap(n, n + 1, value, jac)


def _least_squares_parts(A, b):
    def f(x):
        r = A @ x - b
        return 0.5 * float(r @ r)

    def grad(x):
        return A.T @ (A @ x - b)

    return f, grad


def _quadratic_parts(Q, q, f0=0.0):
    def f(x):
        return 0.5 * float(x @ (Q @ x)) + float(q @ x) + f0

    def grad(x):
        return Q @ x + q

    return f, grad


def _logistic_parts(A, labels):
    # f(x) = sum_i log(1 + exp(-y_i a_i'x)); grad f = -A'(y * s(-y (A x)))
    # with s the logistic sigmoid, evaluated stably on both tails.
    def f(x):
        margins = labels * (A @ x)
        return float(np.sum(np.logaddexp(0.0, -margins)))

    def grad(x):
        margins = labels * (A @ x)
        s = np.where(margins >= 0,
                     np.exp(-np.logaddexp(0.0, margins)),
                     1.0 / (1.0 + np.exp(margins)))
        return -A.T @ (labels * s)

    return f, grad


def _scalar_identity_map():
    return SmoothMap(1, 1, lambda x: np.array([x[0]]),
                     lambda x: np.array([[1.0]]))


def _require(inst, kind, key):
    store = {"scalar": inst.scalars, "vector": inst.vectors,
             "matrix": inst.matrices}[kind]
    if key not in store:
        raise InstanceFormatError(
            "instance %s: missing %s field %r" % (inst.name, kind, key))
    return store[key]


def _check_len(inst, key, v, n):
    if np.asarray(v).shape != (n,):
        raise InstanceFormatError(
            "instance %s: field %s has length %d, expected %d"
            % (inst.name, key, np.asarray(v).size, n))
    return np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# per-family problem construction


def build_problem(inst: InstanceFile) -> ProblemInstance:
    """Construct the runnable problem (smooth map closures + outer
    function) from parsed instance data."""
    fam = inst.family
    builder = _BUILDERS.get(fam)
    if builder is None:
        raise InstanceFormatError("unknown family %r" % fam)
    return builder(inst)


def _build_least_squares_l1(inst):
    A = _require(inst, "matrix", "A")
    m, n = A.shape
    b = _check_len(inst, "b", _require(inst, "vector", "b"), m)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    tau = float(_require(inst, "scalar", "reg_weight"))
    f, grad = _least_squares_parts(A, b)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_identity_tail_map(f, grad, n),
        outer=RegularizedComposite(L1Norm(), tau),
        x0=x0, identity_tail=True,
        known_solution=inst.vectors.get("known_solution"),
        known_multiplier=inst.vectors.get("known_multiplier"),
    )


def _build_logistic_l1(inst):
    A = _require(inst, "matrix", "A")
    m, n = A.shape
    labels = _check_len(inst, "labels", _require(inst, "vector", "labels"), m)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    tau = float(_require(inst, "scalar", "reg_weight"))
    f, grad = _logistic_parts(A, labels)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_identity_tail_map(f, grad, n),
        outer=RegularizedComposite(L1Norm(), tau),
        x0=x0, identity_tail=True,
    )


def _build_group_sparse(inst):
    A = _require(inst, "matrix", "A")
    m, n = A.shape
    b = _check_len(inst, "b", _require(inst, "vector", "b"), m)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    member = _check_len(inst, "group_index",
                        _require(inst, "vector", "group_index"), n).astype(int)
    groups = tuple(tuple(int(i) for i in np.nonzero(member == g)[0])
                   for g in range(member.max() + 1))
    tau = float(_require(inst, "scalar", "reg_weight"))
    f, grad = _least_squares_parts(A, b)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_identity_tail_map(f, grad, n),
        outer=RegularizedComposite(GroupL2Norm(groups), tau),
        x0=x0, identity_tail=True,
        known_solution=inst.vectors.get("known_solution"),
        known_multiplier=inst.vectors.get("known_multiplier"),
    )


def _build_l1_penalty_nlp(inst):
    Q = _require(inst, "matrix", "Q")
    n = Q.shape[0]
    q = _check_len(inst, "q", _require(inst, "vector", "q"), n)
    Gc = _require(inst, "matrix", "Gc")
    k = Gc.shape[0]
    r = _check_len(inst, "r", _require(inst, "vector", "r"), k)
    lower = _check_len(inst, "lower", _require(inst, "vector", "lower"), n)
    upper = _check_len(inst, "upper", _require(inst, "vector", "upper"), n)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    nu = float(_require(inst, "scalar", "nu"))
    n_eq = int(_require(inst, "scalar", "n_eq"))
    n_ineq = int(_require(inst, "scalar", "n_ineq"))
    if n_eq + n_ineq != k:
        raise InstanceFormatError(
            "instance %s: field Gc has %d rows but n_eq + n_ineq = %d"
            % (inst.name, k, n_eq + n_ineq))
    f, grad = _quadratic_parts(Q, q)

    def value(x):
        return np.concatenate([[f(x)], Gc @ x + r, x])

    def jac(x):
        return np.vstack([np.asarray(grad(x))[None, :], Gc, np.eye(n)])

    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=SmoothMap(n, 1 + k + n, value, jac),
        outer=PenaltyComposite(nu, n_eq, n_ineq, lower, upper),
        x0=x0, box=(lower, upper),
    )


def _build_polyhedral_minimax(inst):
    H = _require(inst, "matrix", "H")
    p, m = H.shape
    beta = _check_len(inst, "beta", _require(inst, "vector", "beta"), p)
    C = _require(inst, "matrix", "C")
    if C.shape[0] != m:
        raise InstanceFormatError(
            "instance %s: field C has %d rows, expected %d" % (inst.name, C.shape[0], m))
    n = C.shape[1]
    e = _check_len(inst, "e", _require(inst, "vector", "e"), m)
    qv = _check_len(inst, "q_curv", _require(inst, "vector", "q_curv"), m)
    x_ref = _check_len(inst, "x_ref", _require(inst, "vector", "x_ref"), n)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    gamma = float(_require(inst, "scalar", "curvature"))

    def value(x):
        dx = x - x_ref
        return C @ x + e + 0.5 * gamma * float(dx @ dx) * qv

    def jac(x):
        dx = x - x_ref
        return C + gamma * np.outer(qv, dx)

    meta = {}
    if "lambda" in inst.vectors:
        meta["planted_lambda"] = np.asarray(inst.vectors["lambda"], dtype=float)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=SmoothMap(n, m, value, jac),
        outer=PolyhedralMax(H, beta),
        x0=x0,
        known_solution=inst.vectors.get("known_solution"),
        known_multiplier=inst.vectors.get("known_multiplier"),
        meta=meta,
    )


def _build_matrix_completion(inst):
    rows = int(_require(inst, "scalar", "rows"))
    cols = int(_require(inst, "scalar", "cols"))
    Aop = _require(inst, "matrix", "A_op")
    if Aop.shape[1] != rows * cols:
        raise InstanceFormatError(
            "instance %s: field A_op has %d columns, expected rows*cols = %d"
            % (inst.name, Aop.shape[1], rows * cols))
    pdim = Aop.shape[0]
    b = _check_len(inst, "b", _require(inst, "vector", "b"), pdim)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), rows * cols)
    tau = float(_require(inst, "scalar", "reg_weight"))
    f, grad = _least_squares_parts(Aop, b)
    meta = {}
    if "known_rank" in inst.scalars:
        meta["known_rank"] = int(inst.scalars["known_rank"])
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_identity_tail_map(f, grad, rows * cols),
        outer=RegularizedComposite(NuclearNorm(rows, cols), tau),
        x0=x0, identity_tail=True,
        known_solution=inst.vectors.get("known_solution"),
        known_multiplier=inst.vectors.get("known_multiplier"),
        meta=meta,
    )


def _build_nonconvex_reg(inst):
    A = _require(inst, "matrix", "A")
    m, n = A.shape
    b = _check_len(inst, "b", _require(inst, "vector", "b"), m)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    tau = float(_require(inst, "scalar", "reg_weight"))
    if "alpha" in inst.scalars:
        reg = MangasarianExp(float(inst.scalars["alpha"]))
    elif "lam" in inst.scalars:
        reg = ZhangPhi(float(inst.scalars["lam"]), float(_require(inst, "scalar", "a")))
    else:
        raise InstanceFormatError(
            "instance %s: need scalar alpha (saturating-exp) or lam/a" % inst.name)
    f, grad = _least_squares_parts(A, b)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_identity_tail_map(f, grad, n),
        outer=RegularizedComposite(reg, tau),
        x0=x0, identity_tail=True,
        known_solution=inst.vectors.get("known_solution"),
        known_multiplier=inst.vectors.get("known_multiplier"),
    )


def _build_box_composite(inst):
    Q = _require(inst, "matrix", "Q")
    n = Q.shape[0]
    center = _check_len(inst, "center", _require(inst, "vector", "center"), n)
    lower = _check_len(inst, "lower", _require(inst, "vector", "lower"), n)
    upper = _check_len(inst, "upper", _require(inst, "vector", "upper"), n)
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), n)
    f, grad = _quadratic_parts(Q, -Q @ center, 0.5 * float(center @ (Q @ center)))
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_identity_tail_map(f, grad, n),
        outer=BoxIndicatorComposite(lower, upper),
        x0=x0, identity_tail=True, box=(lower, upper),
        known_solution=inst.vectors.get("known_solution"),
        known_multiplier=inst.vectors.get("known_multiplier"),
    )


def _build_sec62(inst):
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), 1)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_scalar_identity_map(),
        outer=two_branch_jump(),
        x0=x0, known_solution=np.zeros(1),
    )


def _build_max_quadratics(inst):
    pieces = _require(inst, "matrix", "pieces")
    x0 = _check_len(inst, "x0", _require(inst, "vector", "x0"), 1)
    return ProblemInstance(
        name=inst.name, family=inst.family,
        smooth=_scalar_identity_map(),
        outer=max_of_quadratics([tuple(row) for row in pieces]),
        x0=x0,
    )


_BUILDERS = {
    "LeastSquaresL1": _build_least_squares_l1,
    "LogisticL1": _build_logistic_l1,
    "GroupSparse": _build_group_sparse,
    "L1PenaltyNLP": _build_l1_penalty_nlp,
    "PolyhedralMinimax": _build_polyhedral_minimax,
    "MatrixCompletion": _build_matrix_completion,
    "NonconvexReg": _build_nonconvex_reg,
    "BoxComposite": _build_box_composite,
    "Sec62Counterexample": _build_sec62,
    "MaxOfQuadratics": _build_max_quadratics,
}


def load_instance(path) -> ProblemInstance:
    """Read and construct an instance file; errors carry the offending
    line or field name."""
    return build_problem(InstanceFile.read(path))


# ---------------------------------------------------------------------------
# deterministic generators


def _check_caps(**dims):
    for key, v in dims.items():
        cap = 50 if key in ("rows", "cols") else 200
        if v > cap:
            raise ValueError("dimension %s=%d exceeds the cap %d" % (key, v, cap))
        if v < 1:
            raise ValueError("dimension %s must be positive" % key)


def generate(family, dims=None, seed=0) -> InstanceFile:
    """Deterministic instance generator; identical (family, dims, seed)
    give byte-identical files."""
    dims = dict(dims or {})
    gen = _GENERATORS.get(family)
    if gen is None:
        raise ValueError("unknown family %r" % family)
    inst = gen(dims, int(seed))
    inst.scalars["seed"] = float(seed)
    return inst


def _gen_least_squares_l1(dims, seed):
    # scales are kept small so the objective's float resolution near the
    # minimizer stays below the 1e-8 criticality stop
    n = int(dims.get("n", 20))
    m = int(dims.get("m", 8))
    s = int(dims.get("support", 3))
    tau = float(dims.get("reg_weight", 0.06))
    a_scale = float(dims.get("a_scale", 0.25))
    _check_caps(n=n, m=m)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        A = rng.normal(size=(m, n)) * (a_scale / math.sqrt(m))
        S = rng.permutation(n)[:s]
        signs = rng.choice([-1.0, 1.0], size=s)
        xbar = np.zeros(n)
        xbar[S] = signs * (0.5 + rng.uniform(0.0, 0.5, size=s))
        As = A[:, S]
        resid = As @ np.linalg.solve(As.T @ As, -tau * signs)
        off = np.delete(A, S, axis=1).T @ resid / tau
        if np.max(np.abs(off)) <= 0.9:
            break
    else:
        raise RuntimeError("could not plant a strict dual certificate")
    b = A @ xbar - resid
    return InstanceFile(
        name="ls_l1_%d" % seed, family="LeastSquaresL1",
        scalars={"reg_weight": tau},
        vectors={"b": b, "x0": np.zeros(n), "known_solution": xbar,
                 "known_multiplier": np.concatenate([[1.0], -A.T @ resid])},
        matrices={"A": A},
    )


def _gen_logistic_l1(dims, seed):
    m = int(dims.get("m", 30))
    n = int(dims.get("n", 12))
    _check_caps(n=n, m=m)
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    w = np.zeros(n)
    w[rng.permutation(n)[:max(2, n // 4)]] = rng.normal(size=max(2, n // 4))
    labels = np.where(A @ w + 0.3 * rng.normal(size=m) >= 0, 1.0, -1.0)
    tau = 0.05 * float(np.max(np.abs(A.T @ labels)))
    return InstanceFile(
        name="logit_%d" % seed, family="LogisticL1",
        scalars={"reg_weight": tau},
        vectors={"labels": labels, "x0": np.zeros(n)},
        matrices={"A": A},
        comments=("f(x) = sum_i log(1 + exp(-y_i a_i'x)); "
                  "grad f = -A'(y * sigmoid(-y*(A x)))",),
    )


def _gen_group_sparse(dims, seed):
    gsize = int(dims.get("group_size", 2))
    n = int(dims.get("n", 12))
    m = int(dims.get("m", 9))
    act = int(dims.get("active_groups", 2))
    tau = float(dims.get("reg_weight", 0.15))
    a_scale = float(dims.get("a_scale", 0.5))
    _check_caps(n=n, m=m)
    if n % gsize:
        raise ValueError("n must be a multiple of group_size")
    ngroups = n // gsize
    member = np.repeat(np.arange(ngroups), gsize).astype(float)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        A = rng.normal(size=(m, n)) * (a_scale / math.sqrt(m))
        gsel = rng.permutation(ngroups)[:act]
        xbar = np.zeros(n)
        idx = []
        for g in gsel:
            cols = np.nonzero(member == g)[0]
            xbar[cols] = rng.normal(size=gsize)
            xbar[cols] *= (1.0 + rng.uniform(0, 1)) / np.linalg.norm(xbar[cols])
            idx.extend(cols)
        idx = np.array(idx)
        units = np.concatenate([xbar[np.nonzero(member == g)[0]]
                                / np.linalg.norm(xbar[np.nonzero(member == g)[0]])
                                for g in gsel])
        M = A[:, idx]
        resid = M @ np.linalg.solve(M.T @ M, -tau * units)
        ok = True
        for g in range(ngroups):
            if g in gsel:
                continue
            cols = np.nonzero(member == g)[0]
            if np.linalg.norm(A[:, cols].T @ resid) > 0.9 * tau:
                ok = False
                break
        if ok:
            break
    else:
        raise RuntimeError("could not plant a strict group certificate")
    b = A @ xbar - resid
    return InstanceFile(
        name="group_%d" % seed, family="GroupSparse",
        scalars={"reg_weight": tau},
        vectors={"b": b, "group_index": member, "x0": np.zeros(n),
                 "known_solution": xbar,
                 "known_multiplier": np.concatenate([[1.0], -A.T @ resid])},
        matrices={"A": A},
    )


def _gen_l1_penalty_nlp(dims, seed):
    n = int(dims.get("n", 4))
    n_eq = int(dims.get("n_eq", 1))
    n_ineq = int(dims.get("n_ineq", 2))
    _check_caps(n=n)
    k = n_eq + n_ineq
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    Q = B @ B.T / n + np.eye(n)
    q = rng.normal(size=n)
    Gc = rng.normal(size=(k, n))
    r = 0.5 * rng.normal(size=k)
    return InstanceFile(
        name="l1pen_%d" % seed, family="L1PenaltyNLP",
        scalars={"nu": 1.0, "n_eq": n_eq, "n_ineq": n_ineq},
        vectors={"q": q, "r": r, "lower": -2.0 * np.ones(n),
                 "upper": 2.0 * np.ones(n), "x0": np.zeros(n)},
        matrices={"Q": Q, "Gc": Gc},
    )


def _gen_polyhedral_minimax(dims, seed):
    """Plant a minimizer whose active manifold has positive dimension:
    the active pieces make the composite sharp across the manifold, and
    the curvature term gives quadratic growth along it, so the iterates
    identify the active set quickly and then contract linearly with a
    gradually converging multiplier."""
    m = int(dims.get("m", 5))
    n = int(dims.get("n", 3))
    p = int(dims.get("pieces", 4))
    na = int(dims.get("active", min(2, p)))
    gamma = float(dims.get("curvature", 0.1))
    h_scale = float(dims.get("h_scale", 0.6))
    x0_dist = float(dims.get("x0_dist", 0.8))
    _check_caps(n=n, m=m)
    rng = np.random.default_rng(seed)
    for _ in range(500):
        H = h_scale * rng.normal(size=(p, m))
        lam_act = 0.5 + rng.uniform(0.0, 0.5, size=na)
        lam_act /= lam_act.sum()
        lam = np.zeros(p)
        lam[:na] = lam_act
        vbar = H[:na].T @ lam_act
        if np.linalg.norm(vbar) < 0.3 * h_scale:
            continue
        C0 = rng.normal(size=(m, n))
        C = C0 - np.outer(vbar, vbar @ C0) / float(vbar @ vbar)
        K = np.vstack([H[:na].T, np.ones(na)])
        if singular_values(K)[-1] < 0.15:
            continue  # multiplier system must be well posed
        qv = rng.normal(size=m)
        qv /= np.linalg.norm(qv)
        mean_h = H[:na].mean(axis=0)
        qv = qv + (0.6 - min(H[:na] @ qv)) / float(mean_h @ mean_h) * mean_h
        qv /= np.linalg.norm(qv)
        if min(H[:na] @ qv) < 0.2 * h_scale:
            continue  # need positive curvature along the manifold
        break
    else:
        raise RuntimeError("could not plant a polyhedral instance")
    xbar = 0.5 * rng.normal(size=n)
    cbar = 0.5 * rng.normal(size=m)
    e = cbar - C @ xbar
    t = rng.uniform(0.5, 1.5)
    beta = t - H @ cbar
    beta[na:] -= 0.3 + rng.uniform(0.0, 0.5, size=p - na)
    step = rng.normal(size=n)
    x0 = xbar + x0_dist * step / np.linalg.norm(step)
    return InstanceFile(
        name="polymax_%d" % seed, family="PolyhedralMinimax",
        scalars={"curvature": gamma, "n_active": na},
        vectors={"beta": beta, "e": e, "q_curv": qv, "x_ref": xbar,
                 "x0": x0, "known_solution": xbar,
                 "known_multiplier": vbar, "lambda": lam},
        matrices={"H": H, "C": C},
    )


def _tangent_projector(Ur, Vr):
    def proj(M):
        UUt = Ur @ (Ur.T @ M)
        return UUt + (M @ Vr) @ Vr.T - UUt @ Vr @ Vr.T
    return proj


def _gen_matrix_completion(dims, seed):
    rows = int(dims.get("rows", 10))
    cols = int(dims.get("cols", 10))
    rank = int(dims.get("rank", 2))
    pdim = int(dims.get("p", 60))
    tau = float(dims.get("reg_weight", 0.1))
    a_scale = float(dims.get("a_scale", 0.3))
    _check_caps(rows=rows, cols=cols)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        L = rng.normal(size=(rows, rank))
        R = rng.normal(size=(cols, rank))
        X = L @ R.T
        X *= 1.5 / np.linalg.norm(X)
        Aop = rng.normal(size=(pdim, rows * cols)) * (a_scale / math.sqrt(pdim))
        u, s, v = jacobi_svd(X)
        Ur, Vr = u[:, :rank], v[:, :rank]
        proj = _tangent_projector(Ur, Vr)
        # tangent-space projector as a matrix acting on column-major vecs
        UU, VV = Ur @ Ur.T, Vr @ Vr.T
        P = (np.kron(np.eye(cols), UU) + np.kron(VV, np.eye(rows))
             - np.kron(VV, UU))
        u0 = (Ur @ Vr.T).reshape(-1, order="F")
        resid = np.linalg.lstsq(P @ Aop.T, -tau * u0, rcond=None)[0]
        N = (-Aop.T @ resid / tau).reshape(rows, cols, order="F")
        if np.linalg.norm(proj(N) - Ur @ Vr.T) > 1e-9:
            continue
        W = N - proj(N)
        if singular_values(W)[0] > 0.9:
            continue
        break
    else:
        raise RuntimeError("could not plant a matrix-completion certificate")
    xvec = X.reshape(-1, order="F")
    b = Aop @ xvec - resid
    return InstanceFile(
        name="matcomp_%d" % seed, family="MatrixCompletion",
        scalars={"rows": rows, "cols": cols, "reg_weight": tau,
                 "known_rank": rank},
        vectors={"b": b, "x0": np.zeros(rows * cols),
                 "known_solution": xvec,
                 "known_multiplier": np.concatenate([[1.0], -Aop.T @ resid])},
        matrices={"A_op": Aop},
    )


def _gen_nonconvex_reg(dims, seed):
    n = int(dims.get("n", 10))
    kind = dims.get("kind", "mangasarian")
    s = int(dims.get("support", 3))
    _check_caps(n=n)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        A = np.eye(n) + 0.1 * rng.normal(size=(n, n))
        if singular_values(A)[-1] < 0.5:
            continue
        S = rng.permutation(n)[:s]
        signs = rng.choice([-1.0, 1.0], size=s)
        xbar = np.zeros(n)
        g = np.zeros(n)
        mask = np.zeros(n, dtype=bool)
        mask[S] = True
        if kind == "mangasarian":
            alpha, tau = 2.0, 0.3
            xbar[S] = signs * (1.2 + rng.uniform(0.0, 0.8, size=s))
            g[S] = -tau * alpha * np.exp(-alpha * np.abs(xbar[S])) * signs
            g[~mask] = rng.uniform(-0.45, 0.45, size=n - s) * tau * alpha
            scalars = {"reg_weight": tau, "alpha": alpha}
        else:
            lam, a, tau = 0.4, 3.0, 0.5
            xbar[S] = signs * (a * lam + 0.6 + rng.uniform(0.0, 0.6, size=s))
            g[~mask] = rng.uniform(-0.45, 0.45, size=n - s) * tau * lam * 2.0
            scalars = {"reg_weight": tau, "lam": lam, "a": a}
        b = A @ xbar - np.linalg.solve(A.T, g)
        break
    else:
        raise RuntimeError("could not plant a nonconvex instance")
    return InstanceFile(
        name="nonconvex_%s_%d" % (kind, seed), family="NonconvexReg",
        scalars=scalars,
        vectors={"b": b, "x0": xbar + 0.3 * rng.normal(size=n),
                 "known_solution": xbar,
                 "known_multiplier": np.concatenate([[1.0], -g])},
        matrices={"A": A},
    )


def _gen_box_composite(dims, seed):
    n = int(dims.get("n", 6))
    _check_caps(n=n)
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    Q = 0.3 * (B @ B.T / n + np.eye(n))
    lower = -np.ones(n)
    upper = np.ones(n)
    xbar = rng.uniform(-0.5, 0.5, size=n)
    xbar[0], xbar[1] = upper[0], lower[1]
    g = np.zeros(n)
    g[0] = -(0.15 + rng.uniform(0.0, 0.15))
    g[1] = +(0.15 + rng.uniform(0.0, 0.15))
    center = xbar - np.linalg.solve(Q, g)
    x0 = rng.uniform(-0.9, 0.9, size=n)
    return InstanceFile(
        name="box_%d" % seed, family="BoxComposite",
        scalars={},
        vectors={"center": center, "lower": lower, "upper": upper, "x0": x0,
                 "known_solution": xbar,
                 "known_multiplier": np.concatenate([[1.0], -g])},
        matrices={"Q": Q},
    )


def _gen_sec62(dims, seed):
    x0 = float(dims.get("x0", 1.0))
    return InstanceFile(
        name="sec62_%d" % seed, family="Sec62Counterexample",
        vectors={"x0": np.array([x0])},
    )


def _gen_max_quadratics(dims, seed):
    p = int(dims.get("pieces", 3))
    rng = np.random.default_rng(seed)
    pieces = []
    for _ in range(p):
        a = rng.uniform(0.3, 1.2)
        vtx = rng.uniform(-1.5, 1.5)
        h = rng.uniform(0.0, 0.5)
        pieces.append([a, -2.0 * a * vtx, a * vtx * vtx + h])
    return InstanceFile(
        name="maxquad_%d" % seed, family="MaxOfQuadratics",
        vectors={"x0": np.array([2.0])},
        matrices={"pieces": np.array(pieces)},
    )


_GENERATORS = {
    "LeastSquaresL1": _gen_least_squares_l1,
    "LogisticL1": _gen_logistic_l1,
    "GroupSparse": _gen_group_sparse,
    "L1PenaltyNLP": _gen_l1_penalty_nlp,
    "PolyhedralMinimax": _gen_polyhedral_minimax,
    "MatrixCompletion": _gen_matrix_completion,
    "NonconvexReg": _gen_nonconvex_reg,
    "BoxComposite": _gen_box_composite,
    "Sec62Counterexample": _gen_sec62,
    "MaxOfQuadratics": _gen_max_quadratics,
}


# ---------------------------------------------------------------------------
# packaged data


def packaged_dir():
    return resources.files("proxdescent") / "data"


def packaged_names():
    return [name for name, _, _, _ in PACKAGED]


def packaged_path(name):
    for entry, _, _, _ in PACKAGED:
        if entry == name:
            return packaged_dir() / ("%s.txt" % name)
    raise KeyError("no packaged instance named %r" % name)


def load_packaged(name) -> ProblemInstance:
    with resources.as_file(packaged_path(name)) as path:
        return load_instance(path)


def write_packaged(outdir):
    """Regenerate the shipped instance files and their manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name, family, dims, seed in PACKAGED:
        inst = generate(family, dims, seed)
        inst.name = name
        inst.write(outdir / ("%s.txt" % name))
        dim_str = ",".join("%s=%s" % (k, v) for k, v in sorted(dims.items()))
        manifest.append("%s %s %s %d %s.txt" % (name, family, dim_str or "-", seed, name))
    (outdir / "manifest.txt").write_text("\n".join(manifest) + "\n")
