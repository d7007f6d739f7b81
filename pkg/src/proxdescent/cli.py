"""Command-line entry point: solve packaged or user instance files, and
run the oracle conformance suites.

``solve`` writes a trace CSV (one row per accepted iteration) and an
identification report next to the summary it prints.  ``check`` runs the
prox/subproblem/jacobian oracle-equivalence suites and reports a
pass/fail table.  All floating output uses 17 significant digits.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import problems
from .core import ProblemInstance, ProxPolicy, SmoothMap, SolveConfig, SubproblemTolFail
from .identify import build_report, format_report
from .linalg import jacobi_svd
from .oracle import fd_jacobian, grid_prox_1d, grid_subproblem
from .outer import (
    GroupL2Norm,
    HuberSum,
    L1Norm,
    MangasarianExp,
    PolyhedralMax,
    RegularizedComposite,
    SquaredL2Norm,
    ZhangPhi,
    nuclear_prox,
    shrink,
)
from .solver import SolveStatus, proxdescent_run
from .subproblem import (
    solve_generic_convex,
    solve_polyhedral,
    solve_regularized,
    solve_subproblem,
)

TRACE_COLUMNS = ("k", "obj", "mu", "d_norm", "pred_decrease",
                 "actual_decrease", "crit_measure", "signature",
                 "inner_rejections")

_EXIT_BY_STATUS = {
    SolveStatus.CRITICAL: 0,
    SolveStatus.MAX_ITERS: 2,
    SolveStatus.MU_OVERFLOW: 3,
    SolveStatus.SUBPROBLEM_NO_DESCENT: 3,
    SolveStatus.RESTORATION_FAIL: 3,
}


def write_trace_csv(trace, path):
    rows = [",".join(TRACE_COLUMNS)]
    for r in trace:
        rows.append(",".join([
            "%d" % r.k,
            "%.17g" % r.obj,
            "%.17g" % r.mu_used,
            "%.17g" % r.d_norm,
            "%.17g" % r.pred_decrease,
            "%.17g" % r.actual_decrease,
            "%.17g" % r.crit_measure,
            str(r.signature),
            "%d" % r.inner_rejections,
        ]))
    Path(path).write_text("\n".join(rows) + "\n")


def cmd_solve(args) -> int:
    try:
        problem = problems.load_instance(args.instance)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    cfg = SolveConfig(
        tau=args.tau, sigma=args.sigma, mu_min=args.mu_min, mu0=args.mu0,
        mu_max=args.mu_max, tol_crit=args.tol, max_iters=args.max_iters,
        prox_policy=(ProxPolicy.NEAREST_LOCAL if args.policy == "nearest"
                     else ProxPolicy.GLOBAL_CANDIDATE),
    )
    try:
        state = proxdescent_run(problem, cfg=cfg)
    except SubproblemTolFail as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3

    stem = Path(args.instance).stem
    trace_path = args.trace_out or ("%s.trace.csv" % stem)
    report_path = args.report_out or ("%s.report.txt" % stem)
    write_trace_csv(state.trace, trace_path)

    stabilized = None
    if state.trace:
        report = build_report(state.trace, problem)
        Path(report_path).write_text(format_report(report, state))
        stabilized = report.stabilized_at
    else:
        Path(report_path).write_text(
            "status %s\niterations 0\nfinal_obj %.17g\ncrit_measure %s\n"
            % (state.status.value, state.obj,
               "%.17g" % state.crit_measure if state.crit_measure is not None else "none"))

    print("status %s" % state.status.value)
    print("iterations %d" % state.accepted)
    print("final_obj %.17g" % state.obj)
    print("crit_measure %s" % ("%.17g" % state.crit_measure
                               if state.crit_measure is not None else "none"))
    print("stabilized_at %s" % (stabilized if stabilized is not None else "none"))
    print("trace %s" % trace_path)
    print("report %s" % report_path)
    return _EXIT_BY_STATUS[state.status]


# ---------------------------------------------------------------------------
# oracle-equivalence suites


def _prox_suite(seed=12345):
    cases = [
        ("l1", L1Norm(), abs),
        ("huber T=1", HuberSum(1.0),
         lambda z: 0.5 * z * z if abs(z) <= 1 else abs(z) - 0.5),
        ("group-l2 size-1", GroupL2Norm(((0,),)), abs),
        ("squared-l2", SquaredL2Norm(), lambda z: z * z),
        ("saturating-exp a=2", MangasarianExp(2.0),
         lambda z: 1.0 - np.exp(-2.0 * abs(z))),
        ("three-branch lam=1 a=3", ZhangPhi(1.0, 3.0),
         lambda z: ZhangPhi(1.0, 3.0).eval([z])),
    ]
    rng = np.random.default_rng(seed)
    results = []
    for label, fam, h_scalar in cases:
        worst = 0.0
        for _ in range(100):
            y = float(rng.uniform(-5, 5))
            w = float(rng.uniform(0.2, 5.0))
            z = float(fam.prox(np.array([y]), w)[0])
            z_ref = grid_prox_1d(h_scalar, y, w, step=1e-4)
            worst = max(worst, abs(z - z_ref))
        results.append(("prox %s" % label, worst <= 2e-4, "max dev %.2e" % worst))

    worst = 0.0
    for _ in range(20):
        diag = rng.uniform(-3, 3, size=5)
        w = float(rng.uniform(0.5, 4.0))
        tau = float(rng.uniform(0.2, 2.0))
        Z = nuclear_prox(np.diag(diag), w, tau)
        ref = np.diag(shrink(diag, tau / w))
        worst = max(worst, float(np.max(np.abs(Z - ref))))
    results.append(("prox nuclear diag-5x5", worst <= 1e-10, "max dev %.2e" % worst))
    return results


def _linear_tail_problem(g, x, reg, tau):
    """Identity-tail instance with linear smooth part f(x) = g'x."""
    n = g.size

    def value(xx):
        return np.concatenate([[float(g @ xx)], xx])

    def jac(xx):
        return np.vstack([g[None, :], np.eye(n)])

    return ProblemInstance(
        name="check", family="LeastSquaresL1",
        smooth=SmoothMap(n, n + 1, value, jac),
        outer=RegularizedComposite(reg, tau),
        x0=x, identity_tail=True,
    )


def _generic_problem(c0, G, outer):
    m, n = G.shape

    def value(xx):
        return c0 + G @ xx

    def jac(xx):
        return G

    return ProblemInstance(name="check", family="PolyhedralMinimax",
                           smooth=SmoothMap(n, m, value, jac),
                           outer=outer, x0=np.zeros(n))


def _subproblem_suite(seed=991):
    rng = np.random.default_rng(seed)
    results = []
    tol_d = 2e-4
    regs = [L1Norm(), HuberSum(1.0), SquaredL2Norm()]

    worst_d, worst_r = 0.0, 0.0
    for i in range(25):
        n = 1 + i % 2
        g = rng.uniform(-1.5, 1.5, size=n)
        x = rng.uniform(-1.0, 1.0, size=n)
        tau = float(rng.uniform(0.3, 1.5))
        mu = float(rng.uniform(0.5, 4.0))
        reg = regs[i % 3]
        p = _linear_tail_problem(g, x, reg, tau)
        res = solve_regularized(float(g @ x), g, x, reg, tau, mu)
        d_ref, _ = grid_subproblem(p, x, mu, box_radius=6.0, step=1e-4)
        worst_d = max(worst_d, float(np.max(np.abs(res.d - d_ref))))
        G = np.vstack([g[None, :], np.eye(n)])
        r = np.linalg.norm(G.T @ res.v + mu * res.d)
        worst_r = max(worst_r, r / (1.0 + mu * np.linalg.norm(res.d)))
    results.append(("subproblem regularized", worst_d <= tol_d and worst_r <= 1e-8,
                    "max dev %.2e resid %.2e" % (worst_d, worst_r)))

    worst_d, worst_r = 0.0, 0.0
    for i in range(25):
        n = 1 + i % 2
        m = 1 + (i // 2) % 2
        H = rng.uniform(-1.5, 1.5, size=(3, m))
        beta = rng.uniform(-1.0, 1.0, size=3)
        c0 = rng.uniform(-1.0, 1.0, size=m)
        G = rng.uniform(-1.5, 1.5, size=(m, n))
        mu = float(rng.uniform(0.5, 4.0))
        res = solve_polyhedral(c0, G, PolyhedralMax(H, beta), mu)
        p = _generic_problem(c0, G, PolyhedralMax(H, beta))
        radius = min(10.0, 1.2 * np.linalg.norm(G, 2)
                     * max(np.linalg.norm(h) for h in H) / mu + 0.5)
        d_ref, _ = grid_subproblem(p, np.zeros(n), mu, box_radius=radius, step=1e-4)
        worst_d = max(worst_d, float(np.max(np.abs(res.d - d_ref))))
        r = np.linalg.norm(G.T @ res.v + mu * res.d)
        worst_r = max(worst_r, r / (1.0 + mu * np.linalg.norm(res.d)))
    results.append(("subproblem polyhedral", worst_d <= tol_d and worst_r <= 1e-8,
                    "max dev %.2e resid %.2e" % (worst_d, worst_r)))

    worst_d, worst_r = 0.0, 0.0
    outers = [L1Norm(), HuberSum(1.0), GroupL2Norm(((0,), (1,)))]
    for i in range(25):
        n = 1 + i % 2
        m = 2
        outer = outers[i % 3]
        c0 = rng.uniform(-1.5, 1.5, size=m)
        G = rng.uniform(-1.5, 1.5, size=(m, n))
        mu = float(rng.uniform(0.5, 4.0))
        res = solve_generic_convex(c0, G, outer, mu)
        p = _generic_problem(c0, G, outer)
        d_ref, _ = grid_subproblem(p, np.zeros(n), mu, box_radius=6.0, step=1e-4)
        worst_d = max(worst_d, float(np.max(np.abs(res.d - d_ref))))
        r = np.linalg.norm(G.T @ res.v + mu * res.d)
        worst_r = max(worst_r, r / (1.0 + mu * np.linalg.norm(res.d)))
    results.append(("subproblem generic-convex", worst_d <= tol_d and worst_r <= 1e-8,
                    "max dev %.2e resid %.2e" % (worst_d, worst_r)))
    return results


def _jacobian_suite(seed=777):
    rng = np.random.default_rng(seed)
    results = []
    for name in problems.packaged_names():
        p = problems.load_packaged(name)
        worst = 0.0
        for _ in range(20):
            x = p.x0 + 0.5 * rng.normal(size=p.dim)
            J = np.asarray(p.smooth.jacobian(x), dtype=float)
            Jfd = fd_jacobian(p.smooth, x, h_step=1e-6)
            rel = np.linalg.norm(J - Jfd) / (1.0 + np.linalg.norm(J))
            worst = max(worst, float(rel))
        results.append(("jacobian %s" % name, worst <= 1e-5, "max rel %.2e" % worst))
    return results


def cmd_check(args) -> int:
    suites = []
    if args.scope in ("prox", "all"):
        suites += _prox_suite()
    if args.scope in ("subproblem", "all"):
        suites += _subproblem_suite()
    if args.scope in ("jacobian", "all"):
        suites += _jacobian_suite()
    ok = True
    for label, passed, detail in suites:
        print("%s  %-32s %s" % ("PASS" if passed else "FAIL", label, detail))
        ok = ok and passed
    print("%d/%d checks passed" % (sum(p for _, p, _ in suites), len(suites)))
    return 0 if ok else 1


def make_parser():
    ap = argparse.ArgumentParser(prog="proxdescent",
                                 description="composite minimization of h(c(x)) "
                                             "by proximal linearization")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run the solver on an instance file")
    sp.add_argument("instance")
    sp.add_argument("--tau", type=float, default=5.0)
    sp.add_argument("--sigma", type=float, default=0.1)
    sp.add_argument("--mu0", type=float, default=1.0)
    sp.add_argument("--mu-min", dest="mu_min", type=float, default=1e-6)
    sp.add_argument("--mu-max", dest="mu_max", type=float, default=1e12)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iters", dest="max_iters", type=int, default=10000)
    sp.add_argument("--policy", choices=("global", "nearest"), default="global")
    sp.add_argument("--trace-out", default=None)
    sp.add_argument("--report-out", default=None)
    sp.set_defaults(func=cmd_solve)

    cp = sub.add_parser("check", help="run oracle conformance suites")
    cp.add_argument("scope", choices=("prox", "subproblem", "jacobian", "all"))
    cp.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
