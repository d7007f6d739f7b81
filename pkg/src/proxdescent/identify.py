"""Active-manifold identification and multiplier diagnostics over traces.

After a run, the linearized points z_k = c(x_k) + grad c(x_k) d_k carry
a discrete signature (support, active set, rank, ...).  On well-posed
instances the signature settles long before the iterates converge; this
module detects that settling point and the limit of the multipliers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ManifoldSignature, ProblemInstance
from .solver import SIGNATURE_TOL

MULTIPLIER_TAIL_TOL = 1e-6
MIN_STABLE_TAIL = 3  # trailing identical signatures required to report settling


@dataclass(frozen=True, eq=False)
class IdentificationReport:
    signatures: list
    stabilized_at: int | None
    final_signature: ManifoldSignature | None
    multipliers: list
    multiplier_limit: np.ndarray | None
    max_stationarity_residual: float


def build_report(trace, problem: ProblemInstance, tol=MULTIPLIER_TAIL_TOL,
                 sig_tol=SIGNATURE_TOL) -> IdentificationReport:
    """Signatures of the linearized points, the first index after which
    they stay constant (needs at least MIN_STABLE_TAIL trailing matches),
    the recorded multipliers, and their limit when the tail variation is
    within tol.  Also reports the worst scaled stationarity residual
    |grad c(x_k)' v_k + mu_k d_k| / (1 + mu_k |d_k|) over the trace.
    """
    if not trace:
        raise ValueError("trace is empty; run the solver first")

    signatures = []
    residual = 0.0
    for rec in trace:
        G = np.asarray(problem.smooth.jacobian(rec.x_prev), dtype=float)
        z = np.asarray(problem.smooth.value(rec.x_prev), dtype=float) + G @ rec.d
        signatures.append((rec.k, problem.outer.signature(z, sig_tol)))
        r = float(np.linalg.norm(G.T @ rec.v + rec.mu_used * rec.d))
        residual = max(residual, r / (1.0 + rec.mu_used * np.linalg.norm(rec.d)))

    final_sig = signatures[-1][1]
    run = 0
    for _, sig in reversed(signatures):
        if sig == final_sig:
            run += 1
        else:
            break
    stabilized_at = len(signatures) - run if run >= MIN_STABLE_TAIL else None

    multipliers = [(rec.k, rec.v) for rec in trace]
    v_last = trace[-1].v
    tail = [v for _, v in multipliers[-5:]]
    spread = max(float(np.linalg.norm(v - v_last)) for v in tail)
    limit = v_last if spread <= tol else None

    return IdentificationReport(
        signatures=signatures,
        stabilized_at=stabilized_at,
        final_signature=final_sig,
        multipliers=multipliers,
        multiplier_limit=limit,
        max_stationarity_residual=residual,
    )


def format_report(report: IdentificationReport, state=None) -> str:
    """Render a report (and optionally the solver state it came from) as
    structured key-value text."""
    lines = []
    if state is not None:
        lines += [
            "status %s" % state.status.value,
            "iterations %d" % state.accepted,
            "final_obj %.17g" % state.obj,
            "crit_measure %s" % ("%.17g" % state.crit_measure
                                 if state.crit_measure is not None else "none"),
        ]
    lines.append("stabilized_at %s" % (report.stabilized_at
                                       if report.stabilized_at is not None else "none"))
    lines.append("final_signature %s" % report.final_signature)
    lines.append("max_stationarity_residual %.17g" % report.max_stationarity_residual)
    if report.multiplier_limit is not None:
        lines.append("multiplier_limit " +
                     " ".join("%.17g" % t for t in report.multiplier_limit))
    else:
        lines.append("multiplier_limit none")
    lines.append("signatures")
    for k, sig in report.signatures:
        lines.append("  %d %s" % (k, sig))
    return "\n".join(lines) + "\n"
