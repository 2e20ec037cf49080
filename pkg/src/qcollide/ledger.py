"""Error-versus-gate-count bookkeeping."""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gates import GateCounts, GateSequence, PauliRotation, count_gates
from .metrics import amplitude_error, error_metric, leakage
from .propagators import SchemeSpec, propagate
from .rescale import RescaledSchedule

__all__ = [
    "FidelityResult",
    "GateCounts",
    "SweepRecord",
    "amplitude_error",
    "count_gates",
    "error_metric",
    "fidelity_report",
    "leakage",
    "merge_adjacent",
    "min_gates_for_fidelity",
    "sweep",
    "sweep_csv",
]

SWEEP_HEADER = "N,dt,n_1q,n_2q,n_3q,n_dense,error"
N_CAP = 2**16


@dataclass(frozen=True)
class SweepRecord:
    N: int
    dt: float
    counts: GateCounts
    error: float

    def csv_row(self) -> str:
        c = self.counts
        return f"{self.N},{self.dt:.17g},{c.n_1q},{c.n_2q},{c.n_3q},{c.n_dense},{self.error:.17g}"


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QCOLLIDE_THREADS", "1")))
    except ValueError:
        return 1


def sweep(
    schedule: RescaledSchedule,
    q: int | None,
    spec: SchemeSpec,
    N_list,
    oracle: np.ndarray,
    psi0=None,
    threads: int | None = None,
) -> list[SweepRecord]:
    """One record per N against the converged state ``oracle``; sorted by N."""
    N_list = sorted(set(int(n) for n in N_list))
    if not N_list:
        raise ValueError("N_list must not be empty")

    def run(N):
        res = propagate(schedule, q, spec, N, psi0, keep_gates=False)
        return SweepRecord(N, res.dt, res.counts, error_metric(res.psi_final, oracle))

    workers = _threads() if threads is None else threads
    if workers == 1:
        return [run(N) for N in N_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, N_list))


def sweep_csv(records, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(header_comment)
    buf.write(SWEEP_HEADER + "\n")
    for rec in records:
        buf.write(rec.csv_row() + "\n")
    return buf.getvalue()


@dataclass(frozen=True)
class FidelityResult:
    spec: SchemeSpec
    N_min: int | None
    counts: GateCounts | None
    error: float | None
    threshold: float

    @property
    def feasible(self) -> bool:
        return self.N_min is not None


def min_gates_for_fidelity(
    schedule: RescaledSchedule,
    q: int | None,
    spec: SchemeSpec,
    oracle: np.ndarray,
    threshold: float = 0.01,
    psi0=None,
    n_cap: int = N_CAP,
) -> FidelityResult:
    """Smallest N with ``E(N) < threshold`` by doubling then bisection.

    The result satisfies ``E(N_min) < threshold <= E(N_min - 1)``; E need not be
    monotone, so a smaller passing N may exist below a failing one.
    """
    cache = {}

    def evaluate(N):
        if N not in cache:
            res = propagate(schedule, q, spec, N, psi0, keep_gates=False)
            cache[N] = (error_metric(res.psi_final, oracle), res.counts)
        return cache[N]

    hi = 1
    while evaluate(hi)[0] >= threshold:
        if hi >= n_cap:
            return FidelityResult(spec, None, None, None, threshold)
        hi = min(2 * hi, n_cap)
    lo = hi // 2
    if hi == 1:
        err, counts = evaluate(1)
        return FidelityResult(spec, 1, counts, err, threshold)
    # invariant: E(lo) >= threshold > E(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(mid)[0] < threshold:
            hi = mid
        else:
            lo = mid
    err, counts = evaluate(hi)
    return FidelityResult(spec, hi, counts, err, threshold)


def fidelity_report(results, title: str = "") -> str:
    """Aligned text table, one row per scheme."""
    cols = ["scheme", "N", "1-qubit", "2-qubit", "3-qubit", "dense", "E"]
    rows = []
    for r in results:
        if r.feasible:
            c = r.counts
            rows.append([r.spec.label, str(r.N_min), str(c.n_1q), str(c.n_2q), str(c.n_3q), str(c.n_dense), f"{r.error:.3e}"])
        else:
            rows.append([r.spec.label, "infeasible", "-", "-", "-", "-", "-"])
    widths = [max(len(x) for x in col) for col in zip(cols, *rows)]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.rjust(w) for h, w in zip(cols, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(x.rjust(w) for x, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def merge_adjacent(seq) -> GateSequence:
    """Peephole pass fusing consecutive rotations on the same string.

    Exploration only; acceptance counts always use the raw sequence.
    """
    out = GateSequence()
    for gate in seq:
        if (
            out
            and isinstance(gate, PauliRotation)
            and isinstance(out[-1], PauliRotation)
            and out[-1].string == gate.string
        ):
            prev = out.pop()
            theta = prev.theta + gate.theta
            if theta != 0:
                out.append(PauliRotation(gate.string, theta, prev.step))
        else:
            out.append(gate)
    return out
