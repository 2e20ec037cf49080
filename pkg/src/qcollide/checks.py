"""Invariant checks shared by ``qcollide selftest`` and the acceptance tests.

Every check returns a list of :class:`CheckResult`; nothing raises on a
failed tolerance, so a report can list all failures at once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .collision import BUILTIN_NAMES, builtin_system, hamiltonian, qubits_for, simulation_window
from .gates import PauliRotation, count_gates
from .ledger import min_gates_for_fidelity, sweep
from .metrics import amplitude_error, leakage
from .pauli import (
    PauliString,
    all_strings,
    commutator,
    expand,
    find_generating_pair,
    reconstruct,
)
from .propagators import (
    GAUSS_OFFSET,
    VALID_SCHEMES,
    SchemeSpec,
    expansion_from_generator,
    gadgetize,
    magnus4_generator,
    propagate,
    reference_oracle,
    split_step,
)
from .rescale import RescaledSchedule, RescaleParams, build_schedule

DEFAULT_SEED = 20240917
MUTATIONS = ("gadget-sign",)

LOCAL_ORDER_TARGETS = {
    "magnus4 step": (5.0, 0.3),
    "split b=1": (2.0, 0.25),
    "split b=2": (3.0, 0.25),
    "split b=4": (5.0, 0.5),
    "gadget c=3/2": (1.5, 0.2),
    "gadget c=5/2": (2.5, 0.3),
}
GLOBAL_ORDER_TARGETS = {
    "1,0,0": (1.0, 0.3, (32, 64, 128, 256, 512, 1024, 2048, 4096)),
    "4,0,0": (4.0, 0.4, (8, 16, 32, 64)),
    "4,1,0": (1.0, 0.3, (32, 64, 128, 256, 512)),
    "4,2,0": (2.0, 0.3, (32, 64, 128, 256, 512)),
}
GLOBAL_GRID = 16384
REMAP_GRID = 2**18
REMAP_PHYSICAL_STEPS = 2**17


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.criterion}. {self.name}: {self.detail}"


def slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _random_symmetric(rng, n, scale=1.0):
    A = rng.normal(size=(n, n))
    A = 0.5 * (A + A.T)
    A -= np.trace(A) / n * np.eye(n)
    return scale * A / np.max(np.abs(A))


def _dyadic(k0, count):
    return np.array([2.0**-k for k in range(k0, k0 + count)])


# ---------------------------------------------------------------------------
# criterion 1


def check_basis(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for q in (1, 2, 3):
        strings = all_strings(q)
        mats = np.array([s.matrix() for s in strings])
        gram = np.einsum("aij,bji->ab", mats, mats) / 2**q
        worst = max(worst, float(np.max(np.abs(gram - np.eye(len(strings))))))
    out = [CheckResult(1, "orthogonality q<=3", worst < 1e-14, f"max |Tr(PR)/2^q - delta| = {worst:.1e}")]

    trip = 0.0
    for _ in range(100):
        q = int(rng.integers(1, 4))
        d = 2**q
        H = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        H = H + H.conj().T
        trip = max(trip, float(np.max(np.abs(reconstruct(expand(H)) - H))))
    out.append(CheckResult(1, "expand/reconstruct round trip", trip <= 1e-12, f"max error {trip:.1e} over 100 matrices"))

    covered = 0
    for s in all_strings(3):
        if s.weight != 3:
            continue
        a, b, sign = find_generating_pair(s)
        term = commutator(a, b)
        if term is not None and term.string == s and a.weight <= 2 and b.weight <= 2 and sign in (1, -1):
            covered += 1
    out.append(CheckResult(1, "weight-3 coverage", covered == 27, f"{covered}/27 strings from weight<=2 pairs"))
    return out


# ---------------------------------------------------------------------------
# criterion 2


def _ivp_step(schedule, psi0, t1):
    def rhs(t, y):
        return -1j * (schedule.hamiltonian(t) @ y)

    sol = solve_ivp(rhs, (0.0, t1), psi0.astype(complex), method="DOP853", rtol=1e-13, atol=1e-15)
    return sol.y[:, -1]


def _magnus_local_errors(rng, dts):
    n = 4
    A = _random_symmetric(rng, n)
    B = _random_symmetric(rng, n)
    # two samples, linear in tau: the schedule is smooth on the whole step
    schedule = RescaledSchedule(np.array([0.0, 1.0]), np.array([A, A + B]), interpolation="linear")
    psi0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi0 /= np.linalg.norm(psi0)
    errs = []
    for dt in dts:
        U = expm(-1j * magnus4_generator(schedule, 0.0, dt))
        errs.append(np.linalg.norm(U @ psi0 - _ivp_step(schedule, psi0, dt)))
    return np.array(errs)


def _split_local_errors(rng, b, dts):
    H = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    H = 0.5 * (H + H.conj().T) / 8
    expansion = expand(H)
    errs = []
    for dt in dts:
        exact = expm(-1j * H * dt)
        errs.append(np.linalg.norm(split_step(expansion, dt, b).unitary(8) - exact, 2))
    return np.array(errs)


def _gadget_local_errors(c, thetas, mutate=None):
    target = PauliString("XYZ")
    P = target.matrix()
    errs = []
    for theta in thetas:
        rot_theta = -theta if mutate == "gadget-sign" else theta
        seq = gadgetize(PauliRotation(target, rot_theta), Fraction(c))
        errs.append(np.linalg.norm(seq.unitary(8) - expm(-1j * theta * P), 2))
    return np.array(errs)


def check_local_orders(seed: int = DEFAULT_SEED, mutate: str | None = None) -> list[CheckResult]:
    if mutate is not None and mutate not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutate!r}")
    rng = np.random.default_rng(seed)
    dts = _dyadic(2, 6)
    measured = {
        "magnus4 step": (dts, _magnus_local_errors(rng, dts)),
    }
    for b in (1, 2, 4):
        # b=4 reaches roundoff below dt = 2^-5
        h = _dyadic(3, 6) if b < 4 else _dyadic(0, 6)
        measured[f"split b={b}"] = (h, _split_local_errors(rng, b, h))
    for c, k0 in (("3/2", 4), ("5/2", 5)):
        th = _dyadic(k0, 6)
        measured[f"gadget c={c}"] = (th, _gadget_local_errors(c, th, mutate))
    out = []
    for name, (x, e) in measured.items():
        target, tol = LOCAL_ORDER_TARGETS[name]
        p = slope(x, e)
        out.append(CheckResult(2, f"local order {name}", abs(p - target) <= tol, f"slope {p:.3f} (target {target} +- {tol})"))
    return out


# ---------------------------------------------------------------------------
# criterion 3


def check_global_orders() -> list[CheckResult]:
    schedule = build_schedule(builtin_system("si_he_4ch"), params=RescaleParams(grid=GLOBAL_GRID))
    oracle = reference_oracle(schedule, tol=1e-22)
    out = []
    for token, (target, tol, Ns) in GLOBAL_ORDER_TARGETS.items():
        errs = [
            amplitude_error(propagate(schedule, None, SchemeSpec.parse(token), N, keep_gates=False).psi_final, oracle)
            for N in Ns
        ]
        p = -slope(Ns, errs)
        out.append(
            CheckResult(3, f"global order ({token})", abs(p - target) <= tol, f"slope {p:.3f} over N={Ns[0]}..{Ns[-1]}")
        )
    return out


# ---------------------------------------------------------------------------
# criterion 4


def unitarity_matrix(N: int = 2):
    """(system, scheme) pairs exercised by the unitarity check."""
    for name in BUILTIN_NAMES:
        q = qubits_for(builtin_system(name).n)
        for spec in _all_specs():
            if q == 2 and spec.gadget_order > 0:
                continue
            yield name, spec


def _all_specs():
    return [SchemeSpec(*s) for s in VALID_SCHEMES]


def check_unitarity(N: int = 2) -> list[CheckResult]:
    schedules = {name: build_schedule(builtin_system(name)) for name in BUILTIN_NAMES}
    worst_u = 0.0
    worst_norm = 0.0
    pairs = 0
    for name, spec in unitarity_matrix(N):
        res = propagate(schedules[name], None, spec, N)
        d = 2**res.q
        U = res.gates.unitary(d)
        worst_u = max(worst_u, float(np.max(np.abs(U.conj().T @ U - np.eye(d)))))
        worst_norm = max(worst_norm, float(np.max(np.abs(np.linalg.norm(res.trajectory, axis=1) - 1))))
        pairs += 1
    return [
        CheckResult(4, "unitarity", worst_u <= 1e-12, f"max |U^dag U - I| = {worst_u:.1e} over {pairs} pairs"),
        CheckResult(4, "state norms", worst_norm <= 1e-12, f"max |norm - 1| = {worst_norm:.1e} at every snapshot"),
    ]


# ---------------------------------------------------------------------------
# criterion 5


def physical_reference(sys, window, steps: int = REMAP_PHYSICAL_STEPS) -> np.ndarray:
    """Fourth-order Magnus solution of i dpsi/dt = H(t) psi directly in physical time."""
    ta, tb = window
    n = sys.n
    dt = (tb - ta) / steps
    psi = np.zeros(n, dtype=complex)
    psi[0] = 1.0
    for s0 in range(0, steps, 4096):
        t = ta + np.arange(s0, min(steps, s0 + 4096)) * dt
        H1 = hamiltonian(sys, t + (0.5 - GAUSS_OFFSET) * dt)
        H2 = hamiltonian(sys, t + (0.5 + GAUSS_OFFSET) * dt)
        Om = 0.5 * dt * (H1 + H2) + 1j * math.sqrt(3) / 12 * dt**2 * (H1 @ H2 - H2 @ H1)
        w, V = np.linalg.eigh(Om)
        for U in (V * np.exp(-1j * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2)):
            psi = U @ psi
    return psi


def check_rescaler(remap_grid: int = REMAP_GRID, systems=BUILTIN_NAMES) -> list[CheckResult]:
    out = []
    worst_max = 0.0
    worst_trace = 0.0
    for name in BUILTIN_NAMES:
        sch = build_schedule(builtin_system(name))
        active = sch.lam > RescaleParams().lambda_floor
        peak = np.max(np.abs(sch.H_qc), axis=(1, 2))
        worst_max = max(worst_max, float(np.max(np.abs(peak[active] / sch.g_max - 1))))
        trace = np.abs(np.trace(sch.H_qc, axis1=1, axis2=2))
        worst_trace = max(worst_trace, float(np.max(trace)) / sch.g_max)
    out.append(CheckResult(5, "max element = g_max", worst_max <= 1e-12, f"max relative deviation {worst_max:.1e}"))
    out.append(CheckResult(5, "tracelessness", worst_trace <= 1e-12, f"max |trace|/g_max = {worst_trace:.1e}"))

    for name in systems:
        sys = builtin_system(name)
        window = simulation_window(sys)
        psi = physical_reference(sys, window)
        sch = build_schedule(sys, window, RescaleParams(grid=remap_grid))
        phi = reference_oracle(sch, tol=1e-20)[: sys.n]
        dev = float(np.max(np.abs(phi - np.exp(1j * sch.total_phase) * psi)))
        out.append(CheckResult(5, f"remap equivalence {name}", dev <= 1e-8, f"max componentwise deviation {dev:.2e}"))
    return out


# ---------------------------------------------------------------------------
# criterion 6


def check_leakage() -> list[CheckResult]:
    worst = 0.0
    for name in BUILTIN_NAMES:
        sys = builtin_system(name)
        sch = build_schedule(sys)
        for token in ("1,0,0", "4,0,0"):
            res = propagate(sch, None, SchemeSpec.parse(token), 16, keep_gates=False)
            worst = max(worst, float(np.max(leakage(res.trajectory, sys.n))))
    out = [CheckResult(6, "dense-scheme leakage", worst <= 1e-12, f"max leakage {worst:.1e}")]

    sch = build_schedule(builtin_system("si_he_5ch"))
    Ns = (16, 32, 64, 128, 256)
    leaks = [leakage(propagate(sch, None, SchemeSpec(4, 1), N, keep_gates=False).psi_final, 5) for N in Ns]
    decreasing = all(b < a for a, b in zip(leaks, leaks[1:]))
    detail = ", ".join(f"{x:.1e}" for x in leaks)
    out.append(CheckResult(6, "(4,1,0) leakage decreasing on si_he_5ch", decreasing, f"N={Ns[0]}..{Ns[-1]}: {detail}"))
    return out


# ---------------------------------------------------------------------------
# criterion 7


def check_gate_accounting() -> list[CheckResult]:
    out = []
    o_h = build_schedule(builtin_system("o_h_8ch"))

    linear = True
    for spec in _all_specs():
        c1 = propagate(o_h, None, spec, 2, keep_gates=False).counts
        c2 = propagate(o_h, None, spec, 4, keep_gates=False).counts
        linear &= (c2.n_1q, c2.n_2q, c2.n_3q, c2.n_dense) == (2 * c1.n_1q, 2 * c1.n_2q, 2 * c1.n_3q, 2 * c1.n_dense)
    out.append(CheckResult(7, "counts linear in N", linear, "N=2 vs N=4 for all 11 schemes"))

    # one generic step: every one of the 63 strings is present
    Omega = magnus4_generator(o_h, 0.3 * o_h.T_qc, o_h.T_qc / 16, 3)
    expansion = expansion_from_generator(Omega, o_h.T_qc / 16)
    k = len(expansion) - (1 if any(t.string.weight == 0 for t in expansion) else 0)
    per = {b: count_gates(split_step(expansion, o_h.T_qc / 16, b)).total for b in (1, 2, 4)}
    ok = per[1] == k and per[2] == 2 * per[1] and per[4] == 18 * per[1]
    out.append(CheckResult(7, "splitting multipliers", ok, f"b=1: {per[1]}, b=2: {per[2]}, b=4: {per[4]} rotations"))

    costs = {}
    for c in ("3/2", "5/2"):
        counts = count_gates(gadgetize(PauliRotation(PauliString("ZXY"), 0.01), Fraction(c)))
        costs[c] = (counts.n_2q, counts.n_1q, counts.n_3q)
    ok = costs["3/2"] == (4, 0, 0) and costs["5/2"] == (68, 0, 0)
    out.append(CheckResult(7, "gadget costs", ok, f"3/2: {costs['3/2'][0]}, 5/2: {costs['5/2'][0]} two-qubit gates"))

    si = build_schedule(builtin_system("si_he_4ch"))
    oracle = reference_oracle(si, tol=1e-20)
    crude = {r.counts.total: r.error for r in sweep(si, None, SchemeSpec(1, 0), [16, 32, 64, 128], oracle)}
    magnus = {r.counts.total: r.error for r in sweep(si, None, SchemeSpec(4, 0), [16, 32, 64, 128], oracle)}
    ok = all(magnus[n] < crude[n] for n in crude)
    detail = ", ".join(f"{n}: {magnus[n]:.1e} < {crude[n]:.1e}" for n in sorted(crude))
    out.append(CheckResult(7, "E(4,0,0) < E(1,0,0) at equal gates", ok, detail))

    oracle = reference_oracle(o_h, tol=1e-20)
    n2 = {}
    for token in ("4,2,3/2", "4,2,5/2", "4,4,5/2"):
        r = min_gates_for_fidelity(o_h, None, SchemeSpec.parse(token), oracle)
        n2[token] = r.counts.n_2q if r.feasible else math.inf
    ok = n2["4,2,3/2"] < n2["4,2,5/2"] < n2["4,4,5/2"]
    detail = " < ".join(f"{v} ({k})" for k, v in n2.items())
    out.append(CheckResult(7, "two-qubit ordering at E<0.01 on o_h_8ch", ok, detail))
    return out


# ---------------------------------------------------------------------------


def run_all(seed: int = DEFAULT_SEED, mutate: str | None = None, log=None) -> list[CheckResult]:
    suites = [
        lambda: check_basis(seed),
        lambda: check_local_orders(seed, mutate),
        check_global_orders,
        check_unitarity,
        check_rescaler,
        check_leakage,
        check_gate_accounting,
    ]
    results = []
    for suite in suites:
        t0 = time.perf_counter()
        batch = suite()
        for r in batch:
            if log is not None:
                log(r.line())
        if log is not None:
            log(f"      ({time.perf_counter() - t0:.1f} s)")
        results.extend(batch)
    return results
