"""The (a, b, c) propagation schemes.

``a`` is the Magnus order (1: crude left-point product, 4: two-point Gauss
Magnus step), ``b`` the operator-splitting order used to break each step into
Pauli rotations (0: keep the step as one dense unitary), and ``c`` the order of
the commutator gadget that rewrites weight-3 rotations as weight-2 ones.

All generators here are in angle units: a step is ``exp(-i Omega)`` with
``Omega`` dimensionless (schedule values in rad/s times step length in s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .collision import embed, qubits_for
from .errors import ConfigError, ConvergenceError
from .gates import DenseUnitary, GateCounts, GateSequence, PauliRotation, PhaseRecord, apply_gate, count_gates
from .metrics import error_metric
from .pauli import (
    DROP_TOL,
    BasisExpansion,
    PauliTerm,
    all_strings,
    check_hermitian,
    coefficients,
    find_generating_pair,
)
from .rescale import RescaledSchedule

GAUSS_OFFSET = math.sqrt(3) / 6
_CHUNK = 2048

VALID_SCHEMES = (
    (1, 0, Fraction(0)),
    (4, 0, Fraction(0)),
    (4, 1, Fraction(0)),
    (4, 2, Fraction(0)),
    (4, 4, Fraction(0)),
    (4, 1, Fraction(3, 2)),
    (4, 2, Fraction(3, 2)),
    (4, 4, Fraction(3, 2)),
    (4, 1, Fraction(5, 2)),
    (4, 2, Fraction(5, 2)),
    (4, 4, Fraction(5, 2)),
)


@dataclass(frozen=True)
class SchemeSpec:
    magnus_order: int
    split_order: int
    gadget_order: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "gadget_order", Fraction(self.gadget_order))
        if (self.magnus_order, self.split_order, self.gadget_order) not in VALID_SCHEMES:
            raise ConfigError(f"invalid scheme {self.label}")

    @classmethod
    def parse(cls, token: str) -> "SchemeSpec":
        """Parse ``"4,2,3/2"`` (parentheses and spaces allowed)."""
        parts = token.strip().strip("()").replace(" ", "").split(",")
        if len(parts) != 3:
            raise ConfigError(f"scheme token {token!r} must have three fields a,b,c")
        try:
            a, b, c = int(parts[0]), int(parts[1]), Fraction(parts[2])
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"cannot parse scheme token {token!r}") from None
        return cls(a, b, c)

    @property
    def token(self) -> str:
        return f"{self.magnus_order},{self.split_order},{self.gadget_order}"

    @property
    def label(self) -> str:
        return f"({self.token})"

    @property
    def slug(self) -> str:
        return self.token.replace(",", "-").replace("/", "_")

    def is_physical(self, q: int) -> bool:
        """True when the scheme needs only one- and two-qubit gates on q qubits."""
        if q <= 2:
            return True
        return self.split_order > 0 and self.gadget_order > 0


@dataclass
class PropagationResult:
    psi_final: np.ndarray
    trajectory: np.ndarray
    tau: np.ndarray
    counts: GateCounts
    gates: GateSequence | None
    spec: SchemeSpec
    N: int
    q: int
    dt: float


# ---------------------------------------------------------------------------
# primitives


def _expm_hermitian(H: np.ndarray, dt: float = 1.0) -> np.ndarray:
    """exp(-i H dt) through the Hermitian eigendecomposition; works on stacks."""
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from None
    phases = np.exp(-1j * w * dt)
    return (V * phases[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def exact_step(H: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for Hermitian H."""
    H = np.asarray(H)
    check_hermitian(H)
    return _expm_hermitian(H, dt)


def magnus4_generator(schedule: RescaledSchedule, t_n: float, dt: float, q: int | None = None) -> np.ndarray:
    """Hermitian Omega with ``exp(-i Omega)`` the fourth-order Magnus step over [t_n, t_n + dt]."""
    Omega = _magnus_batch(schedule, np.array([t_n]), dt)[0]
    return Omega if q is None else embed(Omega, q)


def _magnus_batch(schedule, starts, dt):
    H1 = schedule.hamiltonian(starts + (0.5 - GAUSS_OFFSET) * dt)
    H2 = schedule.hamiltonian(starts + (0.5 + GAUSS_OFFSET) * dt)
    comm = H1 @ H2 - H2 @ H1
    # S = -iH: exp(dt/2 (S1 + S2) - sqrt(3)/12 dt^2 [S1, S2]) = exp(-i Omega)
    return 0.5 * dt * (H1 + H2) + 1j * (math.sqrt(3) / 12) * dt**2 * comm


def _generators(schedule, magnus_order, N, start=0, stop=None):
    """Per-step generators for steps [start, stop) of an N-step uniform grid."""
    stop = N if stop is None else stop
    dt = schedule.T_qc / N
    starts = np.arange(start, stop) * dt
    if magnus_order == 1:
        return schedule.hamiltonian(starts) * dt
    return _magnus_batch(schedule, starts, dt)


# ---------------------------------------------------------------------------
# splitting and gadgets


# (coefficient in units of dt, transposed?) for the 18-block fourth-order composition
_FOURTH_ORDER_BLOCKS = (
    [(Fraction(1, 12), True), (Fraction(1, 12), False), (Fraction(1, 12), True), (Fraction(-1, 6), False)]
    + [(Fraction(1, 12), True)] * 4
    + [(Fraction(1, 12), False), (Fraction(1, 12), True)]
    + [(Fraction(1, 12), False)] * 4
    + [(Fraction(-1, 6), True), (Fraction(1, 12), False), (Fraction(1, 12), True), (Fraction(1, 12), False)]
)

_SPLIT_BLOCKS = {
    1: [(Fraction(1), False)],
    2: [(Fraction(1, 2), False), (Fraction(1, 2), True)],
    4: _FOURTH_ORDER_BLOCKS,
}


def split_step(expansion: BasisExpansion, dt: float, b: int, step: int = 0) -> GateSequence:
    """Pauli-rotation product approximating ``exp(-i dt sum_j a_j P_j)``.

    Each block is a sweep ``prod_j exp(-i a_j P_j m dt)`` over the expansion in
    its stored order; a transposed block is the same sweep in reverse order.
    The identity component becomes one PhaseRecord.
    """
    try:
        blocks = _SPLIT_BLOCKS[b]
    except KeyError:
        raise ValueError(f"split order must be 1, 2 or 4, got {b}") from None
    seq = GateSequence()
    terms = []
    for term in expansion:
        if term.string.weight == 0:
            seq.append(PhaseRecord(term.coeff * dt, step))
        else:
            terms.append(term)
    for m, transposed in blocks:
        sweep = reversed(terms) if transposed else terms
        h = float(m) * dt
        seq.extend(PauliRotation(t.string, t.coeff * h, step) for t in sweep)
    return seq


def _gadget_factors(c: Fraction, x: float):
    """Matrix-product-ordered (operator index, sign * x) factors of the commutator gadget.

    Token ``(y)`` is ``exp(y A) exp(y B)`` and its transpose ``exp(y B) exp(y A)``.
    """

    def tok(y, transposed=False):
        return [(1, y), (0, y)] if transposed else [(0, y), (1, y)]

    if c == Fraction(3, 2):
        return tok(-x) + tok(x)
    if c == Fraction(5, 2):
        out = tok(-2 * x, True) + tok(2 * x, True)
        for _ in range(12):
            out += tok(-x) + tok(x)
        for _ in range(4):
            out += tok(x) + tok(-x)
        return out
    raise ValueError(f"gadget order must be 3/2 or 5/2, got {c}")


def gadgetize(rotation: PauliRotation, c) -> GateSequence:
    """Approximate ``exp(-i theta P3)`` on a weight-3 string by weight-2 rotations.

    With ``[A, B] = 2i s P3`` and skew-Hermitian ``gA = -iA``, ``gB = -iB`` the
    target is ``exp(k [gA, gB])`` with ``k = theta / (2 s)``.  A and B are
    swapped when k < 0 so every square root is real.  The group commutator
    then uses ``x = sqrt(k)`` (order 3/2) or ``x = sqrt(k / 12)`` (order 5/2);
    a factor ``exp(y gG)`` is the rotation ``exp(-i y G)``.
    """
    c = Fraction(c)
    P3 = rotation.string
    if P3.weight != 3:
        raise ValueError(f"gadgets replace weight-3 rotations, got {P3}")
    if c not in (Fraction(3, 2), Fraction(5, 2)):
        raise ValueError(f"gadget order must be 3/2 or 5/2, got {c}")
    if rotation.theta == 0:
        return GateSequence()
    A, B, s = find_generating_pair(P3)
    k = rotation.theta / (2 * s)
    if k < 0:
        A, B, k = B, A, -k
    x = math.sqrt(k) if c == Fraction(3, 2) else math.sqrt(k / 12)
    ops = (A, B)
    factors = _gadget_factors(c, x)
    # rightmost matrix factor acts first
    return GateSequence(PauliRotation(ops[i], y, rotation.step) for i, y in reversed(factors))


def _rotation_sequence(expansion, dt, spec: SchemeSpec, step: int) -> GateSequence:
    seq = split_step(expansion, dt, spec.split_order, step)
    if spec.gadget_order == 0:
        return seq
    out = GateSequence()
    for gate in seq:
        if isinstance(gate, PauliRotation) and gate.string.weight == 3:
            out.extend(gadgetize(gate, spec.gadget_order))
        else:
            out.append(gate)
    return out


def expansion_from_generator(Omega: np.ndarray, dt: float, strings=None) -> BasisExpansion:
    """Pauli expansion of ``Omega / dt``; terms whose angle ``|a_j dt|`` is at most DROP_TOL are dropped."""
    coeffs = coefficients(Omega)
    q = int(round(math.log2(Omega.shape[-1])))
    strings = all_strings(q) if strings is None else strings
    keep = np.nonzero(np.abs(coeffs) > DROP_TOL)[0]
    return BasisExpansion(q, tuple(PauliTerm(strings[j], float(coeffs[j]) / dt) for j in keep))


# ---------------------------------------------------------------------------
# drivers


def _initial_state(psi0, d):
    if psi0 is None:
        psi = np.zeros(d, dtype=complex)
        psi[0] = 1.0
        return psi
    psi = np.asarray(psi0, dtype=complex).copy()
    if psi.shape != (d,):
        raise ValueError(f"initial state must have shape ({d},), got {psi.shape}")
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("initial state must be normalized")
    return psi


def propagate(
    schedule: RescaledSchedule,
    q: int | None,
    spec: SchemeSpec,
    N: int,
    psi0=None,
    *,
    keep_gates: bool = True,
) -> PropagationResult:
    """Run scheme ``spec`` with N uniform steps over the whole schedule.

    The state after every step is kept in ``trajectory`` (row 0 is psi0).
    With ``keep_gates=False`` gates are counted but not stored.
    """
    if not isinstance(spec, SchemeSpec):
        spec = SchemeSpec.parse(spec)
    if N < 1:
        raise ValueError("need at least one step")
    q = qubits_for(schedule.n) if q is None else q
    d = 2**q
    if schedule.n > d:
        raise ValueError(f"{schedule.n} channels do not fit in {q} qubits")
    psi = _initial_state(psi0, d)
    dt = schedule.T_qc / N
    traj = np.empty((N + 1, d), dtype=complex)
    traj[0] = psi
    gates = GateSequence() if keep_gates else None
    counts = GateCounts()
    strings = all_strings(q)

    for start in range(0, N, _CHUNK):
        stop = min(N, start + _CHUNK)
        Omegas = embed(_generators(schedule, spec.magnus_order, N, start, stop), q)
        if spec.split_order == 0:
            Us = _expm_hermitian(Omegas)
            for k, U in enumerate(Us):
                psi = U @ psi
                traj[start + k + 1] = psi
                if keep_gates:
                    gates.append(DenseUnitary(U, start + k, Omegas[k]))
            counts = counts + GateCounts(n_dense=stop - start)
            continue
        for k, Omega in enumerate(Omegas):
            n = start + k
            expansion = expansion_from_generator(Omega, dt, strings)
            seq = _rotation_sequence(expansion, dt, spec, n)
            for gate in seq:
                psi = apply_gate(gate, psi)
            traj[n + 1] = psi
            counts = counts + count_gates(seq)
            if keep_gates:
                gates.extend(seq)

    tau = np.arange(N + 1) * dt
    return PropagationResult(psi, traj, tau, counts, gates, spec, N, q, dt)


def crude_scheme(schedule: RescaledSchedule, N: int, q: int | None = None, psi0=None) -> PropagationResult:
    """(1,0,0): left-point samples, one exact exponential per step."""
    return propagate(schedule, q, SchemeSpec(1, 0), N, psi0)


def magnus4_scheme(schedule: RescaledSchedule, N: int, q: int | None = None, psi0=None) -> PropagationResult:
    """(4,0,0): one dense fourth-order Magnus exponential per step."""
    return propagate(schedule, q, SchemeSpec(4, 0), N, psi0)


def magnus_state(schedule: RescaledSchedule, N: int, q: int | None = None, psi0=None) -> np.ndarray:
    """Final state of the (4,0,0) scheme without storing gates or snapshots."""
    q = qubits_for(schedule.n) if q is None else q
    d = 2**q
    psi = _initial_state(psi0, d)
    for start in range(0, N, _CHUNK):
        stop = min(N, start + _CHUNK)
        for U in _expm_hermitian(embed(_generators(schedule, 4, N, start, stop), q)):
            psi = U @ psi
    return psi


def reference_oracle(
    schedule: RescaledSchedule,
    q: int | None = None,
    tol: float = 1e-10,
    psi0=None,
    *,
    n_start: int = 1024,
    n_max: int = 2**20,
    history: list | None = None,
) -> np.ndarray:
    """Converged (4,0,0) state: N doubles from n_start until successive E < tol.

    ``history`` (if given) receives ``(N, E vs previous)`` pairs.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    N = n_start
    prev = magnus_state(schedule, N, q, psi0)
    delta = math.inf
    while N < n_max:
        N *= 2
        psi = magnus_state(schedule, N, q, psi0)
        delta = error_metric(psi, prev)
        if history is not None:
            history.append((N, delta))
        if delta < tol:
            return psi
        prev = psi
    raise ConvergenceError(f"reference did not converge by N = {N}: last successive E = {delta:.3e}")
