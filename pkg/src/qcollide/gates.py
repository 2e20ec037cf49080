"""Gate records produced by the propagators and their arity tallies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, string_action


@dataclass(frozen=True, slots=True)
class PauliRotation:
    """``exp(-i theta P)``."""

    string: PauliString
    theta: float
    step: int = 0

    @property
    def weight(self) -> int:
        return self.string.weight

    def matrix(self) -> np.ndarray:
        P = self.string.matrix()
        return np.cos(self.theta) * np.eye(len(P)) - 1j * np.sin(self.theta) * P


@dataclass(frozen=True, slots=True, eq=False)
class DenseUnitary:
    """Arbitrary unitary on the whole register; ``generator`` is the Hermitian Omega of exp(-i Omega)."""

    matrix: np.ndarray
    step: int = 0
    generator: np.ndarray | None = None

    @property
    def label(self) -> str:
        return f"DENSE{self.matrix.shape[0]}"


@dataclass(frozen=True, slots=True)
class PhaseRecord:
    """Global phase ``exp(-i theta)`` from an identity-string component; not a gate."""

    theta: float
    step: int = 0


Gate = PauliRotation | DenseUnitary | PhaseRecord


def apply_gate(gate: Gate, psi: np.ndarray) -> np.ndarray:
    """Apply one gate to a state vector ``(d,)`` or a block of columns ``(d, k)``."""
    if isinstance(gate, PauliRotation):
        perm, phase = string_action(gate.string.letters)
        if psi.ndim == 2:
            phase = phase[:, None]
        # 1 - cos written as 2 sin^2(theta/2): a rounded cos(theta) near 1 would bias
        # the norm the same way on every repeat of an angle
        vers = 2.0 * math.sin(0.5 * gate.theta) ** 2
        return psi - vers * psi - 1j * math.sin(gate.theta) * (phase * psi[perm])
    if isinstance(gate, DenseUnitary):
        return gate.matrix @ psi
    if isinstance(gate, PhaseRecord):
        return np.exp(-1j * gate.theta) * psi
    raise TypeError(f"not a gate: {gate!r}")


class GateSequence(list):
    """Gates in application order: element 0 acts first on the state."""

    def apply(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        for gate in self:
            psi = apply_gate(gate, psi)
        return psi

    def unitary(self, d: int) -> np.ndarray:
        return self.apply(np.eye(d, dtype=complex))


@dataclass(frozen=True)
class GateCounts:
    """Gate tally by qubit arity; ``n_3q`` holds rotations on three or more qubits."""

    n_1q: int = 0
    n_2q: int = 0
    n_3q: int = 0
    n_dense: int = 0
    phase_records: int = 0

    def __add__(self, other: "GateCounts") -> "GateCounts":
        return GateCounts(
            self.n_1q + other.n_1q,
            self.n_2q + other.n_2q,
            self.n_3q + other.n_3q,
            self.n_dense + other.n_dense,
            self.phase_records + other.phase_records,
        )

    @property
    def total(self) -> int:
        """Physical gate count (phase records are free)."""
        return self.n_1q + self.n_2q + self.n_3q + self.n_dense


def count_gates(seq) -> GateCounts:
    """Raw factor count of a gate sequence by arity; no merging of neighbours."""
    by_weight = [0, 0, 0, 0]
    dense = 0
    phases = 0
    for gate in seq:
        if isinstance(gate, PauliRotation):
            w = gate.string.weight
            if w == 0:
                phases += 1
            else:
                by_weight[min(w, 3)] += 1
        elif isinstance(gate, DenseUnitary):
            dense += 1
        elif isinstance(gate, PhaseRecord):
            phases += 1
        else:
            raise TypeError(f"not a gate: {gate!r}")
    return GateCounts(by_weight[1], by_weight[2], by_weight[3], dense, phases)
