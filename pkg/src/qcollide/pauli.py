"""Pauli-string basis for su(2^q).

Coefficients are stored against *unnormalized* Pauli strings, so a Hermitian
matrix is written ``H = sum_P coeff(P) * P`` with ``coeff(P) = Tr(P H) / 2^q``.
Gate angles then read directly as ``exp(-i theta P)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LETTERS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-qubit products: a*b = phase * c
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

DROP_TOL = 1e-14
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, order=True, slots=True)
class PauliString:
    """Tensor product of single-qubit Paulis, written left (qubit 1) to right."""

    letters: str

    def __post_init__(self):
        if not self.letters or any(ch not in LETTERS for ch in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def q(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    @property
    def n_y(self) -> int:
        return self.letters.count("Y")

    def matrix(self) -> np.ndarray:
        return _string_matrix(self.letters).copy()

    def __str__(self) -> str:
        return self.letters

    @classmethod
    def identity(cls, q: int) -> "PauliString":
        return cls("I" * q)


@dataclass(frozen=True, slots=True)
class PauliTerm:
    string: PauliString
    coeff: float

    def __post_init__(self):
        if not np.isfinite(self.coeff):
            raise ValueError(f"non-finite coefficient on {self.string}")


@dataclass(frozen=True)
class BasisExpansion:
    """Sparse Pauli expansion of a Hermitian matrix; terms in lexicographic order."""

    q: int
    terms: tuple[PauliTerm, ...] = ()

    def __post_init__(self):
        labels = [t.string.letters for t in self.terms]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate Pauli strings in expansion")
        if any(t.string.q != self.q for t in self.terms):
            raise ValueError("term qubit count does not match expansion")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def as_dict(self) -> dict[str, float]:
        return {t.string.letters: t.coeff for t in self.terms}

    def scaled(self, factor: float) -> "BasisExpansion":
        return BasisExpansion(self.q, tuple(PauliTerm(t.string, t.coeff * factor) for t in self.terms))


def all_strings(q: int) -> list[PauliString]:
    """Every length-q string, lexicographic in I < X < Y < Z."""
    return [PauliString("".join(p)) for p in itertools.product(LETTERS, repeat=q)]


@lru_cache(maxsize=None)
def _string_matrix(letters: str) -> np.ndarray:
    m = np.ones((1, 1), dtype=complex)
    for ch in letters:
        m = np.kron(m, _SINGLE[ch])
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def pauli_stack(q: int) -> np.ndarray:
    """All 4^q string matrices stacked in lexicographic order, shape (4^q, 2^q, 2^q)."""
    stack = np.array([_string_matrix(p.letters) for p in all_strings(q)])
    stack.setflags(write=False)
    return stack


@lru_cache(maxsize=None)
def string_action(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """(perm, phase) with ``(P @ psi) == phase * psi[perm]``."""
    m = _string_matrix(letters)
    perm = np.argmax(np.abs(m), axis=1)
    phase = m[np.arange(m.shape[0]), perm]
    perm.setflags(write=False)
    phase.setflags(write=False)
    return perm, phase


def _qubits_for_dim(dim: int) -> int:
    q = dim.bit_length() - 1
    if dim < 2 or (1 << q) != dim:
        raise ValueError(f"matrix dimension {dim} is not a power of two")
    return q


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    """Raise if H deviates from Hermitian by more than tol (relative to max(1, max|H|))."""
    H = np.asarray(H)
    if H.ndim < 2 or H.shape[-1] != H.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {H.shape}")
    asym = float(np.max(np.abs(H - np.conj(np.swapaxes(H, -1, -2))), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if asym > tol * scale:
        raise ValueError(f"matrix is not Hermitian: max |H - H^dagger| = {asym:.3e}")


def coefficients(H: np.ndarray) -> np.ndarray:
    """Dense coefficient vector(s) Tr(P H)/2^q over all strings.

    Accepts a single matrix or a stack ``(..., d, d)``; no Hermiticity check.
    """
    H = np.asarray(H)
    d = H.shape[-1]
    q = _qubits_for_dim(d)
    # Tr(P H) = sum_ij P_ij H_ji
    c = np.einsum("pij,...ji->...p", pauli_stack(q), H, optimize=True)
    return c.real / d


def expand(H: np.ndarray, drop_tol: float = DROP_TOL) -> BasisExpansion:
    """Expand a Hermitian 2^q x 2^q matrix in Pauli strings.

    Terms with ``|coeff| <= drop_tol`` are omitted.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected square matrix, got shape {H.shape}")
    q = _qubits_for_dim(H.shape[0])
    check_hermitian(H)
    coeffs = coefficients(H)
    terms = tuple(
        PauliTerm(p, float(c)) for p, c in zip(all_strings(q), coeffs) if abs(c) > drop_tol
    )
    return BasisExpansion(q, terms)


def reconstruct(e: BasisExpansion) -> np.ndarray:
    d = 2**e.q
    H = np.zeros((d, d), dtype=complex)
    for t in e.terms:
        H += t.coeff * _string_matrix(t.string.letters)
    return H


def multiply(p: PauliString, r: PauliString) -> tuple[complex, PauliString]:
    """Symbolic product ``P R = phase * S``."""
    if p.q != r.q:
        raise ValueError(f"qubit count mismatch: {p.q} vs {r.q}")
    phase: complex = 1
    out = []
    for a, b in zip(p.letters, r.letters):
        ph, c = _PRODUCT[a, b]
        phase *= ph
        out.append(c)
    return phase, PauliString("".join(out))


def commutator(p: PauliString, r: PauliString) -> PauliTerm | None:
    """``[P, R]`` as ``PauliTerm(S, k)`` meaning ``[P, R] = i k S``, or None if they commute.

    For anticommuting strings ``k = 2 s`` with ``s = +-1``.
    """
    phase, s = multiply(p, r)
    if phase in (1, -1):
        return None
    # P R = phase S and R P = -phase S, so [P, R] = 2 phase S with phase = +-i
    return PauliTerm(s, 2.0 * phase.imag)


@lru_cache(maxsize=None)
def _generating_pair(letters: str) -> tuple[PauliString, PauliString, int]:
    target = PauliString(letters)
    if target.q != 3 or target.weight != 3:
        raise ValueError(f"generating pairs exist for weight-3 three-qubit strings, got {letters}")
    t1, t2, t3 = letters
    # first acts on qubits 2,3 and second on qubits 1,2; the middle qubit carries the product
    candidates = []
    for mid_a, mid_b in itertools.permutations("XYZ", 2):
        first = PauliString("I" + mid_a + t3)
        second = PauliString(t1 + mid_b + "I")
        comm = commutator(first, second)
        if comm is not None and comm.string == target:
            candidates.append((first, second, int(np.sign(comm.coeff))))
    for first, second, sign in sorted(candidates):
        if sign == 1:
            return first, second, sign
    raise AssertionError(f"no generating pair for {letters}")  # unreachable for weight 3


def find_generating_pair(target: PauliString) -> tuple[PauliString, PauliString, int]:
    """Weight-2 strings (A, B) with ``[A, B] = 2i * sign * target``.

    Searches pairs of the form ``(I s t3, t1 s' I)``, which always exist for a
    weight-3 target, and returns the lexicographically first one with sign +1.
    """
    return _generating_pair(target.letters)
