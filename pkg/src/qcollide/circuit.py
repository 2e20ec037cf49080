"""Plain-text circuit listing: one ``IDX STEP KIND LABEL THETA`` line per gate.

KIND is ROT (Pauli rotation exp(-i THETA P)), PHASE (global phase record) or
DENSE (an exact step exponential, listed for accounting but not replayable).
"""

from __future__ import annotations

import math

from .errors import ConfigError
from .gates import DenseUnitary, GateSequence, PauliRotation, PhaseRecord
from .pauli import PauliString

HEADER = "IDX STEP KIND LABEL THETA"


def circuit_lines(seq, q: int) -> list[str]:
    lines = []
    for idx, gate in enumerate(seq):
        if isinstance(gate, PauliRotation):
            kind = "PHASE" if gate.string.weight == 0 else "ROT"
            lines.append(f"{idx} {gate.step} {kind} {gate.string.letters} {gate.theta:.17g}")
        elif isinstance(gate, PhaseRecord):
            lines.append(f"{idx} {gate.step} PHASE {'I' * q} {gate.theta:.17g}")
        elif isinstance(gate, DenseUnitary):
            lines.append(f"{idx} {gate.step} DENSE {gate.label} nan")
        else:
            raise TypeError(f"not a gate: {gate!r}")
    return lines


def format_circuit(seq, q: int, header_comment: str = "") -> str:
    return header_comment + HEADER + "\n" + "".join(line + "\n" for line in circuit_lines(seq, q))


def parse_circuit(text: str, source: str = "<circuit>") -> GateSequence:
    """Rebuild the gate sequence of a circuit listing.

    Raises ConfigError on malformed lines and on DENSE entries, whose matrices
    are not part of the listing.
    """
    seq = GateSequence()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line == HEADER:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ConfigError(f"{source}:{lineno}: expected 5 fields, got {len(fields)}")
        _, step, kind, label, theta = fields
        try:
            step = int(step)
            theta = float(theta)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad STEP or THETA field") from None
        if kind == "DENSE":
            raise ConfigError(f"{source}:{lineno}: DENSE gates cannot be replayed from a listing")
        if kind not in ("ROT", "PHASE") or not math.isfinite(theta):
            raise ConfigError(f"{source}:{lineno}: unknown kind {kind!r} or non-finite angle")
        try:
            string = PauliString(label)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        if kind == "PHASE":
            seq.append(PhaseRecord(theta, step))
        else:
            seq.append(PauliRotation(string, theta, step))
    return seq
