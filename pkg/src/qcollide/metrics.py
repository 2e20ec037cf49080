import numpy as np


def error_metric(psi_sim, psi_exact) -> float:
    """Mean over all register components of ``|psi_sim - psi_exact|^2``.

    Not invariant under a global phase applied to only one of the states.
    """
    a = np.asarray(psi_sim)
    b = np.asarray(psi_exact)
    if a.shape != b.shape:
        raise ValueError(f"state dimensions differ: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b) ** 2))


def amplitude_error(psi_sim, psi_exact) -> float:
    """Root-mean-square amplitude error, ``sqrt(E)``; scales like the method's order."""
    return float(np.sqrt(error_metric(psi_sim, psi_exact)))


def leakage(psi, n: int) -> float:
    """Probability outside the first n channels of the register."""
    out = np.sum(np.abs(np.asarray(psi)[..., n:]) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out
