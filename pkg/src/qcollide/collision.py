"""Semiclassical straight-line collision Hamiltonians.

Atomic units throughout: bohr, hartree, electron masses, a.u. of time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import ConfigError

AMU_IN_ME = 1822.888486
WINDOW_EPS = 1e-6

# standard isotopic masses (u)
ISOTOPE_MASS = {
    "H-1": 1.00782503,
    "He-4": 4.00260325,
    "O-16": 15.99491462,
    "Na-23": 22.98976928,
    "Si-28": 27.97692653,
}


def reduced_mass(a: str, b: str) -> float:
    """Reduced mass of two isotopes in electron masses."""
    ma, mb = ISOTOPE_MASS[a], ISOTOPE_MASS[b]
    return ma * mb / (ma + mb) * AMU_IN_ME


@dataclass(frozen=True)
class Trajectory:
    b: float
    v0: float
    mu: float
    t0: float = 0.0

    def __post_init__(self):
        if not self.b >= 0:
            raise ValueError(f"impact parameter must be >= 0, got {self.b}")
        if not self.v0 > 0:
            raise ValueError(f"velocity must be > 0, got {self.v0}")
        if not self.mu > 0:
            raise ValueError(f"reduced mass must be > 0, got {self.mu}")


def separation(traj: Trajectory, t):
    """Internuclear distance R(t) along the straight-line path."""
    t = np.asarray(t, dtype=float)
    return np.hypot(traj.b, traj.v0 * (t - traj.t0))


def collision_energy(traj: Trajectory) -> float:
    """Centre-of-mass collision energy in hartree."""
    return 0.5 * traj.mu * traj.v0**2


class PotentialModel(Protocol):
    n: int

    def matrix(self, R) -> np.ndarray:
        """Real symmetric potential-coupling matrices, shape ``R.shape + (n, n)``."""

    def cutoff_radius(self, eps: float) -> float:
        """Smallest R beyond which every coupling magnitude is below eps."""


@dataclass(frozen=True, eq=False)
class AnalyticExp:
    """Diagonal ``delta + A exp(-alpha R) + qq'/R``; couplings ``A_ij exp(-alpha_ij R)``."""

    delta: np.ndarray
    wall_A: np.ndarray
    wall_alpha: np.ndarray
    coulomb: np.ndarray
    coupling_A: np.ndarray
    coupling_alpha: np.ndarray

    def __post_init__(self):
        n = len(self.delta)
        for name in ("delta", "wall_A", "wall_alpha", "coulomb"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        for name in ("coupling_A", "coupling_alpha"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, n) or not np.array_equal(arr, arr.T):
                raise ValueError(f"{name} must be a symmetric ({n}, {n}) array")
            object.__setattr__(self, name, arr)
        off = ~np.eye(n, dtype=bool)
        if np.any(self.coupling_alpha[off & (self.coupling_A != 0)] <= 0):
            raise ValueError("coupling decay rates must be positive")

    @property
    def n(self) -> int:
        return len(self.delta)

    def matrix(self, R) -> np.ndarray:
        R = np.asarray(R, dtype=float)[..., None, None]
        n = self.n
        eye = np.eye(n, dtype=bool)
        U = np.where(eye, 0.0, self.coupling_A * np.exp(-self.coupling_alpha * R))
        diag = self.delta + self.wall_A * np.exp(-self.wall_alpha * R[..., 0]) + self.coulomb / R[..., 0]
        U[..., np.arange(n), np.arange(n)] = diag
        return U

    def cutoff_radius(self, eps: float) -> float:
        iu = np.triu_indices(self.n, 1)
        A = np.abs(self.coupling_A[iu])
        alpha = self.coupling_alpha[iu]
        live = A > eps
        if not np.any(live):
            return 0.0
        return float(np.max(np.log(A[live] / eps) / alpha[live]))


@dataclass(frozen=True, eq=False)
class TabulatedCurves:
    """Piecewise-linear U(R) through tabulated rows.

    Outside the table the end rows are reused (``policy="clamp"``) or a
    ValueError is raised (``policy="strict"``).
    """

    R: np.ndarray
    U: np.ndarray
    policy: str = "clamp"

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        U = np.asarray(self.U, dtype=float)
        if R.ndim != 1 or len(R) < 1:
            raise ValueError("tabulated grid must be a nonempty 1-D array")
        if np.any(np.diff(R) <= 0):
            raise ValueError("tabulated R grid must be strictly increasing")
        if U.shape[0] != len(R) or U.ndim != 3 or U.shape[1] != U.shape[2]:
            raise ValueError(f"U must have shape ({len(R)}, n, n), got {U.shape}")
        if not np.array_equal(U, np.swapaxes(U, 1, 2)):
            raise ValueError("tabulated potential matrices must be symmetric")
        if self.policy not in ("clamp", "strict"):
            raise ValueError(f"unknown extrapolation policy {self.policy!r}")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "U", U)

    @property
    def n(self) -> int:
        return self.U.shape[1]

    def matrix(self, R) -> np.ndarray:
        R = np.asarray(R, dtype=float)
        if self.policy == "strict":
            lo, hi = self.R[0], self.R[-1]
            bad = (R < lo) | (R > hi)
            if np.any(bad):
                r = float(np.ravel(R)[np.argmax(np.ravel(bad))])
                raise ValueError(f"R = {r:.6g} bohr outside tabulated range [{lo:.6g}, {hi:.6g}]")
        n = self.n
        flat = self.U.reshape(len(self.R), n * n)
        out = np.empty(R.shape + (n * n,))
        for k in range(n * n):
            out[..., k] = np.interp(R, self.R, flat[:, k])
        return out.reshape(R.shape + (n, n))

    def cutoff_radius(self, eps: float) -> float:
        iu = np.triu_indices(self.n, 1)
        strong = np.any(np.abs(self.U[:, iu[0], iu[1]]) >= eps, axis=1)
        if not np.any(strong):
            return float(self.R[0])
        last = int(np.nonzero(strong)[0][-1])
        return float(self.R[min(last + 1, len(self.R) - 1)])


@dataclass(frozen=True, eq=False)
class CollisionSystem:
    trajectory: Trajectory
    potential: PotentialModel
    label: str = "custom"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.potential.n < 2:
            raise ValueError("a collision system needs at least two channels")

    @property
    def n(self) -> int:
        return self.potential.n


def hamiltonian(sys: CollisionSystem, t) -> np.ndarray:
    """Scattering Hamiltonian H(t) in hartree; vectorized over t."""
    traj = sys.trajectory
    R = separation(traj, t)
    if traj.b == 0:
        centrifugal = np.zeros_like(R)
    else:
        centrifugal = 0.5 * traj.mu * (traj.b * traj.v0 / R) ** 2
    H = sys.potential.matrix(R)
    n = sys.n
    H[..., np.arange(n), np.arange(n)] += centrifugal[..., None]
    return H


def embed(H: np.ndarray, q: int) -> np.ndarray:
    """Place an n x n matrix (or stack) in the top-left block of a 2^q x 2^q zero matrix."""
    H = np.asarray(H)
    n = H.shape[-1]
    d = 2**q
    if n > d:
        raise ValueError(f"{n} channels do not fit in {q} qubits")
    out = np.zeros(H.shape[:-2] + (d, d), dtype=H.dtype)
    out[..., :n, :n] = H
    return out


def qubits_for(n: int) -> int:
    return max(1, (n - 1).bit_length())


def simulation_window(sys: CollisionSystem, eps: float = WINDOW_EPS) -> tuple[float, float]:
    """Symmetric window about t0 whose endpoints have every coupling below eps."""
    traj = sys.trajectory
    r_cut = sys.potential.cutoff_radius(eps)
    if r_cut <= traj.b:
        raise ValueError(
            f"couplings are below {eps:g} hartree already at closest approach; give an explicit window"
        )
    half = np.sqrt(r_cut**2 - traj.b**2) / traj.v0
    return traj.t0 - half, traj.t0 + half


# ---------------------------------------------------------------------------
# curve files


def read_curve_file(path, policy: str = "clamp") -> TabulatedCurves:
    """Parse a ``channels n`` curve file; rows are ``R U11..Unn U12 U13 .. U(n-1)n``."""
    path = Path(path)
    n = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 2 or fields[0] != "channels":
                raise ConfigError(f"{path}:{lineno}: expected header 'channels n'")
            try:
                n = int(fields[1])
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: channel count {fields[1]!r} is not an integer") from None
            if n < 2:
                raise ConfigError(f"{path}:{lineno}: need at least 2 channels")
            width = 1 + n + n * (n - 1) // 2
            continue
        if len(fields) != width:
            raise ConfigError(f"{path}:{lineno}: expected {width} columns for {n} channels, got {len(fields)}")
        try:
            rows.append([float(x) for x in fields])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    if n is None:
        raise ConfigError(f"{path}: missing 'channels n' header")
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.array(rows)
    if np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigError(f"{path}: R column must be strictly increasing")
    U = np.zeros((len(data), n, n))
    U[:, np.arange(n), np.arange(n)] = data[:, 1 : n + 1]
    iu = np.triu_indices(n, 1)
    U[:, iu[0], iu[1]] = data[:, n + 1 :]
    U[:, iu[1], iu[0]] = data[:, n + 1 :]
    return TabulatedCurves(data[:, 0], U, policy=policy)


def write_curve_file(path, R, U, comment: str | None = None) -> None:
    R = np.asarray(R, dtype=float)
    U = np.asarray(U, dtype=float)
    n = U.shape[1]
    iu = np.triu_indices(n, 1)
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"channels {n}")
    for r, u in zip(R, U):
        vals = [r, *np.diag(u), *u[iu]]
        lines.append(" ".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# built-in synthetic systems


def _couplings(n, pairs):
    A = np.zeros((n, n))
    alpha = np.ones((n, n))
    for (i, j), (a, al) in pairs.items():
        A[i, j] = A[j, i] = a
        alpha[i, j] = alpha[j, i] = al
    return A, alpha


def _charge_exchange(delta, coulomb, pairs, wall=(2.0, 1.5)):
    n = len(delta)
    A, alpha = _couplings(n, pairs)
    return AnalyticExp(
        delta=np.array(delta, dtype=float),
        wall_A=np.full(n, wall[0]),
        wall_alpha=np.full(n, wall[1]),
        coulomb=np.array(coulomb, dtype=float),
        coupling_A=A,
        coupling_alpha=alpha,
    )


def _na_he_3ch():
    # Na(3s) + He, Na(3p sigma) + He, Na(3p pi) + He
    A, alpha = _couplings(3, {(0, 1): (1.2, 1.0), (0, 2): (0.4, 1.1), (1, 2): (0.8, 1.2)})
    return AnalyticExp(
        delta=np.array([0.0, 0.0773, 0.0773]),
        wall_A=np.array([3.0, 5.0, 1.5]),
        wall_alpha=np.array([1.2, 1.1, 1.3]),
        coulomb=np.zeros(3),
        coupling_A=A,
        coupling_alpha=alpha,
    )


def _si_he(n_exit):
    # entrance Si3+ + He; endoergic exit channels Si2+(nl) + He+ repel as 2/R.
    # No diabatic crossing, so the entrance diagonal dominates H - cI at every R.
    exits = [0.05, 0.10, 0.15, 0.20][:n_exit]
    delta = [0.0] + exits
    coulomb = [0.0] + [2.0] * n_exit
    pairs = {(0, k): (2.0 - 0.25 * k, 0.8) for k in range(1, n_exit + 1)}
    for k in range(1, n_exit):
        pairs[(k, k + 1)] = (0.2, 1.2)
    return _charge_exchange(delta, coulomb, pairs)


def _o_h_8ch():
    # entrance O7+ + H(1s); exit channels O6+(n l) + H+ repel as 6/R (scaled down)
    delta = [0.0, -0.18, -0.22, -0.46, -0.50, -0.54, -0.95, -1.0]
    coulomb = [0.0] + [1.0] * 7
    pairs = {(0, k): (0.5 - 0.04 * k, 0.9) for k in range(1, 8)}
    for k in range(1, 7):
        pairs[(k, k + 1)] = (0.15, 1.2)
    return _charge_exchange(delta, coulomb, pairs)


_BUILTINS = {
    "na_he_3ch": (_na_he_3ch, ("Na-23", "He-4"), "Na + He excitation, 3 channels"),
    "si_he_4ch": (lambda: _si_he(3), ("Si-28", "He-4"), "Si3+ + He charge exchange, 4 channels"),
    "si_he_5ch": (lambda: _si_he(4), ("Si-28", "He-4"), "Si3+ + He charge exchange, 5 channels"),
    "o_h_8ch": (_o_h_8ch, ("O-16", "H-1"), "O7+ + H charge exchange, 8 channels"),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_system(
    name: str, v0: float = 2.0, b: float = 0.5, t0: float = 0.0, mu: float | None = None
) -> CollisionSystem:
    """One of the synthetic stand-in systems; mu defaults to the isotopic reduced mass."""
    try:
        factory, (ia, ib), description = _BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown builtin system {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    mu_iso = reduced_mass(ia, ib)
    meta = {"description": description, "isotopes": f"{ia}+{ib}", "mu_isotopic": mu_iso, "synthetic": True}
    traj = Trajectory(b=b, v0=v0, mu=mu_iso if mu is None else mu, t0=t0)
    return CollisionSystem(traj, factory(), label=name, metadata=meta)
