"""Map a physical Hamiltonian onto a bounded, traceless quantum-computer schedule.

At each instant the mean diagonal c(t) is removed and the remainder divided by
the smallest lambda(t) that keeps every element within +-g_max.  The clock
``tau = int lambda dt`` then runs fast where little happens and slowly where
the couplings are strong.  Units: H in hartree and t in a.u., so lambda is in
hartree s / rad and tau in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .collision import CollisionSystem, hamiltonian, simulation_window

G_MAX_DEFAULT = 2 * math.pi * 30e6


@dataclass(frozen=True)
class RescaleParams:
    g_max: float = G_MAX_DEFAULT
    lambda_floor: float = 1e-30
    grid: int = 4096
    interpolation: str = "cubic"

    def __post_init__(self):
        if not self.g_max > 0:
            raise ValueError("g_max must be positive")
        if not self.lambda_floor > 0:
            raise ValueError("lambda_floor must be positive")
        if self.grid < 2:
            raise ValueError("need at least two samples")
        if self.interpolation not in ("cubic", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")


def phase_offset(H: np.ndarray):
    """Mean of the diagonal; vectorized over leading axes."""
    H = np.asarray(H)
    return np.trace(H, axis1=-2, axis2=-1).real / H.shape[-1]


def _centre(H):
    """Subtract the mean diagonal; a second pass removes the roundoff left by large diagonals."""
    H = np.asarray(H)
    eye = np.eye(H.shape[-1])
    c = phase_offset(H)
    shifted = H - c[..., None, None] * eye
    c2 = phase_offset(shifted)
    return c + c2, shifted - c2[..., None, None] * eye


def lambda_scale(H: np.ndarray, params: RescaleParams = RescaleParams()):
    _, shifted = _centre(H)
    peak = np.max(np.abs(shifted), axis=(-2, -1))
    return np.maximum(peak / params.g_max, params.lambda_floor)


def rescale(H: np.ndarray, params: RescaleParams = RescaleParams()):
    """Return ``(H_qc, c, lam)`` for a matrix or stack of matrices."""
    c, shifted = _centre(H)
    peak = np.max(np.abs(shifted), axis=(-2, -1))
    lam = np.maximum(peak / params.g_max, params.lambda_floor)
    return shifted / lam[..., None, None], c, lam


def _cumtrapz(y, x):
    out = np.zeros_like(x, dtype=float)
    out[1:] = np.cumsum(0.5 * np.diff(x) * (y[1:] + y[:-1]))
    return out


class RescaledSchedule:
    """Sampled traceless Hamiltonian on a uniform remapped-time grid.

    ``hamiltonian(tau)`` interpolates between samples (cubic spline by default).
    The physical clock ``(t_phys, tau_phys)`` backs the piecewise-linear maps
    ``t_of_tau`` and ``tau_of_t``.  Treat instances as immutable.
    """

    def __init__(
        self,
        tau_grid,
        H_qc,
        *,
        t_grid=None,
        lam=None,
        phase_integral=None,
        t_phys=None,
        tau_phys=None,
        g_max: float | None = None,
        interpolation: str = "cubic",
        label: str = "",
    ):
        tau_grid = np.asarray(tau_grid, dtype=float)
        H_qc = np.asarray(H_qc)
        if tau_grid.ndim != 1 or len(tau_grid) < 2:
            raise ValueError("need at least two schedule samples")
        if tau_grid[0] != 0 or np.any(np.diff(tau_grid) <= 0):
            raise ValueError("tau grid must start at 0 and increase strictly")
        if H_qc.shape[0] != len(tau_grid) or H_qc.shape[1] != H_qc.shape[2]:
            raise ValueError(f"H_qc shape {H_qc.shape} does not match {len(tau_grid)} samples")
        M = len(tau_grid)
        self.tau_grid = tau_grid
        self.H_qc = H_qc
        self.t_grid = tau_grid.copy() if t_grid is None else np.asarray(t_grid, dtype=float)
        self.lam = np.ones(M) if lam is None else np.asarray(lam, dtype=float)
        self.phase_integral = np.zeros(M) if phase_integral is None else np.asarray(phase_integral, dtype=float)
        self.t_phys = self.t_grid if t_phys is None else np.asarray(t_phys, dtype=float)
        self.tau_phys = self.tau_grid if tau_phys is None else np.asarray(tau_phys, dtype=float)
        self.g_max = float(np.max(np.abs(H_qc))) if g_max is None else float(g_max)
        self.label = label
        self.interpolation = interpolation
        for arr in (self.tau_grid, self.H_qc, self.t_grid, self.lam, self.phase_integral, self.t_phys, self.tau_phys):
            arr.setflags(write=False)
        n = H_qc.shape[1]
        if interpolation == "cubic":
            self._spline = CubicSpline(tau_grid, H_qc.reshape(M, n * n), axis=0, bc_type="not-a-knot")
        elif interpolation == "linear":
            self._spline = None
        else:
            raise ValueError(f"unknown interpolation {interpolation!r}")

    @classmethod
    def from_function(cls, f, T: float, samples: int, **kwargs) -> "RescaledSchedule":
        """Sample ``f(tau) -> matrix`` on a uniform grid over [0, T]; identity clock."""
        tau = np.linspace(0.0, T, samples)
        return cls(tau, np.array([f(x) for x in tau]), **kwargs)

    @property
    def n(self) -> int:
        return self.H_qc.shape[1]

    @property
    def T_qc(self) -> float:
        return float(self.tau_grid[-1])

    @property
    def total_phase(self) -> float:
        return float(self.phase_integral[-1])

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.H_qc) or not np.any(self.H_qc.imag)

    def t_of_tau(self, tau):
        return np.interp(tau, self.tau_phys, self.t_phys)

    def tau_of_t(self, t):
        return np.interp(t, self.t_phys, self.tau_phys)

    def hamiltonian(self, tau) -> np.ndarray:
        """Interpolated schedule at remapped time(s) tau, shape ``tau.shape + (n, n)``."""
        tau = np.clip(np.asarray(tau, dtype=float), 0.0, self.T_qc)
        n = self.n
        if self._spline is not None:
            return self._spline(tau).reshape(tau.shape + (n, n))
        k = np.clip(np.searchsorted(self.tau_grid, tau, side="right") - 1, 0, len(self.tau_grid) - 2)
        w = (tau - self.tau_grid[k]) / (self.tau_grid[k + 1] - self.tau_grid[k])
        w = w[..., None, None]
        return (1 - w) * self.H_qc[k] + w * self.H_qc[k + 1]


def build_schedule(
    sys: CollisionSystem,
    window: tuple[float, float] | None = None,
    params: RescaleParams = RescaleParams(),
) -> RescaledSchedule:
    """Rescaled schedule of a collision over ``window`` (default: coupling-cutoff window)."""
    ta, tb = simulation_window(sys) if window is None else window
    if not tb > ta:
        raise ValueError(f"empty simulation window [{ta}, {tb}]")
    M = params.grid
    t = np.linspace(ta, tb, M)
    H = hamiltonian(sys, t)
    c = phase_offset(H)
    lam = lambda_scale(H, params)
    tau_phys = _cumtrapz(lam, t)
    assert np.all(np.diff(tau_phys) > 0), "remapped clock is not strictly increasing"
    # the phase integral reaches 1e4 rad for heavy systems; Simpson keeps it accurate
    phase_phys = cumulative_simpson(c, x=t, initial=0.0) if M > 2 else _cumtrapz(c, t)

    tau = np.linspace(0.0, tau_phys[-1], M)
    t_tau = np.interp(tau, tau_phys, t)
    t_tau[0], t_tau[-1] = ta, tb
    H_qc, _, lam_tau = rescale(hamiltonian(sys, t_tau), params)
    phase = np.interp(t_tau, t, phase_phys)
    return RescaledSchedule(
        tau,
        H_qc,
        t_grid=t_tau,
        lam=lam_tau,
        phase_integral=phase,
        t_phys=t,
        tau_phys=tau_phys,
        g_max=params.g_max,
        interpolation=params.interpolation,
        label=sys.label,
    )


def upper_triangle_labels(n: int) -> list[str]:
    diag = [f"H{i}{i}" for i in range(1, n + 1)]
    off = [f"H{i + 1}{j + 1}" for i, j in zip(*np.triu_indices(n, 1))]
    return diag + off


def schedule_rows(schedule: RescaledSchedule):
    """Header and rows ``tau, t, lambda, H11..Hnn, H12..`` for CSV export."""
    n = schedule.n
    iu = np.triu_indices(n, 1)
    header = ["tau", "t", "lambda"] + upper_triangle_labels(n)
    H = schedule.H_qc.real
    diag = H[:, np.arange(n), np.arange(n)]
    rows = np.column_stack([schedule.tau_grid, schedule.t_grid, schedule.lam, diag, H[:, iu[0], iu[1]]])
    return header, rows
