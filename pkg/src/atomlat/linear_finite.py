"""Finite-array linear steady state: dipole-dipole coupling matrix, curved
lattice construction, Gaussian drive/detection overlaps, and transmission /
reflection / loss coefficients.

Coupling scale: the ratio between a mode-overlap emission sum and the drive
overlap is fixed to i*(3 pi / k^2) per atom so the infinite flat array
reproduces the closed-form plane-wave amplitudes (the detector constant
itself cancels in T and R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (
    K_A,
    DriveSpec,
    InvalidParameterError,
    LatticeGeometry,
)


class NewtonConvergenceError(RuntimeError):
    pass


class CoincidentAtomsError(ValueError):
    pass


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class GaussianMode:
    """Paraxial Gaussian mode focused at z=0, travelling along direction*z."""

    w0: float
    direction: int = +1
    k: float = K_A

    def __post_init__(self) -> None:
        if self.w0 <= 0:
            raise InvalidParameterError("waist must be positive")
        if self.direction not in (-1, +1):
            raise InvalidParameterError("direction must be +1 or -1")

    @property
    def rayleigh_range(self) -> float:
        return self.k * self.w0**2 / 2.0

    def envelope(self, positions: np.ndarray) -> np.ndarray:
        """Complex beam profile with envelope(0) = 1 at the focus."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        x, y, z = positions[:, 0], positions[:, 1], positions[:, 2]
        r2 = x * x + y * y
        zr = self.rayleigh_range
        w = self.w0 * np.sqrt(1.0 + (z / zr) ** 2)
        gouy = np.arctan(z / zr)
        # curvature term written as z/(z^2+zr^2) to stay finite at the focus
        phase = self.k * z + self.k * r2 * z / (2.0 * (z * z + zr * zr)) - gouy
        if self.direction < 0:
            phase = -phase
        return (self.w0 / w) * np.exp(-r2 / w**2) * np.exp(1j * phase)

    @property
    def norm_constant(self) -> float:
        """Prefactor making the transverse integral of |f|^2 equal 1."""
        return math.sqrt(2.0 / math.pi) / self.w0

    def mode_function(self, positions: np.ndarray) -> np.ndarray:
        return self.norm_constant * self.envelope(positions)


def _gouy(z: float, zr: float) -> float:
    return math.atan(z / zr)


def curved_positions(a: float, n_side: int, L: float, w0: float, k: float = K_A) -> np.ndarray:
    """Positions of two n_side x n_side layers curved along surfaces of
    constant Gaussian-beam phase, anchored so the central atoms sit at
    z = -L/2 and +L/2.  Newton iteration on the phase residual."""
    if n_side % 2 == 0:
        raise InvalidParameterError("curved lattices require an odd side length")
    if L <= 0 or w0 <= 0:
        raise InvalidParameterError("L and w0 must be positive")
    zr = k * w0**2 / 2.0
    coords = a * (np.arange(n_side) - (n_side - 1) / 2.0)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    x = xx.ravel()
    y = yy.ravel()
    r2 = x * x + y * y
    target = k * (-L / 2.0) - _gouy(-L / 2.0, zr)

    def phase(z: np.ndarray) -> np.ndarray:
        return k * z + k * r2 * z / (2.0 * (z * z + zr * zr)) - np.arctan(z / zr)

    z = np.full_like(x, -L / 2.0)
    for _ in range(50):
        resid = phase(z) - target
        if np.max(np.abs(resid)) < 1e-12:
            break
        h = 1e-7
        dphase = (phase(z + h) - phase(z - h)) / (2.0 * h)
        z = z - resid / dphase
    else:
        raise NewtonConvergenceError("curved-layer phase solve did not converge")
    lower = np.column_stack([x, y, z])
    upper = np.column_stack([x, y, -z])
    return np.vstack([lower, upper])


def _g_pp_pairwise(dr: np.ndarray, k: float) -> np.ndarray:
    """Right-circular Green's-function element for an array of displacements."""
    r = np.linalg.norm(dr, axis=-1)
    if np.any(r == 0.0):
        raise CoincidentAtomsError("coincident atoms in geometry")
    kr = k * r
    rho2 = (dr[..., 0] ** 2 + dr[..., 1] ** 2) / r**2  # transverse fraction of r-hat
    iso = 1.0 + (1j * kr - 1.0) / kr**2
    aniso = 3.0 * (1.0 - 1j * kr) / kr**2 - 1.0
    return (np.exp(1j * kr) / (4.0 * math.pi * r)) * (iso + 0.5 * aniso * rho2)


def coupling_matrix(geom: LatticeGeometry, delta: float, k: float = K_A) -> np.ndarray:
    """Dense complex-symmetric matrix of the driven linear system:
    diagonal delta + i, off-diagonal exchange + i*decay from the dyadic
    Green's function between right-circular dipoles."""
    pos = geom.positions
    n = len(pos)
    dr = pos[:, None, :] - pos[None, :, :]
    iu = np.triu_indices(n, k=1)
    vals = (6.0 * math.pi / k) * _g_pp_pairwise(dr[iu], k)
    m = np.zeros((n, n), dtype=complex)
    m[iu] = vals
    m = m + m.T
    np.fill_diagonal(m, delta + 1j)
    return m


def drive_amplitudes(geom: LatticeGeometry, drive: DriveSpec, k: float = K_A) -> np.ndarray:
    """Per-atom drive amplitudes: plane wave (transverse momentum k_perp,
    travelling +z) or focused Gaussian beam (focus at z=0)."""
    pos = geom.positions
    if drive.mode == "plane":
        kp = np.asarray(drive.k_perp, dtype=float)
        kz = math.sqrt(k * k - float(kp @ kp))
        phase = pos[:, 0] * kp[0] + pos[:, 1] * kp[1] + pos[:, 2] * kz
        return drive.amplitude * np.exp(1j * phase)
    mode = GaussianMode(w0=drive.w0, direction=+1, k=k)
    return drive.amplitude * mode.envelope(pos)


def linear_steady_state(m: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Steady-state dipole amplitudes of the driven linear system m x = -omega."""
    try:
        return np.linalg.solve(m, -omega)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def drive_mode_overlap(drive: DriveSpec, mode: GaussianMode) -> complex:
    """Transverse-plane overlap of the drive with a detection mode.  Only the
    matched case (Gaussian drive, same waist, +z mode) is needed; the result
    is amplitude * sqrt(pi/2) * w0."""
    if drive.mode != "gaussian" or mode.direction != +1 or mode.w0 != drive.w0:
        raise InvalidParameterError("detection mode must match the Gaussian drive")
    return drive.amplitude * math.sqrt(math.pi / 2.0) * drive.w0


def mode_overlap_field(
    amplitudes: np.ndarray,
    geom: LatticeGeometry,
    mode: GaussianMode,
    drive: DriveSpec | None,
    k: float = K_A,
) -> complex:
    """Detected field amplitude in a paraxial mode: the drive overlap (for the
    transmitted, i.e. co-propagating, direction; pass drive=None for the
    reflected direction) plus i*(3 pi / k^2) * sum_n conj(f(r_n)) <sigma_n>."""
    emission = 1j * (3.0 * math.pi / k**2) * np.sum(
        np.conj(mode.mode_function(geom.positions)) * np.asarray(amplitudes)
    )
    if drive is None:
        return complex(emission)
    return complex(drive_mode_overlap(drive, GaussianMode(mode.w0, +1, k)) + emission)


def trl_coefficients(
    geom: LatticeGeometry,
    drive: DriveSpec,
    delta: float,
    k: float = K_A,
) -> tuple[float, float, float]:
    """Transmission, reflection and loss of a finite array under a focused
    Gaussian drive, referenced to the incident mode amplitude."""
    if drive.mode != "gaussian":
        raise InvalidParameterError("T/R/loss analysis requires a Gaussian drive")
    m = coupling_matrix(geom, delta, k)
    sigma = linear_steady_state(m, drive_amplitudes(geom, drive, k))
    fwd = GaussianMode(drive.w0, +1, k)
    bwd = GaussianMode(drive.w0, -1, k)
    s_in = drive_mode_overlap(drive, fwd)
    e_t = mode_overlap_field(sigma, geom, fwd, drive, k)
    e_r = mode_overlap_field(sigma, geom, bwd, None, k)
    T = abs(e_t / s_in) ** 2
    R = abs(e_r / s_in) ** 2
    return T, R, 1.0 - T - R
