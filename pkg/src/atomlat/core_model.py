"""Units, lattice geometry, drives, and reciprocal-vector bookkeeping.

Unit convention used throughout the package: lengths in units of the atomic
transition wavelength (so the transition wavenumber is K_A = 2*pi) and
rates/frequencies in units of the single-atom amplitude decay rate gamma
(so gamma = 1).  hbar = c = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

K_A = 2.0 * math.pi  # transition wavenumber, lengths measured in wavelengths
GAMMA = 1.0  # single-atom amplitude decay rate

# exclusion band on kperp^2 around the light-cone divergence contours
EPS_CONE = 1e-9 * K_A**2


class InvalidParameterError(ValueError):
    pass


class LightConeSingularityError(ValueError):
    """Evaluation requested within EPS_CONE of a 1/k_z divergence contour."""


def collective_width(a: float, k: float = K_A) -> float:
    """Normal-incidence collective decay rate 3*pi/(a^2 k^2) of one lattice."""
    return 3.0 * math.pi / (a * a * k * k)


@dataclass(frozen=True)
class LatticeGeometry:
    a: float
    n_side: int
    layers: int
    L: float | None
    curvature: str  # "none" | "gaussian"
    w0: float | None
    positions: np.ndarray  # (n_atoms, 3), immutable by convention

    @property
    def n_atoms(self) -> int:
        return self.n_side**2 * self.layers


@dataclass(frozen=True)
class DriveSpec:
    delta: float
    mode: str  # "plane" | "gaussian"
    amplitude: float = 1e-3
    k_perp: tuple[float, float] = (0.0, 0.0)
    w0: float = 1.5

    def __post_init__(self) -> None:
        if self.amplitude <= 0:
            raise InvalidParameterError("drive amplitude must be positive")
        if self.mode == "plane":
            if math.hypot(*self.k_perp) >= K_A:
                raise InvalidParameterError("plane-wave drive must be propagating (|k_perp| < k)")
        elif self.mode == "gaussian":
            if self.w0 <= 0:
                raise InvalidParameterError("gaussian drive needs w0 > 0")
        else:
            raise InvalidParameterError(f"unknown drive mode {self.mode!r}")


@dataclass(frozen=True)
class ReciprocalSet:
    a: float
    q_max: float
    vectors: np.ndarray = field(repr=False)  # (M, 2), deterministic order

    def __len__(self) -> int:
        return len(self.vectors)


def reciprocal_set(a: float, q_max: float) -> ReciprocalSet:
    """All reciprocal vectors q = (2*pi/a)*(i, j) with |q| <= q_max.

    Sorted by |q| then lexicographically so truncated Bragg sums are
    reproducible run to run.
    """
    if a <= 0:
        raise InvalidParameterError("lattice spacing must be positive")
    if q_max < 0:
        raise InvalidParameterError("q_max must be nonnegative")
    b = 2.0 * math.pi / a
    n_max = int(math.floor(q_max / b + 1e-12))
    rng = np.arange(-n_max, n_max + 1)
    ii, jj = np.meshgrid(rng, rng, indexing="ij")
    qs = b * np.stack([ii.ravel(), jj.ravel()], axis=1).astype(float)
    norms = np.hypot(qs[:, 0], qs[:, 1])
    keep = norms <= q_max + 1e-12 * max(b, 1.0)
    qs, norms = qs[keep], norms[keep]
    order = np.lexsort((qs[:, 1], qs[:, 0], np.round(norms, 12)))
    qs = qs[order]
    qs.setflags(write=False)
    return ReciprocalSet(a=a, q_max=q_max, vectors=qs)


def reciprocal_set_for_tail(a: float, L: float, tail: float = 1e-12) -> ReciprocalSet:
    """Reciprocal set large enough that exp(-sqrt(q^2-k^2)*L) < tail at the cutoff."""
    if L <= 0:
        raise InvalidParameterError("separation must be positive for the tail bound")
    kappa = -math.log(tail) / L
    q_max = math.sqrt(kappa**2 + K_A**2)
    return reciprocal_set(a, q_max)


def reciprocal_set_for_alpha(a: float, alpha_min: float, tail: float = 1e-16) -> ReciprocalSet:
    """Reciprocal set large enough that exp(-alpha q^2) < tail at the cutoff."""
    q_max = math.sqrt(-math.log(tail) / alpha_min) + K_A
    return reciprocal_set(a, q_max)


def fold_bz(k_perp, a: float):
    """Fold transverse momenta into the first Brillouin zone [-pi/a, pi/a)^2."""
    b = 2.0 * math.pi / a
    k = np.asarray(k_perp, dtype=float)
    return (k + b / 2.0) % b - b / 2.0


def _transverse_grid(a: float, n_side: int) -> np.ndarray:
    coords = a * (np.arange(n_side) - (n_side - 1) / 2.0)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def make_lattice(
    a: float,
    n_side: int,
    layers: int = 1,
    L: float | None = None,
    curvature: str = "none",
    w0: float | None = None,
) -> LatticeGeometry:
    """Build a square lattice of one or two layers, optionally curved onto the
    constant-phase surface of a Gaussian beam (two layers mirrored through z=0)."""
    if a <= 0:
        raise InvalidParameterError("lattice spacing must be positive")
    if n_side < 1:
        raise InvalidParameterError("n_side must be >= 1")
    if layers not in (1, 2):
        raise InvalidParameterError("layers must be 1 or 2")
    if layers == 2:
        if L is None or L <= 0:
            raise InvalidParameterError("two layers require separation L > 0")
    if curvature not in ("none", "gaussian"):
        raise InvalidParameterError(f"unknown curvature {curvature!r}")
    if curvature == "gaussian":
        if layers != 2:
            raise InvalidParameterError("curvature requires layers=2")
        if w0 is None or w0 <= 0:
            raise InvalidParameterError("curvature requires w0 > 0")
        if n_side % 2 == 0:
            raise InvalidParameterError("curved lattices need odd n_side (central anchor atom)")

    trans = _transverse_grid(a, n_side)
    if layers == 1:
        pos = np.concatenate([trans, np.zeros((len(trans), 1))], axis=1)
    elif curvature == "none":
        lower = np.concatenate([trans, np.full((len(trans), 1), -L / 2.0)], axis=1)
        upper = np.concatenate([trans, np.full((len(trans), 1), +L / 2.0)], axis=1)
        pos = np.concatenate([lower, upper], axis=0)
    else:
        from .linear_finite import curved_positions  # local import: avoids cycle

        pos = curved_positions(a, n_side, L, w0)
    pos = np.ascontiguousarray(pos, dtype=float)
    pos.setflags(write=False)
    return LatticeGeometry(a=a, n_side=n_side, layers=layers, L=L, curvature=curvature, w0=w0, positions=pos)
