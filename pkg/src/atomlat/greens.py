"""Electromagnetic dyadic Green's function: real-space form, transverse-momentum
form, lattice Fourier sums, and the regularized in-plane (z=0) value.

Everything here is geometry-level: no atomic units enter except through the
wavenumber argument k (default K_A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (
    EPS_CONE,
    K_A,
    InvalidParameterError,
    LightConeSingularityError,
    ReciprocalSet,
    reciprocal_set_for_alpha,
)

# right-circular polarization vector, matching the atomic dipoles
E_PLUS = np.array([1.0, 1.0j, 0.0]) / math.sqrt(2.0)


class OriginEvaluationError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def g_real(r, k: float = K_A) -> np.ndarray:
    """Free-space dyadic Green's function at displacement r (delta-term and the
    divergent co-located real part excluded by contract)."""
    r = np.asarray(r, dtype=float)
    rr = float(np.linalg.norm(r))
    if rr == 0.0:
        raise OriginEvaluationError("real-space Green's function is singular at the origin")
    kr = k * rr
    rhat = r / rr
    outer = np.outer(rhat, rhat)
    pref = np.exp(1j * kr) / (4.0 * math.pi * rr)
    iso = 1.0 + (1j * kr - 1.0) / kr**2
    aniso = 3.0 * (1.0 - 1j * kr) / kr**2 - 1.0
    return pref * (iso * np.eye(3) + aniso * outer)


def g_real_pp(r, k: float = K_A) -> complex:
    """Right-circular matrix element of g_real: (G_xx + G_yy)/2 for symmetric G."""
    g = g_real(r, k)
    return 0.5 * (g[0, 0] + g[1, 1])


def _kz(kperp2: float, k: float) -> complex:
    """Longitudinal wavenumber, principal branch: +i*sqrt(kperp^2-k^2) evanescent."""
    diff = k * k - kperp2
    if diff >= 0.0:
        return complex(math.sqrt(diff))
    return 1j * math.sqrt(-diff)


def g_transverse(k_perp, z: float, k: float = K_A) -> np.ndarray:
    """Transverse-momentum-space dyadic Green's function (i/2k_z) Q e^{i k_z |z|}."""
    k_perp = np.asarray(k_perp, dtype=float)
    kperp2 = float(k_perp @ k_perp)
    if abs(kperp2 - k * k) < EPS_CONE:
        raise LightConeSingularityError("k_perp within the light-cone exclusion band")
    kz = _kz(kperp2, k)
    kappa = np.array([k_perp[0], k_perp[1], math.copysign(1.0, z) * kz], dtype=complex)
    Q = np.eye(3, dtype=complex) - np.outer(kappa, kappa) / k**2
    return (1j / (2.0 * kz)) * np.exp(1j * kz * abs(z)) * Q


def g_transverse_pp(k_perp, z: float, k: float = K_A) -> complex:
    """Right-circular element of g_transverse; the projector gives 1 - kperp^2/2k^2."""
    k_perp = np.asarray(k_perp, dtype=float)
    kperp2 = float(k_perp @ k_perp)
    if abs(kperp2 - k * k) < EPS_CONE:
        raise LightConeSingularityError("k_perp within the light-cone exclusion band")
    kz = _kz(kperp2, k)
    return (1j / (2.0 * kz)) * np.exp(1j * kz * abs(z)) * (1.0 - kperp2 / (2.0 * k * k))


def g_lattice(k_perp, z: float, k: float, recip: ReciprocalSet) -> np.ndarray:
    """Lattice-summed Green's function (1/a^2) sum_m g_transverse(k_perp+q_m, z)."""
    if z == 0.0:
        raise InvalidParameterError("z=0 requires the regularized g_lattice_z0_plus")
    k_perp = np.asarray(k_perp, dtype=float)
    total = np.zeros((3, 3), dtype=complex)
    for q in recip.vectors:
        total += g_transverse(k_perp + q, z, k)
    return total / recip.a**2


def g_lattice_pp(k_perp, z: float, k: float, recip: ReciprocalSet) -> complex:
    """Right-circular element of g_lattice, vectorized over the reciprocal set."""
    if z == 0.0:
        raise InvalidParameterError("z=0 requires the regularized g_lattice_z0_plus")
    k_perp = np.asarray(k_perp, dtype=float)
    kap = k_perp[None, :] + recip.vectors
    kap2 = np.einsum("mi,mi->m", kap, kap)
    if np.any(np.abs(kap2 - k * k) < EPS_CONE):
        raise LightConeSingularityError("a Bragg channel lies within the light-cone band")
    kz = np.sqrt((k * k - kap2).astype(complex))
    kz = np.where(kz.imag < 0, -kz, kz)  # principal branch, decaying evanescent
    vals = (1j / (2.0 * kz)) * np.exp(1j * kz * abs(z)) * (1.0 - kap2 / (2.0 * k * k))
    return complex(vals.sum()) / recip.a**2


@dataclass(frozen=True)
class AlphaLadder:
    """Geometric ladder of Gaussian-regulator widths used for the z -> 0 limit."""

    alpha0: float = 0.01
    ratio: float = 0.5
    max_steps: int = 12
    rtol: float = 1e-8

    def __post_init__(self) -> None:
        if self.alpha0 <= 0 or not (0.0 < self.ratio < 1.0) or self.rtol <= 0:
            raise InvalidParameterError("invalid alpha ladder parameters")


def _regularized_value(k_perp: np.ndarray, k: float, alpha: float, a: float, qvecs: np.ndarray):
    """One rung of the regularized in-plane sum: Gaussian-damped reciprocal sum
    minus the (k_perp-independent) short-distance counterterm.  Batched over
    rows of k_perp."""
    kap = k_perp[:, None, :] + qvecs[None, :, :]  # (B, M, 2)
    kap2 = np.einsum("bmi,bmi->bm", kap, kap)
    kz = np.sqrt((k * k - kap2).astype(complex))
    kz = np.where(kz.imag < 0, -kz, kz)
    terms = np.exp(-alpha * kap2) * (1.0 - kap2 / (2.0 * k * k)) / kz
    s = (1j / (2.0 * a * a)) * terms.sum(axis=1)
    counter = (
        (1.0 / (16.0 * math.sqrt(math.pi)))
        * math.exp(-alpha * k * k)
        * alpha**-0.5
        * (1.0 - 1.0 / (2.0 * k * k * alpha))
    )
    return s - counter


def g_lattice_z0_plus_batch(
    k_perp,
    k: float,
    a: float,
    ladder: AlphaLadder | None = None,
) -> np.ndarray:
    """Regularized in-plane lattice Green's function (right-circular element),
    batched over rows of k_perp.

    The residual after counterterm cancellation vanishes linearly in alpha, so
    the alpha -> 0 limit is taken by a Neville table in alpha down a geometric
    ladder; convergence is judged on the extrapolated column against the scale
    max(|value|, k/6pi) (the latter avoids chasing roundoff when the real part
    is accidentally small).
    """
    ladder = ladder or AlphaLadder()
    k_perp = np.atleast_2d(np.asarray(k_perp, dtype=float))
    alphas = [ladder.alpha0 * ladder.ratio**j for j in range(ladder.max_steps)]
    xs: list[float] = []
    rows: list[list[np.ndarray]] = []  # Neville rows; entries are batch arrays
    best = None
    for j, alpha in enumerate(alphas):
        qv = reciprocal_set_for_alpha(a, alpha).vectors
        kap = k_perp[:, None, :] + qv[None, :, :]
        kap2 = np.einsum("bmi,bmi->bm", kap, kap)
        if np.any(np.abs(kap2 - k * k) < EPS_CONE):
            raise LightConeSingularityError("a Bragg channel lies within the light-cone band")
        v = _regularized_value(k_perp, k, alpha, a, qv)
        row = [v]
        for m in range(1, len(rows) + 1):
            x_old = alphas[j - m]
            row.append((x_old * row[m - 1] - alpha * rows[-1][m - 1]) / (x_old - alpha))
        xs.append(alpha)
        rows.append(row)
        extrap = row[-1]
        if best is not None and j >= 3:
            scale = np.maximum(np.abs(extrap), k / (6.0 * math.pi))
            if np.all(np.abs(extrap - best) < ladder.rtol * scale):
                return extrap
        best = extrap
    raise ConvergenceError("alpha ladder exhausted without meeting rtol")


def g_lattice_z0_plus(k_perp, k: float, a: float, ladder: AlphaLadder | None = None) -> complex:
    """Scalar wrapper over g_lattice_z0_plus_batch."""
    out = g_lattice_z0_plus_batch(np.atleast_2d(np.asarray(k_perp, dtype=float)), k, a, ladder)
    return complex(out[0])


def g_lattice_z0_realspace(k_perp, k: float, a: float, r_max: float | None = None) -> complex:
    """Direct real-space lattice sum oracle for the in-plane value.

    Conditionally convergent sum over lattice sites n != 0 of
    G_pp(r_n) e^{-i k_perp . r_n}, with the on-site limit i k/6pi added.
    The constant-amplitude oscillation of the partial sums is suppressed by a
    Hann-weighted average over shell radius in [r_max/2, r_max].
    """
    k_perp = np.asarray(k_perp, dtype=float)
    if r_max is None:
        r_max = 400.0 * a
    n_max = int(math.ceil(r_max / a))
    rng = np.arange(-n_max, n_max + 1)
    ii, jj = np.meshgrid(rng, rng, indexing="ij")
    mask = (ii != 0) | (jj != 0)
    x = a * ii[mask].astype(float)
    y = a * jj[mask].astype(float)
    r = np.hypot(x, y)
    keep = r <= r_max
    x, y, r = x[keep], y[keep], r[keep]
    kr = k * r
    # in-plane e_+ element: (G_xx+G_yy)/2 = iso + aniso*(rx^2+ry^2)/(2 r^2) = iso + aniso/2
    g_pp = (np.exp(1j * kr) / (4.0 * math.pi * r)) * (
        (1.0 + (1j * kr - 1.0) / kr**2)
        + 0.5 * (3.0 * (1.0 - 1j * kr) / kr**2 - 1.0)
    )
    phase = np.exp(-1j * (k_perp[0] * x + k_perp[1] * y))
    order = np.argsort(r, kind="stable")
    r = r[order]
    cum = np.cumsum((g_pp * phase)[order])
    lo = 0.5 * r_max
    w = np.where((r >= lo) & (r <= r_max), np.sin(math.pi * (r - lo) / (r_max - lo)) ** 2, 0.0)
    val = complex(np.sum(w * cum) / np.sum(w))
    return val + 1j * k / (6.0 * math.pi)
