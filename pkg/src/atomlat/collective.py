"""Momentum-resolved collective energy shifts and decay rates of lattice
spin-wave modes, the even/odd splitting for two parallel arrays, and the
atomic self-energy used by the diagrammatic route.

Conventions (gamma = 1 units): the lattice Green's function maps to energies
through -shift + i*rate = (6 pi / k) * G_pp, so an excitation at transverse
momentum k_perp evolves as e^{(i*shift - rate) t} relative to the bare atom.
The self-energy uses the dressed-pole convention sigma = shift - i*rate.
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
    fold_bz,
    reciprocal_set,
    reciprocal_set_for_tail,
)
from .greens import AlphaLadder, g_lattice_pp, g_lattice_z0_plus_batch

_COUPLING = 6.0 * math.pi  # (6 pi / k) prefactor numerator mapping G_pp to energies


@dataclass(frozen=True)
class CollectiveEnergies:
    """Shift and decay rate (gamma units) of the lattice mode at one (k_perp, z)."""

    delta: float
    gamma: float

    @property
    def pole(self) -> complex:
        return self.delta - 1j * self.gamma


@dataclass(frozen=True)
class EvenOddEnergies:
    """Even/odd collective energies of a dual array at separation L."""

    delta_even: float
    gamma_even: float
    delta_odd: float
    gamma_odd: float
    delta_single: float
    gamma_single: float

    @property
    def pole_even(self) -> complex:
        return self.delta_even - 1j * self.gamma_even

    @property
    def pole_odd(self) -> complex:
        return self.delta_odd - 1j * self.gamma_odd


def _open_channel_gamma(k_perp: np.ndarray, a: float, k: float) -> np.ndarray:
    """Decay rate from the finite sum over open Bragg channels, batched over
    rows of k_perp (which must already be folded)."""
    # open channels satisfy |k_perp + q| < k with k_perp in the first BZ
    recip = reciprocal_set(a, k + math.pi * math.sqrt(2.0) / a)
    kap = k_perp[:, None, :] + recip.vectors[None, :, :]
    kap2 = np.einsum("bmi,bmi->bm", kap, kap)
    if np.any(np.abs(kap2 - k * k) < EPS_CONE):
        raise LightConeSingularityError("a Bragg channel lies within the light-cone band")
    open_ = kap2 < k * k
    kz = np.sqrt(np.where(open_, k * k - kap2, 1.0))
    terms = np.where(open_, (1.0 - kap2 / (2.0 * k * k)) / (2.0 * kz), 0.0)
    return (_COUPLING / k) * terms.sum(axis=1) / a**2


def collective_energies(
    k_perp,
    z: float,
    a: float,
    k: float = K_A,
    ladder: AlphaLadder | None = None,
    include_evanescent: bool = True,
) -> CollectiveEnergies:
    """Collective shift and decay at transverse momentum k_perp and layer
    offset z (z=0 is the in-plane value, requiring regularization)."""
    kp = fold_bz(np.asarray(k_perp, dtype=float), a)
    if z == 0.0:
        g = g_lattice_z0_plus_batch(kp[None, :], k, a, ladder)[0]
        return CollectiveEnergies(
            delta=-(_COUPLING / k) * float(g.real),
            gamma=float(_open_channel_gamma(kp[None, :], a, k)[0]),
        )
    tail = 1e-14 if include_evanescent else 1.0
    recip = reciprocal_set_for_tail(a, abs(z), tail=tail)
    g = g_lattice_pp(kp, z, k, recip)
    return CollectiveEnergies(delta=-(_COUPLING / k) * g.real, gamma=(_COUPLING / k) * g.imag)


def even_odd_energies(
    k_perp,
    L: float,
    a: float,
    k: float = K_A,
    include_evanescent: bool = True,
    ladder: AlphaLadder | None = None,
) -> EvenOddEnergies:
    """Even/odd (symmetric/antisymmetric) collective energies for two parallel
    arrays at separation L: single-array value plus/minus the cross-layer term.

    include_evanescent=False drops closed channels from the cross-layer shift
    (the large-L closed-form regime used by the resonance-locus identities).
    """
    if L <= 0:
        raise InvalidParameterError("layer separation must be positive")
    base = collective_energies(k_perp, 0.0, a, k, ladder)
    cross = collective_energies(k_perp, L, a, k, ladder, include_evanescent=include_evanescent)
    return EvenOddEnergies(
        delta_even=base.delta + cross.delta,
        gamma_even=base.gamma + cross.gamma,
        delta_odd=base.delta - cross.delta,
        gamma_odd=base.gamma - cross.gamma,
        delta_single=base.delta,
        gamma_single=base.gamma,
    )


def gamma_continuous(k_perp, z: float, a: float, k: float = K_A) -> float:
    """Momentum-resolved coupling rate of the continuous transverse mode at
    k_perp to a layer at height z: a^2 * gamma_tilde * (k/k_z) *
    (1 - k_perp^2/2k^2) * cos(k_z |z|) inside the light cone, else 0."""
    k_perp = np.asarray(k_perp, dtype=float)
    kperp2 = float(k_perp @ k_perp)
    if abs(kperp2 - k * k) < EPS_CONE:
        raise LightConeSingularityError("k_perp within the light-cone exclusion band")
    if kperp2 > k * k:
        return 0.0
    kz = math.sqrt(k * k - kperp2)
    gamma_tilde = 3.0 * math.pi / (a * a * k * k)
    return a * a * gamma_tilde * (k / kz) * (1.0 - kperp2 / (2.0 * k * k)) * math.cos(kz * abs(z))


def self_energy(k_perp, a: float, k: float = K_A, ladder: AlphaLadder | None = None) -> complex:
    """Atomic self-energy at the bare transition frequency: the dressed pole
    sits at shift - i*rate, i.e. sigma = -(6 pi / k) G_pp(k_perp, 0)."""
    return complex(self_energy_batch(np.asarray(k_perp, dtype=float)[None, :], a, k, ladder)[0])


def self_energy_batch(
    k_perp,
    a: float,
    k: float = K_A,
    ladder: AlphaLadder | None = None,
) -> np.ndarray:
    """Batched self_energy over rows of k_perp (vectorized regularized sum)."""
    kp = fold_bz(np.atleast_2d(np.asarray(k_perp, dtype=float)), a)
    g = g_lattice_z0_plus_batch(kp, k, a, ladder)
    return -(_COUPLING / k) * g


def self_energy_pm(
    k_perp,
    L: float,
    a: float,
    k: float = K_A,
    include_evanescent: bool = True,
    ladder: AlphaLadder | None = None,
) -> tuple[complex, complex]:
    """Even/odd self-energies of the dual array (same code path as
    even_odd_energies, so the two agree bit for bit)."""
    eo = even_odd_energies(k_perp, L, a, k, include_evanescent, ladder)
    return eo.pole_even, eo.pole_odd


def self_energy_pm_batch(
    k_perp,
    L: float,
    a: float,
    k: float = K_A,
    include_evanescent: bool = True,
    ladder: AlphaLadder | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched even/odd self-energies over rows of k_perp."""
    kp = fold_bz(np.atleast_2d(np.asarray(k_perp, dtype=float)), a)
    base = self_energy_batch(kp, a, k, ladder)
    cross = self_energy_cross_batch(kp, L, a, k, include_evanescent)
    return base + cross, base - cross


def self_energy_cross_batch(
    k_perp,
    L: float,
    a: float,
    k: float = K_A,
    include_evanescent: bool = True,
) -> np.ndarray:
    """Cross-layer part of the dual-array self-energy: even/odd = single +/- cross."""
    kp = fold_bz(np.atleast_2d(np.asarray(k_perp, dtype=float)), a)
    tail = 1e-14 if include_evanescent else 1.0
    recip = reciprocal_set_for_tail(a, L, tail=tail)
    kap = kp[:, None, :] + recip.vectors[None, :, :]
    kap2 = np.einsum("bmi,bmi->bm", kap, kap)
    if np.any(np.abs(kap2 - k * k) < EPS_CONE):
        raise LightConeSingularityError("a Bragg channel lies within the light-cone band")
    kz = np.sqrt((k * k - kap2).astype(complex))
    kz = np.where(kz.imag < 0, -kz, kz)
    g_cross = ((1j / (2.0 * kz)) * np.exp(1j * kz * L) * (1.0 - kap2 / (2.0 * k * k))).sum(
        axis=1
    ) / a**2
    return -(_COUPLING / k) * g_cross
