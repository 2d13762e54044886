"""Closed-form plane-wave transmission/reflection amplitudes and delay times
for infinite single and dual arrays, including per-Bragg-channel amplitudes
and the Fabry-Perot composition of two single-array mirrors."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core_model import (
    EPS_CONE,
    K_A,
    InvalidParameterError,
    LightConeSingularityError,
    reciprocal_set,
)
from .collective import collective_energies, even_odd_energies, gamma_continuous
from .greens import AlphaLadder


class ZeroTransmissionError(ZeroDivisionError):
    pass


class CavityDivergenceError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class ChannelTR:
    """Amplitudes scattered into one open Bragg channel k_perp + q.

    weight is the flux-and-polarization factor that makes the channel-summed
    intensity conservation Sum_m weight_m (|t_m|^2 + |r_m|^2) = 1 exact:
    (k_z,m / k_z,0) * (1 - k_perp^2/2k^2) / (1 - |k_perp+q_m|^2/2k^2).
    """

    q: tuple[float, float]
    t: complex
    r: complex
    weight: float


@dataclass(frozen=True)
class TRAmplitudes:
    t: complex
    r: complex
    channels: tuple[ChannelTR, ...] = field(default=())

    @property
    def transmittance(self) -> float:
        return abs(self.t) ** 2

    @property
    def reflectance(self) -> float:
        return abs(self.r) ** 2


def _open_channels(k_perp: np.ndarray, a: float, k: float):
    """Open Bragg channels (q, k_z, per-channel rate / a^2) for incident k_perp."""
    recip = reciprocal_set(a, k + math.pi * math.sqrt(2.0) / a)
    out = []
    for q in recip.vectors:
        kap = k_perp + q
        kap2 = float(kap @ kap)
        if abs(kap2 - k * k) < EPS_CONE:
            raise LightConeSingularityError("a Bragg channel lies within the light-cone band")
        if kap2 >= k * k:
            continue
        kz = math.sqrt(k * k - kap2)
        rate = gamma_continuous(kap, 0.0, a, k) / a**2
        out.append((q, kz, rate))
    return out


def _channel_weight(kz: float, kz0: float, kap2: float, kp2: float, k: float) -> float:
    return (kz / kz0) * (1.0 - kp2 / (2.0 * k * k)) / (1.0 - kap2 / (2.0 * k * k))


# the collective energies and channel lists are detuning-independent, so a
# detuning sweep at fixed geometry only ever needs them once
@lru_cache(maxsize=256)
def _ce_cached(kx: float, ky: float, a: float, k: float):
    return collective_energies(np.array([kx, ky]), 0.0, a, k)


@lru_cache(maxsize=256)
def _eo_cached(kx: float, ky: float, L: float, a: float, k: float, include_evanescent: bool):
    return even_odd_energies(np.array([kx, ky]), L, a, k, include_evanescent)


@lru_cache(maxsize=256)
def _channels_cached(kx: float, ky: float, a: float, k: float):
    return _open_channels(np.array([kx, ky]), a, k)


def single_array_tr(
    k_perp,
    delta: float,
    a: float,
    k: float = K_A,
    ladder: AlphaLadder | None = None,
) -> TRAmplitudes:
    """Plane-wave amplitudes through one infinite array.

    The q=0 channel follows the complex-Lorentzian forms t = 1 - i*rate0/D,
    r = -i*rate0/D with D = delta - shift + i*rate_total; additional open
    Bragg channels (spacing > half wavelength) are reported with their
    conservation weights.
    """
    k_perp = np.asarray(k_perp, dtype=float)
    if ladder is None:
        ce = _ce_cached(float(k_perp[0]), float(k_perp[1]), a, k)
    else:
        ce = collective_energies(k_perp, 0.0, a, k, ladder)
    D = delta - ce.delta + 1j * ce.gamma
    kp2 = float(k_perp @ k_perp)
    kz0 = math.sqrt(k * k - kp2)
    channels = []
    for q, kz, rate in _channels_cached(float(k_perp[0]), float(k_perp[1]), a, k):
        is_zero = bool(np.allclose(q, 0.0))
        amp = -1j * rate / D
        kap2 = float((k_perp + q) @ (k_perp + q))
        channels.append(
            ChannelTR(
                q=(float(q[0]), float(q[1])),
                t=(1.0 if is_zero else 0.0) + amp,
                r=amp,
                weight=_channel_weight(kz, kz0, kap2, kp2, k),
            )
        )
    zero = next(c for c in channels if np.allclose(c.q, 0.0))
    return TRAmplitudes(t=zero.t, r=zero.r, channels=tuple(channels))


def dual_array_tr(
    k_perp,
    delta: float,
    L: float,
    a: float,
    k: float = K_A,
    include_evanescent: bool = True,
    ladder: AlphaLadder | None = None,
) -> TRAmplitudes:
    """Plane-wave amplitudes through two parallel arrays at separation L,
    written through the even/odd collective modes."""
    k_perp = np.asarray(k_perp, dtype=float)
    if ladder is None:
        eo = _eo_cached(float(k_perp[0]), float(k_perp[1]), L, a, k, include_evanescent)
    else:
        eo = even_odd_energies(k_perp, L, a, k, include_evanescent, ladder)
    Dp = delta - eo.delta_even + 1j * eo.gamma_even
    Dm = delta - eo.delta_odd + 1j * eo.gamma_odd
    kp2 = float(k_perp @ k_perp)
    kz0 = math.sqrt(k * k - kp2)
    c0 = math.cos(kz0 * L / 2.0)
    s0 = math.sin(kz0 * L / 2.0)
    channels = []
    for q, kz, rate in _channels_cached(float(k_perp[0]), float(k_perp[1]), a, k):
        is_zero = bool(np.allclose(q, 0.0))
        cm = math.cos(kz * L / 2.0)
        sm = math.sin(kz * L / 2.0)
        even = cm * c0 / Dp
        odd = sm * s0 / Dm
        kap2 = float((k_perp + q) @ (k_perp + q))
        channels.append(
            ChannelTR(
                q=(float(q[0]), float(q[1])),
                t=(1.0 if is_zero else 0.0) - 2j * rate * (even + odd),
                r=-2j * rate * (even - odd),
                weight=_channel_weight(kz, kz0, kap2, kp2, k),
            )
        )
    zero = next(c for c in channels if np.allclose(c.q, 0.0))
    return TRAmplitudes(t=zero.t, r=zero.r, channels=tuple(channels))


def fabry_perot_compose(t0: complex, r0: complex, L: float, k: float = K_A) -> complex:
    """Cavity transmission of two identical mirrors with single-pass amplitudes
    (t0, r0) separated by L: t0^2 e^{ikL} / (1 - r0^2 e^{2ikL})."""
    loop = r0 * r0 * cmath.exp(2j * k * L)
    if abs(loop - 1.0) < 1e-14:
        raise CavityDivergenceError("cavity round-trip factor too close to unity")
    return t0 * t0 * cmath.exp(1j * k * L) / (1.0 - loop)


def delay_time(
    system: str,
    k_perp,
    delta: float,
    a: float,
    L: float | None = None,
    k: float = K_A,
    method: str = "analytic",
    include_evanescent: bool = True,
    fd_step: float | None = None,
    ladder: AlphaLadder | None = None,
) -> float:
    """Group delay of the dominant scattered wave, in units of the single-atom
    lifetime: the detuning derivative of the scattered phase.

    For the single array the transmission vanishes on resonance, so the delay
    is defined through the reflection amplitude; for the dual array through
    the transmission amplitude.
    """
    if system not in ("single", "dual"):
        raise InvalidParameterError("system must be 'single' or 'dual'")
    if system == "dual" and (L is None or L <= 0):
        raise InvalidParameterError("dual system requires a positive separation L")
    k_perp = np.asarray(k_perp, dtype=float)

    def amp(d: float) -> complex:
        if system == "single":
            return single_array_tr(k_perp, d, a, k, ladder).r
        return dual_array_tr(k_perp, d, L, a, k, include_evanescent, ladder).t

    if method == "finite-difference":
        a0 = amp(delta)
        if abs(a0) < 1e-300:
            raise ZeroTransmissionError("scattered amplitude vanishes at this detuning")
        if fd_step is None:
            gamma0 = collective_energies(k_perp, 0.0, a, k, ladder).gamma
            fd_step = 1e-6 * gamma0
        return float(((amp(delta + fd_step) - amp(delta - fd_step)) / (2.0 * fd_step * a0)).imag)
    if method != "analytic":
        raise InvalidParameterError("method must be 'analytic' or 'finite-difference'")

    if system == "single":
        ce = collective_energies(k_perp, 0.0, a, k, ladder)
        D = delta - ce.delta + 1j * ce.gamma
        # r = -i*rate/D gives (1/r) dr/ddelta = -1/D
        return float(ce.gamma / abs(D) ** 2)
    eo = even_odd_energies(k_perp, L, a, k, include_evanescent, ladder)
    Dp = delta - eo.delta_even + 1j * eo.gamma_even
    Dm = delta - eo.delta_odd + 1j * eo.gamma_odd
    t = 1.0 - 1j * eo.gamma_even / Dp - 1j * eo.gamma_odd / Dm
    if abs(t) < 1e-300:
        raise ZeroTransmissionError("transmission vanishes at this detuning")
    dt_dd = 1j * eo.gamma_even / Dp**2 + 1j * eo.gamma_odd / Dm**2
    return float((dt_dd / t).imag)
