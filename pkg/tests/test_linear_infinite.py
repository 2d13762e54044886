"""Closed-form transmission/reflection amplitudes and delay times."""

import cmath
import math

import numpy as np
import pytest

from atomlat.core_model import K_A, InvalidParameterError
from atomlat.collective import collective_energies, even_odd_energies
from atomlat.linear_infinite import (
    CavityDivergenceError,
    dual_array_tr,
    delay_time,
    fabry_perot_compose,
    single_array_tr,
)


def locus_detuning(L, a=0.6):
    """Detuning on the perfect-transmission curve tan(kL) = -(d - shift)/width."""
    ce = collective_energies((0.0, 0.0), 0.0, a)
    return ce.delta - ce.gamma * math.tan(K_A * L), ce


# ---------------------------------------------------------------- conservation


@pytest.mark.parametrize("a", [0.4, 0.6, 0.8])
def test_single_energy_conservation_no_bragg(a):
    # subwavelength spacing at normal incidence: one channel, T + R = 1 exactly
    for delta in np.linspace(-4.0, 4.0, 41):
        res = single_array_tr((0.0, 0.0), float(delta), a)
        assert len(res.channels) == 1
        assert abs(res.transmittance + res.reflectance - 1.0) < 1e-12


def test_single_conservation_oblique(rng):
    for _ in range(20):
        kp = rng.uniform(-2.0, 2.0, size=2)
        res = single_array_tr(kp, float(rng.uniform(-3, 3)), 0.6)
        assert abs(res.transmittance + res.reflectance - 1.0) < 1e-12


def test_channel_summed_conservation_with_bragg():
    # a=0.8 at oblique incidence opens a Bragg channel; the weighted sum over
    # all open channels is still unity
    res = single_array_tr((2.0, 0.0), 0.7, 0.8)
    assert len(res.channels) > 1
    total = sum(c.weight * (abs(c.t) ** 2 + abs(c.r) ** 2) for c in res.channels)
    assert abs(total - 1.0) < 1e-10


def test_dual_energy_conservation():
    for delta in np.linspace(-3.0, 3.0, 31):
        for L in (0.3, 0.45, 0.8):
            res = dual_array_tr((0.0, 0.0), float(delta), L, 0.6)
            assert abs(res.transmittance + res.reflectance - 1.0) < 1e-12


# ------------------------------------------------------------------ resonances


def test_single_perfect_reflection_on_resonance():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    res = single_array_tr((0.0, 0.0), ce.delta, 0.6)
    assert abs(res.reflectance - 1.0) < 1e-12
    assert abs(res.t) < 1e-12


def test_single_half_reflection_at_width():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    res = single_array_tr((0.0, 0.0), ce.delta + ce.gamma, 0.6)
    assert abs(res.reflectance - 0.5) < 1e-12


def test_dual_unit_transmission_on_locus():
    # without evanescent coupling the transparency condition is exact and the
    # transmitted phase is -e^{-2ikL}
    for L in np.linspace(0.26, 0.49, 12):
        delta, _ = locus_detuning(float(L))
        t = dual_array_tr((0.0, 0.0), delta, float(L), 0.6, include_evanescent=False).t
        assert abs(abs(t) - 1.0) < 1e-9
        assert abs(t + cmath.exp(-2j * K_A * L)) < 1e-9


def test_dual_equals_fabry_perot():
    # the dual-array amplitude is the two-mirror cavity amplitude up to the
    # free-propagation phase e^{-ikL} of the reference planes
    for L in (0.3, 0.45, 0.62):
        for delta in (-1.3, 0.2, 0.9, 2.4):
            s = single_array_tr((0.0, 0.0), delta, 0.6)
            fp = fabry_perot_compose(s.t, s.r, L)
            td = dual_array_tr((0.0, 0.0), delta, L, 0.6, include_evanescent=False).t
            assert abs(td - fp * cmath.exp(-1j * K_A * L)) < 1e-10


def test_cavity_divergence_guard():
    with pytest.raises(CavityDivergenceError):
        fabry_perot_compose(0.0, 1.0, 0.5, K_A)


# ----------------------------------------------------------------- delay times


def test_single_delay_on_resonance():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    tau = delay_time("single", (0.0, 0.0), ce.delta, 0.6)
    assert abs(tau - 1.0 / ce.gamma) < 1e-9


def test_dual_delay_on_locus():
    # on the transparency curve the delay equals the inverse subradiant rate
    # 2*width/x^2 with x the detuning from the single-array resonance
    for L in (0.35, 0.4, 0.45):
        delta, ce = locus_detuning(L)
        x = delta - ce.delta
        tau = delay_time("dual", (0.0, 0.0), delta, 0.6, L, include_evanescent=False)
        assert abs(tau - 2.0 * ce.gamma / x**2) < 1e-6 * tau


def test_delay_analytic_matches_finite_difference(rng):
    for _ in range(10):
        delta = float(rng.uniform(-2.0, 2.0))
        t_an = delay_time("single", (0.0, 0.0), delta, 0.6)
        t_fd = delay_time("single", (0.0, 0.0), delta, 0.6, method="finite-difference")
        assert abs(t_an - t_fd) < 1e-6 * abs(t_an)
    for _ in range(10):
        delta = float(rng.uniform(-2.0, 2.0))
        t_an = delay_time("dual", (0.0, 0.0), delta, 0.6, 0.4)
        t_fd = delay_time("dual", (0.0, 0.0), delta, 0.6, 0.4, method="finite-difference")
        assert abs(t_an - t_fd) < 1e-6 * abs(t_an)


# ----------------------------------------------------------------- small gaps


def test_small_gap_dimer_splitting():
    # for separations far below the wavelength, half the even/odd shift
    # splitting approaches the near-field exchange 3/(2 (kL)^3)
    for kl in (0.2, 0.3, 0.4):
        L = kl / K_A
        eo = even_odd_energies((0.0, 0.0), L, 0.6, K_A, True, None)
        half = (eo.delta_even - eo.delta_odd) / 2.0
        j = 3.0 / (2.0 * kl**3)
        assert abs(half - j) < 0.05 * j


# ------------------------------------------------------------------ validation


def test_invalid_system_rejected():
    with pytest.raises(InvalidParameterError):
        delay_time("triple", (0.0, 0.0), 0.0, 0.6)
    with pytest.raises(InvalidParameterError):
        delay_time("dual", (0.0, 0.0), 0.0, 0.6)  # missing L
    with pytest.raises(InvalidParameterError):
        delay_time("single", (0.0, 0.0), 0.0, 0.6, method="spline")
