"""Closed-form two-photon quantities: pair propagator, scattering T-matrix,
momentum densities and correlation functions."""

import math
import warnings

import numpy as np
import pytest

from atomlat.core_model import K_A, InvalidParameterError
from atomlat.collective import collective_energies
from atomlat.two_photon_analytic import (
    DoublingConvergenceError,
    FlatnessWarning,
    LocusCorrelation,
    UndefinedCorrelatorError,
    flatness_deviation,
    g2_analytic,
    g2_locus,
    pair_propagator,
    pair_propagator_dual,
    pair_propagator_spectral,
    psi_components,
    rho_analytic,
    t_matrix,
)


def locus_detuning(L, a=0.6):
    ce = collective_energies((0.0, 0.0), 0.0, a)
    return ce.delta - ce.gamma * math.tan(K_A * L), ce


# ------------------------------------------------------------- pair propagator


def test_pair_propagator_matches_frequency_quadrature():
    # closed form against the independent frequency-integral oracle
    for kk, q, nu in [
        ((0.3, -0.2), (1.1, 0.4), 0.9),
        ((0.0, 0.0), (-2.0, 1.5), -1.4),
    ]:
        closed = pair_propagator(kk, nu, q, 0.6)
        oracle = pair_propagator_spectral(kk, nu, q, 0.6)
        assert abs(closed - oracle) < 1e-6 * abs(closed)


def test_pair_propagator_momentum_exchange_symmetry(rng):
    # exchanging q <-> K - q leaves the propagator unchanged
    for _ in range(10):
        kk = rng.uniform(-2, 2, 2)
        q = rng.uniform(-4, 4, 2)
        v1 = pair_propagator(kk, 0.7, q, 0.6)
        v2 = pair_propagator(kk, 0.7, kk - q, 0.6)
        assert v1 == pytest.approx(v2, rel=1e-12)


def test_pair_propagator_dual_structure():
    out = pair_propagator_dual((0.1, 0.2), 0.5, (0.9, -0.3), 0.45, 0.6)
    assert out.shape == (2, 2)
    # the off-diagonal (mixed-parity) entries are equal by construction only
    # when both momenta see the same even/odd energies; at least they are the
    # transposed pair of each other for exchanged parity labels
    swapped = pair_propagator_dual((0.1, 0.2), 0.5, np.asarray((0.1, 0.2)) - (0.9, -0.3), 0.45, 0.6)
    assert out[0, 1] == pytest.approx(swapped[1, 0], rel=1e-12)


# --------------------------------------------------------------------- T-matrix


def test_t_matrix_single_doubling_certificate():
    res = t_matrix((0.0, 0.0), 0.8, 0.6)
    assert len(res.values) == 1
    assert res.doubling_change < 1e-3


def test_t_matrix_flat_over_zone():
    # at the pair resonance the amplitude barely varies across the zone
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    b = 2.0 * math.pi / 0.6
    mags = [
        abs(t_matrix((fx * b, fy * b), 2.0 * ce.delta, 0.6).value)
        for fx, fy in [(0.0, 0.0), (0.25, 0.0), (0.5, 0.5), (0.3, -0.2)]
    ]
    assert max(mags) / min(mags) < 2.0


def test_t_matrix_dual_two_channels():
    res = t_matrix((0.0, 0.0), 1.2, 0.6, L=0.45, include_evanescent=False)
    assert len(res.values) == 2


def test_t_matrix_grid_floor():
    with pytest.raises(InvalidParameterError):
        t_matrix((0.0, 0.0), 0.8, 0.6, n_base=16)


def test_t_matrix_dual_divergence_detected():
    # far-detuned dual case with real poles crossing the zone: the doubling
    # check must refuse rather than return an unconverged number
    delta, _ = locus_detuning(0.2)
    with pytest.raises(DoublingConvergenceError):
        t_matrix((0.0, 0.0), 2.0 * delta, 0.6, L=0.2, include_evanescent=False, rtol=5e-3)


# ------------------------------------------------------------------- densities


def test_psi_components_consistent_with_density():
    # the component breakdown and the direct density agree exactly
    tm = 0.5 + 0.1j
    for k1, k2 in [((0.4, 0.0), (-0.4, 0.0)), ((1.0, 0.5), (0.2, -0.7))]:
        pc = psi_components(k1, k2, 0.7, 0.6, 1.5, tmat=tm)
        rho = rho_analytic(k1, k2, 0.7, 0.6, 1.5, tmat=tm)
        assert pc.density == pytest.approx(rho, rel=1e-10)


def test_rho_batch_matches_scalar():
    tm = 0.3 - 0.2j
    k1 = np.array([[0.4, 0.0], [1.0, 0.5]])
    k2 = np.array([[-0.4, 0.0], [0.2, -0.7]])
    batch = rho_analytic(k1, k2, 0.7, 0.6, 1.5, tmat=tm)
    for i in range(2):
        assert batch[i] == pytest.approx(rho_analytic(k1[i], k2[i], 0.7, 0.6, 1.5, tmat=tm))


def test_rho_rejects_negative_time():
    with pytest.raises(InvalidParameterError):
        rho_analytic((0.0, 0.0), (0.0, 0.0), 0.7, 0.6, 1.5, t=-1.0, tmat=1.0)


def test_paraxial_guard():
    with pytest.raises(InvalidParameterError):
        psi_components((0.0, 0.0), (0.0, 0.0), 0.7, 0.6, 0.5, tmat=1.0)


def test_flatness_warning():
    assert flatness_deviation(0.6, 8.0) < 0.05
    # a=0.8 near the channel-opening edge: the collective width varies
    # strongly over a tight beam and the reduced forms must warn
    assert flatness_deviation(0.8, 1.2) > 0.05
    with pytest.warns(FlatnessWarning):
        rho_analytic((0.0, 0.0), (0.1, 0.0), 0.7, 0.8, 1.2, tmat=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rho_analytic((0.0, 0.0), (0.1, 0.0), 0.7, 0.6, 8.0, tmat=1.0)


# ----------------------------------------------------------------- correlations


def test_single_g2_depends_on_scaled_t_matrix_only():
    # the zero-delay correlation is a function of (a^2 / 2 pi w0^2) * T / D
    # alone: rescaling the waist while rescaling T by the same area factor
    # leaves it unchanged
    tm = 0.8 + 0.3j
    g_a = g2_analytic(0.7, 0.6, 1.5, 0.0, tmat=tm)
    g_b = g2_analytic(0.7, 0.6, 3.0, 0.0, tmat=tm * (3.0 / 1.5) ** 2)
    assert g_a == pytest.approx(g_b, rel=1e-12)


def test_single_g2_relaxes_to_one():
    g = g2_analytic(0.7, 0.6, 1.5, np.array([0.0, 40.0]), tmat=0.5 + 0.1j)
    assert abs(g[1] - 1.0) < 1e-8


def test_dual_locus_zero_delay_even_independent():
    # on the transparency locus the t=0 transmitted correlation involves only
    # the odd-channel amplitude
    delta, _ = locus_detuning(0.45)
    g_1 = g2_locus(delta, 0.45, 0.6, 2.0, tmat=(0.5 + 0.1j, 0.3 - 0.2j))
    g_2 = g2_locus(delta, 0.45, 0.6, 2.0, tmat=(5.0 - 2.0j, 0.3 - 0.2j))
    assert g_1.evaluate(0.0) == pytest.approx(g_2.evaluate(0.0), rel=1e-12)


def test_locus_rates_sum_rule():
    delta, ce = locus_detuning(0.45)
    loc = g2_locus(delta, 0.45, 0.6, 2.0, tmat=(1.0, 1.0))
    assert loc.gamma_sub + loc.gamma_super == pytest.approx(2.0 * ce.gamma, rel=1e-12)
    assert loc.shift == pytest.approx(2.0 * (delta - ce.delta), rel=1e-12)


def test_locus_asymptotic_matches_full_form():
    # scale-separated locus point: the two-exponential asymptotic tracks the
    # full parity-contracted correlation
    delta, _ = locus_detuning(0.45)
    loc = g2_locus(delta, 0.45, 0.6, 2.0)
    t = np.linspace(0.0, 8.0, 17)
    full = g2_analytic(delta, 0.6, 2.0, t, L=0.45, include_evanescent=False)
    assert np.max(np.abs(loc.evaluate(t) - full)) < 0.15 * np.max(np.abs(full))


def test_locus_degenerate_point_rejected():
    ce = collective_energies((0.0, 0.0), 0.0, 0.6)
    with pytest.raises(UndefinedCorrelatorError):
        g2_locus(ce.delta, 0.25, 0.6, 2.0, tmat=(1.0, 1.0))


def test_g2_rejects_negative_time():
    with pytest.raises(InvalidParameterError):
        g2_analytic(0.7, 0.6, 1.5, -0.5, tmat=1.0)
