import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomlat.core_model import K_A, reciprocal_set
from atomlat.greens import (
    AlphaLadder,
    OriginEvaluationError,
    g_lattice,
    g_lattice_pp,
    g_lattice_z0_plus,
    g_lattice_z0_realspace,
    g_real,
    g_real_pp,
    g_transverse,
    g_transverse_pp,
)
from conftest import G_PP_Z0

E_PLUS = np.array([1.0, 1.0j, 0.0]) / math.sqrt(2.0)


def test_g_real_on_axis_zz():
    z = 0.7
    g = g_real((0.0, 0.0, z))
    expected = np.exp(1j * K_A * z) * (1 - 1j * K_A * z) / (2 * math.pi * K_A**2 * z**3)
    assert g[2, 2] == pytest.approx(expected, rel=1e-12)


def test_g_real_origin_limit_imag():
    g = g_real((1e-4, 0.0, 0.0))
    val = np.conj(E_PLUS) @ g @ E_PLUS
    assert val.imag == pytest.approx(K_A / (6 * math.pi), abs=1e-6)


def test_g_real_origin_error():
    with pytest.raises(OriginEvaluationError):
        g_real((0.0, 0.0, 0.0))


def test_g_real_finite_difference_oracle():
    # (I + grad grad / k^2) e^{ikr}/4pi r by central differences, step 1e-5
    r0 = np.array([0.3, 0.2, 0.7])
    h = 1e-5

    def scalar(r):
        d = np.linalg.norm(r)
        return np.exp(1j * K_A * d) / (4 * math.pi * d)

    hess = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            ei = np.eye(3)[i] * h
            ej = np.eye(3)[j] * h
            hess[i, j] = (
                scalar(r0 + ei + ej) - scalar(r0 + ei - ej)
                - scalar(r0 - ei + ej) + scalar(r0 - ei - ej)
            ) / (4 * h * h)
    oracle = np.eye(3) * scalar(r0) + hess / K_A**2
    assert np.allclose(g_real(r0), oracle, rtol=1e-5, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.0, 2 * math.pi), st.floats(-1.0, 1.0))
def test_g_real_symmetric_and_conjugation(r, phi, cz):
    r_vec = r * np.array([math.cos(phi) * math.sqrt(1 - cz**2),
                          math.sin(phi) * math.sqrt(1 - cz**2), cz])
    g = g_real(r_vec)
    assert np.allclose(g, g.T, rtol=1e-12)
    assert np.allclose(np.conj(g), g_real(r_vec, -K_A), rtol=1e-12)


def test_transversality_far_field():
    r_vec = np.array([120.0, 80.0, 110.0])  # k|r| > 1e3
    g = g_real(r_vec)
    rhat = r_vec / np.linalg.norm(r_vec)
    assert abs(rhat @ g @ rhat) / np.linalg.norm(g) < 1e-2


def test_g_transverse_normal_incidence():
    z = 0.8
    val = g_transverse_pp((0.0, 0.0), z)
    assert val == pytest.approx(1j / (2 * K_A) * np.exp(1j * K_A * z), rel=1e-12)


def test_g_transverse_evanescent_branch():
    z = 0.5
    val = g_transverse((2 * K_A, 0.0), z)
    # decay rate sqrt((2k)^2 - k^2) = sqrt(3) k, no oscillation
    assert abs(val[2, 2]) == pytest.approx(
        abs(val[2, 2].real**2 + val[2, 2].imag**2) ** 0.5
    )
    scale = np.linalg.norm(g_transverse((2 * K_A, 0.0), z + 0.1)) / np.linalg.norm(val)
    assert scale == pytest.approx(math.exp(-math.sqrt(3) * K_A * 0.1), rel=1e-9)


def test_branch_continuity_across_cone():
    # k_z(kperp^2) continued through the upper half plane: i*positive for
    # evanescent momenta, meeting the propagating branch at zero on the cone
    from atomlat.greens import _kz

    eps = 1e-6 * K_A**2
    inside = _kz(K_A**2 - eps, K_A)
    outside = _kz(K_A**2 + eps, K_A)
    assert inside.real > 0 and abs(inside.imag) < 1e-12
    assert outside.imag > 0 and abs(outside.real) < 1e-12
    assert abs(inside - outside) < 2 * math.sqrt(eps)


def test_g_lattice_reciprocal_sum_identity():
    a = 0.6
    recip = reciprocal_set(a, 50.0)
    for kp, z in [((0.0, 0.0), 1.5), ((1.0, -2.0), 0.7), ((3.0, 2.0), 2.0)]:
        direct = g_lattice(np.asarray(kp), z, K_A, recip)
        total = np.zeros((3, 3), dtype=complex)
        for q in recip.vectors:
            total += g_transverse(np.asarray(kp) + q, z) / a**2
        assert np.allclose(direct, total, rtol=1e-12)


def test_g_lattice_qmax_doubling():
    a = 0.6
    v1 = g_lattice_pp(np.zeros(2), 1.5, K_A, reciprocal_set(a, 60.0))
    v2 = g_lattice_pp(np.zeros(2), 1.5, K_A, reciprocal_set(a, 120.0))
    assert abs(v1 - v2) < 1e-10


@pytest.mark.parametrize("a", [0.4, 0.6, 0.8])
def test_z0_regularized_vs_realspace(a):
    ladder = g_lattice_z0_plus((0.0, 0.0), K_A, a)
    direct = g_lattice_z0_realspace((0.0, 0.0), K_A, a)
    assert abs(ladder.real - direct.real) / abs(direct.real) < 1e-4
    assert ladder == pytest.approx(G_PP_Z0[a], rel=1e-6)


def test_z0_ladder_invariance():
    a = 0.6
    v1 = g_lattice_z0_plus((0.0, 0.0), K_A, a, AlphaLadder(alpha0=0.01, ratio=0.5))
    v2 = g_lattice_z0_plus((0.0, 0.0), K_A, a, AlphaLadder(alpha0=0.005, ratio=0.25))
    assert abs(v1 - v2) / abs(v1) < 2e-8


def test_z0_imag_is_width():
    # imaginary part of the in-plane sum carries the collective decay:
    # 3*pi/(a^2 k^2) in rate units maps to k/(4*pi) * (lattice factor)
    a = 0.6
    val = g_lattice_z0_plus((0.0, 0.0), K_A, a)
    width = (6 * math.pi / K_A) * val.imag
    assert width == pytest.approx(3 * math.pi / (a * K_A) ** 2, abs=1e-10)
