"""Linear and two-photon optics of sub-wavelength square lattices of
two-level atoms: collective energies, transmission/reflection, group delay,
and photon-photon correlations by two independent routes (truncated-state
time evolution and closed-form scattering amplitudes)."""

from .collective import (
    CollectiveEnergies,
    EvenOddEnergies,
    collective_energies,
    even_odd_energies,
    gamma_continuous,
    self_energy,
)
from .core_model import (
    K_A,
    DriveSpec,
    InvalidParameterError,
    LatticeGeometry,
    LightConeSingularityError,
    collective_width,
    fold_bz,
    make_lattice,
    reciprocal_set,
)
from .greens import AlphaLadder, g_lattice_z0_plus, g_real, g_transverse
from .linear_finite import GaussianMode, curved_positions, trl_coefficients
from .linear_infinite import (
    TRAmplitudes,
    delay_time,
    dual_array_tr,
    fabry_perot_compose,
    single_array_tr,
)
from .trajectory import (
    ModeDetector,
    MomentumDetector,
    TruncatedState,
    dominant_state_fit,
    evolve,
    g2_numeric,
    momentum_density,
    steady_state,
)
from .two_photon_analytic import (
    g2_analytic,
    g2_locus,
    pair_propagator,
    pair_propagator_dual,
    psi_components,
    rho_analytic,
    t_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaLadder",
    "CollectiveEnergies",
    "DriveSpec",
    "EvenOddEnergies",
    "GaussianMode",
    "InvalidParameterError",
    "K_A",
    "LatticeGeometry",
    "LightConeSingularityError",
    "ModeDetector",
    "MomentumDetector",
    "TRAmplitudes",
    "TruncatedState",
    "collective_energies",
    "collective_width",
    "curved_positions",
    "delay_time",
    "dominant_state_fit",
    "dual_array_tr",
    "even_odd_energies",
    "evolve",
    "fabry_perot_compose",
    "fold_bz",
    "g2_analytic",
    "g2_locus",
    "g2_numeric",
    "g_lattice_z0_plus",
    "g_real",
    "g_transverse",
    "gamma_continuous",
    "make_lattice",
    "momentum_density",
    "pair_propagator",
    "pair_propagator_dual",
    "psi_components",
    "reciprocal_set",
    "rho_analytic",
    "self_energy",
    "single_array_tr",
    "steady_state",
    "t_matrix",
    "trl_coefficients",
    "__version__",
]
