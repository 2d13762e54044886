import numpy as np
import pytest

# Frozen regularized in-plane lattice sums (plus-polarized component) at
# k_perp=0, computed once from the real-space shell-averaged oracle and the
# alpha-ladder; unit system: lengths in wavelengths, rates in single-atom
# decay units.
G_PP_Z0 = {
    0.4: -0.343430832803 + 0.497359197162j,
    0.6: -0.185023400399 + 0.221048532072j,
    0.8: -0.00323506720387 + 0.124339799291j,
}

SHIFT_K0 = {0.4: 1.03029249841, 0.6: 0.555070201197, 0.8: 0.00970520161161}


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260826)
