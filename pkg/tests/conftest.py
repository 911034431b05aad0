import numpy as np
import pytest

from thermolyap import (
    Grid1D,
    HomogeneousReference,
    StateFields,
    covolume_gas_eos,
    ideal_gas_eos,
)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def ideal():
    return ideal_gas_eos(cv_ref=1.0, gamma=1.4, theta_ref=1.0, rho_ref=1.0)


@pytest.fixture
def covolume():
    return covolume_gas_eos(cv_ref=1.0, gamma=1.4, b=0.1, theta_ref=1.0,
                            rho_ref=1.0)


@pytest.fixture
def unit_ref():
    return HomogeneousReference(theta_hat=1.0, rho_hat=1.0)


@pytest.fixture
def grid8():
    return Grid1D(length=1.0, n_cells=8)


@pytest.fixture
def grid32():
    return Grid1D(length=1.0, n_cells=32)


def random_state(rng, n, lo=-1.0, hi=1.0):
    """Admissible fields with log-uniform rho/theta around 1."""
    return StateFields(np.exp(rng.uniform(lo, hi, n)),
                       rng.uniform(-1.0, 1.0, n),
                       np.exp(rng.uniform(lo, hi, n)))


def random_direction(rng, n, amplitude=1.0):
    return StateFields(rng.uniform(-amplitude, amplitude, n),
                       rng.uniform(-amplitude, amplitude, n),
                       rng.uniform(-amplitude, amplitude, n))
