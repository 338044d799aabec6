import numpy as np
import pytest

from mrd_adjust import DesignSpec, GROUPS


@pytest.fixture
def small_spec():
    return DesignSpec(I=4, J=4, I_T=2, J_T=2)


@pytest.fixture
def medium_spec():
    return DesignSpec(I=5, J=6, I_T=2, J_T=3)


def random_potentials(spec, seed, d=2, scale=1.0):
    """Potentials plus covariates with genuine signal in every group."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(spec.I, spec.J, d))
    coefs = rng.normal(size=(4, d))
    potentials = {
        g: X @ coefs[k] + scale * rng.normal(size=(spec.I, spec.J))
        for k, g in enumerate(GROUPS)
    }
    return potentials, X


@pytest.fixture
def potentials_and_X(medium_spec):
    return random_potentials(medium_spec, seed=42)
