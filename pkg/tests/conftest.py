import numpy as np
import pytest

from stefanlab.verify import VerificationContext


@pytest.fixture(scope="session")
def ctx():
    """Shared lazily-built verification artifacts (runs, tracks, spectra)."""
    return VerificationContext()


@pytest.fixture(scope="session")
def grid512():
    from stefanlab.weighted import RadialGrid

    return RadialGrid(512)


@pytest.fixture(scope="session")
def grid1024():
    from stefanlab.weighted import RadialGrid

    return RadialGrid(1024)


@pytest.fixture(scope="session")
def zeros12():
    from stefanlab import bessel

    return bessel.j0_zeros(12)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
