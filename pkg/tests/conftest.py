import math

import numpy as np
import pytest

from irs_sense.channel import ArrayGeometry, PathLossModel, gen_channel, geometry_from_positions
from irs_sense.metrics import SensingSpec, dbm_to_watts

REFERENCE_LAYOUT = ((0.0, 0.0), (1.0, 1.0), (1.0, -5.0))


@pytest.fixture(scope="session")
def scen():
    return geometry_from_positions(*REFERENCE_LAYOUT)


@pytest.fixture(scope="session")
def model():
    return PathLossModel()


@pytest.fixture(scope="session")
def spec():
    return SensingSpec(dbm_to_watts(-90.0), 256, 1e-2)


@pytest.fixture(scope="session")
def p0():
    return dbm_to_watts(30.0)


@pytest.fixture
def make_channel(scen, model):
    def _make(kind="Rayleigh", n=8, seed=0, m_t=4, m_r=4, k_factor=1.0):
        return gen_channel(kind, ArrayGeometry(m_t, m_r, n), scen, model, seed=seed, k_factor=k_factor)

    return _make


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2.0


def random_phases(rng, n):
    return np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, n))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
