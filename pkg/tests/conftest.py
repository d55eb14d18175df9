"""
Shared Test Fixtures
====================
Pytest fixtures and helpers shared across all test modules.
Plants are small and seeded so every test is deterministic.
"""

import os
import tempfile

import numpy as np
import pytest

from heat2d.heat_plant import HeatModelConfig, benchmark_exosystem, build_heat_plant
from numerics.linalg import spectral_abscissa
from sysmodel.serialization import exosystem_to_dict, state_space_to_dict, write_json
from sysmodel.state_space import StateSpace, exosystem_from_frequencies


# ── Plant Fixtures ──

@pytest.fixture
def scalar_plant():
    """x' = -x + u, y = x."""
    return StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]])


@pytest.fixture
def scalar_exo():
    """Constant reference y_ref = 1 for v0 = 1."""
    return exosystem_from_frequencies([0.0], [1], E=np.zeros((1, 1)), F=[[-1.0]])


def make_random_plant(n: int, m: int, p: int, seed: int, stable: bool = True) -> StateSpace:
    """Seeded random plant; stable plants have spectral abscissa -0.5."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    if stable:
        A = A - (spectral_abscissa(A) + 0.5) * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = 0.1 * rng.standard_normal((p, m))
    return StateSpace(A=A, B=B, C=C, D=D)


@pytest.fixture
def random_plant():
    """Factory fixture for seeded random plants."""
    return make_random_plant


@pytest.fixture
def square_plant():
    """Open-loop unstable 4-state plant with two inputs and two outputs."""
    A = np.array([
        [0.5, 1.0, 0.0, 0.0],
        [0.0, -1.0, 1.0, 0.0],
        [0.0, 0.0, -2.0, 1.0],
        [1.0, 0.0, 0.0, -3.0],
    ])
    B = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    C = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    return StateSpace(A=A, B=B, C=C, D=np.zeros((2, 2)))


@pytest.fixture
def diagonal_exo():
    """Frequencies (0, 2) with a random output disturbance."""
    F = np.array([[1.0, -0.5], [0.3, 2.0]])
    return exosystem_from_frequencies([0.0, 2.0], [1, 1], E=np.zeros((4, 2)), F=F)


@pytest.fixture
def jordan_exo():
    """Ramp plus sinusoid: Jordan block of size 2 at 0 and a simple eigenvalue at i."""
    F = np.array([[1.0, 0.5, -1.0], [0.0, 1.0, 0.5]])
    E = np.zeros((4, 3))
    E[0, 0] = 0.2
    return exosystem_from_frequencies([0.0, 1.0], [2, 1], E=E, F=F)


@pytest.fixture(scope="session")
def heat():
    """Heat benchmark with 10 modes per axis and kappa = 1."""
    return build_heat_plant(HeatModelConfig(modes=10, kappa=1.0))


@pytest.fixture(scope="session")
def heat_exo(heat):
    return benchmark_exosystem(heat.stabilized.n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ── File Fixtures ──

@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


@pytest.fixture
def scalar_files(temp_dir, scalar_plant, scalar_exo):
    """Plant and exosystem JSON files for the scalar example."""
    plant_path = write_json(os.path.join(temp_dir, "plant.json"), state_space_to_dict(scalar_plant))
    exo_path = write_json(os.path.join(temp_dir, "exo.json"), exosystem_to_dict(scalar_exo))
    return plant_path, exo_path
