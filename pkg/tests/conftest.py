import cmath
import math

import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import strategies as st

from singlerail.models import SingleRailQubit
from singlerail.qubit_model import canonicalize

SQRT_HALF = 1.0 / math.sqrt(2.0)


@st.composite
def qubits(draw, min_efficiency: float = 1e-3, max_efficiency: float = 1.0, min_beta: float = 0.05) -> SingleRailQubit:
    """Qubits with |β| and E bounded away from zero, so 1e-12 comparisons stay meaningful."""
    angle = draw(st.floats(min_value=math.asin(min_beta), max_value=math.pi / 2))
    phase = draw(st.floats(min_value=0.0, max_value=2.0 * math.pi))
    efficiency = draw(st.floats(min_value=min_efficiency, max_value=max_efficiency))
    return canonicalize(math.cos(angle), math.sin(angle) * cmath.exp(1j * phase), efficiency)


transmissivities = st.floats(min_value=0.05, max_value=1.0)
quadratures = st.floats(min_value=-3.0, max_value=3.0)
phases = st.floats(min_value=0.0, max_value=2.0 * math.pi)
weights = st.floats(min_value=0.0, max_value=1.0)


def random_qubit(
    rng: np.random.Generator,
    efficiency: tuple[float, float] = (0.01, 1.0),
    beta_square: tuple[float, float] = (0.0025, 1.0),
) -> SingleRailQubit:
    b = rng.uniform(*beta_square)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    return canonicalize(math.sqrt(1.0 - b), math.sqrt(b) * cmath.exp(1j * phase), rng.uniform(*efficiency))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def photon() -> SingleRailQubit:
    return canonicalize(0.0, 1.0, 0.8)


@pytest.fixture
def standard_target() -> SingleRailQubit:
    return canonicalize(SQRT_HALF, SQRT_HALF, 0.85)


@pytest.fixture
def pure_plus() -> SingleRailQubit:
    return canonicalize(SQRT_HALF, SQRT_HALF, 1.0)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner(mix_stderr=False)
