import math

import numpy as np
import pytest
from scipy.linalg import expm

from braggtrap.dicke import DickeState, operator_matrix


def random_state(n_atoms: int, rng: np.random.Generator) -> DickeState:
    amps = rng.normal(size=n_atoms + 1) + 1j * rng.normal(size=n_atoms + 1)
    amps /= np.linalg.norm(amps)
    return DickeState(n_atoms, amps)


def dense_axis_rotation(n_atoms: int, axis: str, angle: float) -> np.ndarray:
    """Matrix exponential oracle for exp(-i angle S_axis), small N only."""
    return expm(-1j * angle * operator_matrix(n_atoms, f"s{axis}"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture
def css_plus_x():
    from braggtrap.dicke import make_css

    def factory(n_atoms: int) -> DickeState:
        return make_css(n_atoms, 0.5 * math.pi, 0.0)

    return factory
