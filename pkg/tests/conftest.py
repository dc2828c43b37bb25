import numpy as np
import pytest

from mukf.so3 import Rotation
from mukf.state import DIM, NavState, boxplus


def random_state(rng: np.random.Generator) -> NavState:
    """A navigation state with every block populated at plausible magnitudes."""
    return NavState(
        position=rng.normal(0.0, 50.0, 3),
        attitude=Rotation.from_quat(rng.normal(size=4)),
        velocity=rng.normal(0.0, 1.0, 3),
        acceleration=rng.normal(0.0, 0.2, 3),
        mass_sub=rng.normal(1500.0, 200.0, 6),
        damp_lin_sub=rng.normal(60.0, 10.0, 6),
        damp_quad_sub=rng.normal(200.0, 30.0, 6),
        current_vehicle=rng.normal(0.0, 0.3, 2),
        current_below=rng.normal(0.0, 0.3, 2),
        gravity=9.78 + rng.normal(0.0, 0.01),
        gyro_bias=rng.normal(0.0, 1e-6, 3),
        accel_bias=rng.normal(0.0, 1e-3, 3),
        adcp_bias=rng.normal(0.0, 0.01, 2),
    )


def random_tangent(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    d = rng.normal(0.0, scale, DIM)
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def nav_state(rng):
    return random_state(rng)


__all__ = ["random_state", "random_tangent"]
