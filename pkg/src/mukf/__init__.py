"""Manifold unscented Kalman filtering for underwater vehicle navigation.

The package splits into a small stack: quaternion/SO(3) primitives
(:mod:`mukf.so3`), the 43-dim navigation state and its chart
(:mod:`mukf.state`), a manifold-generic UKF engine (:mod:`mukf.ukf`), sensor
and vehicle models (:mod:`mukf.models`), the assembled navigation filter
(:mod:`mukf.filter`), a ground-truth simulator (:mod:`mukf.sim`), log and
results I/O (:mod:`mukf.logio`), experiment presets, metrics, and a CLI.
"""

from .so3 import Rotation, exp_so3, log_so3
from .state import NavState, boxplus, boxminus
from .ukf import GaussianBelief, ManifoldUkf, UpdateReport, gate_threshold

__all__ = [
    "Rotation",
    "exp_so3",
    "log_so3",
    "NavState",
    "boxplus",
    "boxminus",
    "GaussianBelief",
    "ManifoldUkf",
    "UpdateReport",
    "gate_threshold",
]

__version__ = "0.1.0"
