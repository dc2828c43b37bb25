"""Rotation group primitives.

A :class:`Rotation` wraps a scalar-first unit quaternion ``(w, x, y, z)``
describing the body-to-nav attitude. The exponential chart used throughout the
package is the *local* (body-frame) one: perturbing an attitude ``R`` by a
tangent vector ``phi`` means ``R * exp_so3(phi)``, i.e. the increment is
expressed in the body frame of the state being perturbed.

The navigation frame is NED (x north, y east, z down) and the identity
rotation means the body axes coincide with NED.
"""

from __future__ import annotations

import numpy as np

from . import _quat
from .errors import DimensionMismatch

__all__ = ["Rotation", "exp_so3", "log_so3", "skew"]


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: ``skew(a) @ b == np.cross(a, b)``."""
    v = np.asarray(v, dtype=np.float64)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


class Rotation:
    """An element of SO(3), stored as a unit quaternion with ``w >= 0``.

    Instances are immutable from the outside; every constructor and every
    operation renormalizes, so numerical drift cannot accumulate through long
    composition chains.
    """

    __slots__ = ("_q",)

    def __init__(self, quat: np.ndarray):
        q = np.asarray(quat, dtype=np.float64)
        if q.shape != (4,):
            raise DimensionMismatch(f"quaternion must have shape (4,), got {q.shape}")
        n = float(np.linalg.norm(q))
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("quaternion norm must be finite and nonzero")
        q = q / n
        if q[0] < 0.0:
            q = -q
        self._q = q
        self._q.setflags(write=False)

    # -- constructors ----------------------------------------------------

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_quat(cls, quat: np.ndarray) -> "Rotation":
        return cls(quat)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Rotation":
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise DimensionMismatch(f"rotation matrix must have shape (3, 3), got {m.shape}")
        return cls(_quat.quat_from_matrix(m))

    @classmethod
    def from_rotvec(cls, phi: np.ndarray) -> "Rotation":
        return exp_so3(phi)

    @classmethod
    def from_rpy(cls, roll: float, pitch: float, yaw: float) -> "Rotation":
        """Intrinsic yaw-pitch-roll (z, then y', then x'') Euler angles in radians."""
        return cls(_quat.quat_from_rpy(roll, pitch, yaw))

    # -- views -----------------------------------------------------------

    @property
    def quat(self) -> np.ndarray:
        """The underlying unit quaternion ``(w, x, y, z)`` (read-only view)."""
        return self._q

    def as_matrix(self) -> np.ndarray:
        return _quat.quat_to_matrix(self._q)

    def as_rotvec(self) -> np.ndarray:
        return log_so3(self)

    def as_rpy(self) -> np.ndarray:
        """``[roll, pitch, yaw]`` in radians."""
        return _quat.quat_to_rpy(self._q)

    # -- group operations ------------------------------------------------

    def compose(self, other: "Rotation") -> "Rotation":
        """``self * other``: apply ``other`` first, then ``self``."""
        return Rotation(_quat.quat_mult(self._q, other._q))

    def __mul__(self, other: "Rotation") -> "Rotation":
        return self.compose(other)

    def inverse(self) -> "Rotation":
        return Rotation(_quat.quat_conj(self._q))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Rotate body-frame vectors into the nav frame; broadcasts over ``(..., 3)``."""
        return _quat.quat_rotate(self._q, np.asarray(vec, dtype=np.float64))

    def apply_inverse(self, vec: np.ndarray) -> np.ndarray:
        """Rotate nav-frame vectors into the body frame."""
        return _quat.quat_rotate_inv(self._q, np.asarray(vec, dtype=np.float64))

    # -- misc ------------------------------------------------------------

    def angle_to(self, other: "Rotation") -> float:
        """Geodesic angle (rad) between two rotations."""
        return float(np.linalg.norm(log_so3(self.inverse() * other)))

    def __repr__(self) -> str:
        w, x, y, z = self._q
        return f"Rotation(quat=[{w:.6f}, {x:.6f}, {y:.6f}, {z:.6f}])"


def exp_so3(phi: np.ndarray) -> Rotation:
    """Exponential map: rotation vector (axis * angle, rad) to :class:`Rotation`.

    Uses the closed form for angles above 1e-8 rad and a second-order series
    below it, so the map is smooth through zero.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (3,):
        raise DimensionMismatch(f"rotation vector must have shape (3,), got {phi.shape}")
    return Rotation(_quat.quat_exp(phi))


def log_so3(rot: Rotation) -> np.ndarray:
    """Logarithm map: principal rotation vector with ``norm(phi) <= pi``.

    At exactly pi the returned axis is the deterministic representative whose
    first nonzero component is positive.
    """
    return _quat.quat_log(rot.quat)
