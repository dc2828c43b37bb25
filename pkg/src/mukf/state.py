"""Navigation state on SO(3) x R^40 and its tangent-space parametrization.

The state tracks, in order: position (NED, m), attitude (body-to-nav),
velocity (NED, m/s), acceleration (NED, m/s^2), the surge/sway rows of the
mass matrix (kg), of the linear damping matrix (kg/s) and of the quadratic
damping matrix (kg/m), water current at the vehicle and at the deepest ADCP
cell (N/E, m/s), local gravity (m/s^2), and gyro / accelerometer / ADCP
biases. Total tangent dimension 43; all blocks except attitude are plain
Euclidean, attitude uses the local rotation-vector chart from :mod:`mukf.so3`.

The tangent ordering below is frozen; covariance matrices, process-noise
vectors and the results-file column order all follow it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fastquat
from ._quat import quat_conj, quat_exp, quat_log, quat_mult
from .errors import DimensionMismatch
from .so3 import Rotation

__all__ = [
    "DIM",
    "EUCLID_DIM",
    "POS",
    "ATT",
    "VEL",
    "ACC",
    "M_SUB",
    "DL_SUB",
    "DQ_SUB",
    "CUR_V",
    "CUR_B",
    "GRAV",
    "BG",
    "BA",
    "BC",
    "TANGENT_LABELS",
    "NavState",
    "StateBatch",
    "boxplus",
    "boxminus",
    "NavManifold",
    "VectorManifold",
]

DIM = 43
EUCLID_DIM = 40

# Tangent-space block slices (frozen ordering).
POS = slice(0, 3)
ATT = slice(3, 6)
VEL = slice(6, 9)
ACC = slice(9, 12)
M_SUB = slice(12, 18)
DL_SUB = slice(18, 24)
DQ_SUB = slice(24, 30)
CUR_V = slice(30, 32)
CUR_B = slice(32, 34)
GRAV = slice(34, 35)
BG = slice(35, 38)
BA = slice(38, 41)
BC = slice(41, 43)

# Same blocks in the 40-dim Euclidean packing (tangent order with ATT removed).
E_POS = slice(0, 3)
E_VEL = slice(3, 6)
E_ACC = slice(6, 9)
E_M_SUB = slice(9, 15)
E_DL_SUB = slice(15, 21)
E_DQ_SUB = slice(21, 27)
E_CUR_V = slice(27, 29)
E_CUR_B = slice(29, 31)
E_GRAV = slice(31, 32)
E_BG = slice(32, 35)
E_BA = slice(35, 38)
E_BC = slice(38, 40)

TANGENT_LABELS = (
    "p_n", "p_e", "p_d",
    "att_x", "att_y", "att_z",
    "v_n", "v_e", "v_d",
    "a_n", "a_e", "a_d",
    "m_xu", "m_xv", "m_xr", "m_yu", "m_yv", "m_yr",
    "dl_xu", "dl_xv", "dl_xr", "dl_yu", "dl_yv", "dl_yr",
    "dq_xu", "dq_xv", "dq_xr", "dq_yu", "dq_yv", "dq_yr",
    "cv_n", "cv_e", "cb_n", "cb_e",
    "g",
    "bg_x", "bg_y", "bg_z",
    "ba_x", "ba_y", "ba_z",
    "bc_x", "bc_y",
)


def _vec(x, n: int) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.shape != (n,):
        raise DimensionMismatch(f"expected shape ({n},), got {a.shape}")
    return a


@dataclass
class NavState:
    """One navigation state. Arrays are owned (copied in); attitude is a :class:`Rotation`."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: Rotation = field(default_factory=Rotation.identity)
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mass_sub: np.ndarray = field(default_factory=lambda: np.zeros(6))
    damp_lin_sub: np.ndarray = field(default_factory=lambda: np.zeros(6))
    damp_quad_sub: np.ndarray = field(default_factory=lambda: np.zeros(6))
    current_vehicle: np.ndarray = field(default_factory=lambda: np.zeros(2))
    current_below: np.ndarray = field(default_factory=lambda: np.zeros(2))
    gravity: float = 9.81
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    adcp_bias: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.position = _vec(self.position, 3).copy()
        self.velocity = _vec(self.velocity, 3).copy()
        self.acceleration = _vec(self.acceleration, 3).copy()
        self.mass_sub = _vec(self.mass_sub, 6).copy()
        self.damp_lin_sub = _vec(self.damp_lin_sub, 6).copy()
        self.damp_quad_sub = _vec(self.damp_quad_sub, 6).copy()
        self.current_vehicle = _vec(self.current_vehicle, 2).copy()
        self.current_below = _vec(self.current_below, 2).copy()
        self.gravity = float(self.gravity)
        self.gyro_bias = _vec(self.gyro_bias, 3).copy()
        self.accel_bias = _vec(self.accel_bias, 3).copy()
        self.adcp_bias = _vec(self.adcp_bias, 2).copy()

    # -- flat Euclidean packing (40,) + quaternion (4,) -------------------

    def to_euclid(self) -> np.ndarray:
        e = np.empty(EUCLID_DIM)
        e[E_POS] = self.position
        e[E_VEL] = self.velocity
        e[E_ACC] = self.acceleration
        e[E_M_SUB] = self.mass_sub
        e[E_DL_SUB] = self.damp_lin_sub
        e[E_DQ_SUB] = self.damp_quad_sub
        e[E_CUR_V] = self.current_vehicle
        e[E_CUR_B] = self.current_below
        e[E_GRAV] = self.gravity
        e[E_BG] = self.gyro_bias
        e[E_BA] = self.accel_bias
        e[E_BC] = self.adcp_bias
        return e

    @classmethod
    def from_euclid(cls, e: np.ndarray, attitude: Rotation) -> "NavState":
        e = _vec(e, EUCLID_DIM)
        return cls(
            position=e[E_POS],
            attitude=attitude,
            velocity=e[E_VEL],
            acceleration=e[E_ACC],
            mass_sub=e[E_M_SUB],
            damp_lin_sub=e[E_DL_SUB],
            damp_quad_sub=e[E_DQ_SUB],
            current_vehicle=e[E_CUR_V],
            current_below=e[E_CUR_B],
            gravity=float(e[E_GRAV][0]),
            gyro_bias=e[E_BG],
            accel_bias=e[E_BA],
            adcp_bias=e[E_BC],
        )

    def copy(self) -> "NavState":
        return NavState.from_euclid(self.to_euclid(), self.attitude)


def boxplus(state: NavState, delta: np.ndarray) -> NavState:
    """Retract a 43-dim tangent vector onto the manifold.

    Euclidean blocks add; the attitude block perturbs locally:
    ``att' = att * exp_so3(delta[ATT])`` (body-frame increment).
    """
    delta = _vec(delta, DIM)
    e = state.to_euclid()
    e[E_POS] += delta[POS]
    e[3:] += delta[6:]
    att = Rotation(quat_mult(state.attitude.quat, quat_exp(delta[ATT])))
    return NavState.from_euclid(e, att)


def boxminus(a: NavState, b: NavState) -> np.ndarray:
    """Chart difference ``a - b``: the tangent vector at ``b`` reaching ``a``.

    Inverse of :func:`boxplus` in the sense ``boxminus(boxplus(b, d), b) == d``
    for ``norm(d[ATT]) < pi``.
    """
    ea, eb = a.to_euclid(), b.to_euclid()
    d = np.empty(DIM)
    d[POS] = ea[E_POS] - eb[E_POS]
    d[6:] = ea[3:] - eb[3:]
    d[ATT] = quat_log(quat_mult(quat_conj(b.attitude.quat), a.attitude.quat))
    return d


class StateBatch:
    """A set of navigation states stored columnar: ``euclid (m, 40)`` + ``quat (m, 4)``.

    Sigma points live here so process and measurement models can vectorize
    over the whole set. The named properties are views, not copies.
    """

    __slots__ = ("euclid", "quat")

    def __init__(self, euclid: np.ndarray, quat: np.ndarray):
        if euclid.ndim != 2 or euclid.shape[1] != EUCLID_DIM:
            raise DimensionMismatch(f"euclid must be (m, {EUCLID_DIM}), got {euclid.shape}")
        if quat.shape != (euclid.shape[0], 4):
            raise DimensionMismatch(f"quat must be ({euclid.shape[0]}, 4), got {quat.shape}")
        self.euclid = euclid
        self.quat = quat

    def __len__(self) -> int:
        return self.euclid.shape[0]

    position = property(lambda self: self.euclid[:, E_POS])
    velocity = property(lambda self: self.euclid[:, E_VEL])
    acceleration = property(lambda self: self.euclid[:, E_ACC])
    mass_sub = property(lambda self: self.euclid[:, E_M_SUB])
    damp_lin_sub = property(lambda self: self.euclid[:, E_DL_SUB])
    damp_quad_sub = property(lambda self: self.euclid[:, E_DQ_SUB])
    current_vehicle = property(lambda self: self.euclid[:, E_CUR_V])
    current_below = property(lambda self: self.euclid[:, E_CUR_B])
    gravity = property(lambda self: self.euclid[:, E_GRAV.start])
    gyro_bias = property(lambda self: self.euclid[:, E_BG])
    accel_bias = property(lambda self: self.euclid[:, E_BA])
    adcp_bias = property(lambda self: self.euclid[:, E_BC])

    def state(self, i: int) -> NavState:
        return NavState.from_euclid(self.euclid[i], Rotation(self.quat[i]))


class NavManifold:
    """Chart operations for :class:`NavState`, batched for the sigma-point engine.

    The weighted mean is closed-form on the Euclidean blocks and a fixed-point
    iteration on the quaternion block (at most ``max_iter`` sweeps, stopping
    when the weighted tangent correction drops below ``tol``).
    """

    dim = DIM

    def __init__(self, max_iter: int = 20, tol: float = 1e-10):
        self.max_iter = int(max_iter)
        self.tol = float(tol)

    def sigma_batch(self, mean: NavState, deltas: np.ndarray) -> StateBatch:
        """Retract every row of ``deltas (m, 43)`` at ``mean``."""
        if deltas.ndim != 2 or deltas.shape[1] != DIM:
            raise DimensionMismatch(f"deltas must be (m, {DIM}), got {deltas.shape}")
        me = mean.to_euclid()
        e = np.empty((deltas.shape[0], EUCLID_DIM))
        e[:, E_POS] = me[E_POS] + deltas[:, POS]
        e[:, 3:] = me[3:] + deltas[:, 6:]
        q = _fastquat.ref_mult_exp(mean.attitude.quat, np.ascontiguousarray(deltas[:, ATT]))
        return StateBatch(e, q)

    def weighted_mean(self, batch: StateBatch, weights: np.ndarray) -> NavState:
        e = weights @ batch.euclid
        q = _fastquat.karcher(batch.quat, weights, self.max_iter, self.tol * self.tol)
        return NavState.from_euclid(e, Rotation(q))

    def residuals(self, batch: StateBatch, mean: NavState) -> np.ndarray:
        """Chart differences of every batch member relative to ``mean`` — ``(m, 43)``."""
        me = mean.to_euclid()
        d = np.empty((len(batch), DIM))
        d[:, POS] = batch.euclid[:, E_POS] - me[E_POS]
        d[:, 6:] = batch.euclid[:, 3:] - me[3:]
        _fastquat.log_rel(mean.attitude.quat, batch.quat, d[:, ATT])
        return d

    def retract(self, state: NavState, delta: np.ndarray) -> NavState:
        return boxplus(state, delta)


class VectorManifold:
    """Trivial chart for plain R^n states (arrays); used for linear problems and tests."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def sigma_batch(self, mean: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        return np.asarray(mean) + deltas

    def weighted_mean(self, batch: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return weights @ batch

    def residuals(self, batch: np.ndarray, mean: np.ndarray) -> np.ndarray:
        return batch - mean

    def retract(self, state: np.ndarray, delta: np.ndarray) -> np.ndarray:
        return np.asarray(state) + delta
