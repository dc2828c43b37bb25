"""Physical models: geodesy, colored-noise dynamics, vehicle hydrodynamics and
the measurement equations for every sensor the filter fuses.

Every measurement model comes in batch form: it maps a
:class:`mukf.state.StateBatch` (the sigma points) to an ``(m, k)`` array of
predicted measurements. Frame conventions follow :mod:`mukf.so3`: NED nav
frame, body frame aligned with NED at identity attitude, z positive down.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._quat import quat_rotate_inv
from .errors import CellOutOfRange, DimensionMismatch, SingularInertia
from .state import StateBatch

__all__ = [
    "EARTH_RATE",
    "gravity_wgs84",
    "earth_rotation_ned",
    "GaussMarkov",
    "VehicleParams",
    "inertial_step",
    "accel_measurement",
    "dvl_measurement",
    "pressure_measurement",
    "gps_measurement",
    "adcp_measurement",
    "model_aiding_measurement",
    "thruster_wrench",
]

EARTH_RATE = 7.292115e-5
"""Earth rotation rate, rad/s."""

# WGS-84 Somigliana constants: equatorial gravity, gravity formula constant,
# first eccentricity squared.
_GE = 9.7803253359
_K_SOMIGLIANA = 0.00193185265241
_E2 = 0.00669437999013


def gravity_wgs84(lat: float) -> float:
    """Normal gravity (m/s^2) at sea level and geodetic latitude ``lat`` (rad)."""
    s2 = np.sin(lat) ** 2
    return _GE * (1.0 + _K_SOMIGLIANA * s2) / np.sqrt(1.0 - _E2 * s2)


def earth_rotation_ned(lat: float) -> np.ndarray:
    """Earth rotation vector resolved in NED at latitude ``lat`` (rad).

    North component ``w*cos(lat)``, down component ``-w*sin(lat)``; this is
    what a perfect stationary gyro measures (in body frame) and what
    gyrocompassing observes.
    """
    return np.array([EARTH_RATE * np.cos(lat), 0.0, -EARTH_RATE * np.sin(lat)])


@dataclass(frozen=True)
class GaussMarkov:
    """First-order Gauss-Markov (exponentially correlated) noise descriptor.

    ``sigma_drift`` is the stationary standard deviation, ``tau`` the
    correlation time (s). Discretized at step ``dt`` the state decays as
    ``x' = x - (x - anchor) * dt / tau`` and is driven by white noise of
    per-step variance ``2 * sigma_drift^2 * dt / tau``, which reproduces the
    stationary variance for any rate.
    """

    sigma_drift: float
    tau: float

    def decay_rate(self, dt: float) -> float:
        return dt / self.tau

    def step_var(self, dt: float) -> float:
        return 2.0 * self.sigma_drift**2 * dt / self.tau

    def step_std(self, dt: float) -> float:
        return float(np.sqrt(self.step_var(dt)))


# Submatrix addressing: the estimated rows of M / D_l / D_q are the surge and
# sway rows, coupled to the surge, sway and yaw-rate columns.
_SUB_ROWS = (0, 1)
_SUB_COLS = (0, 1, 5)


@dataclass(frozen=True)
class VehicleParams:
    """Rigid-body + hydrodynamic description of the vehicle.

    ``mass_matrix`` includes added mass; ``damping_lin``/``damping_quad`` act
    on body velocity as ``D_l @ nu + D_q @ (|nu| * nu)`` (componentwise
    quadratic drag, sign preserving). ``weight``/``buoyancy`` in N;
    ``r_g``/``r_b`` are the centers of gravity and buoyancy in body
    coordinates (m). ``thruster_alloc`` maps per-thruster forces (N) to a
    body wrench; ``p_dvl`` is the DVL lever arm from the IMU reference point.
    """

    mass_matrix: np.ndarray
    damping_lin: np.ndarray
    damping_quad: np.ndarray
    weight: float
    buoyancy: float
    r_g: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p_dvl: np.ndarray = field(default_factory=lambda: np.zeros(3))
    thruster_alloc: np.ndarray = field(default_factory=lambda: np.zeros((6, 0)))
    max_thrust: float = 60.0

    def __post_init__(self):
        for name in ("mass_matrix", "damping_lin", "damping_quad"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.shape != (6, 6):
                raise DimensionMismatch(f"{name} must be (6, 6), got {a.shape}")
            object.__setattr__(self, name, a)
        if abs(np.linalg.det(self.mass_matrix)) < 1e-12:
            raise SingularInertia("mass matrix is not invertible")
        for name, n in (("r_g", 3), ("r_b", 3), ("p_dvl", 3)):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.shape != (n,):
                raise DimensionMismatch(f"{name} must be ({n},), got {a.shape}")
            object.__setattr__(self, name, a)
        alloc = np.asarray(self.thruster_alloc, dtype=np.float64)
        if alloc.ndim != 2 or alloc.shape[0] != 6:
            raise DimensionMismatch(f"thruster_alloc must be (6, n), got {alloc.shape}")
        object.__setattr__(self, "thruster_alloc", alloc)

    def sub_entries(self, matrix: np.ndarray) -> np.ndarray:
        """The six estimated entries of a 6x6 matrix, row-major over the
        (surge, sway) x (surge, sway, yaw-rate) submatrix."""
        return np.asarray(matrix)[np.ix_(_SUB_ROWS, _SUB_COLS)].ravel()

    def perturbed(self, rng: np.random.Generator, frac: float) -> "VehicleParams":
        """Multiplicatively perturb every nonzero hydrodynamic coefficient by
        ``U(-frac, +frac)``; the net buoyancy force gets the same treatment."""

        def jitter(a):
            out = a.copy()
            nz = out != 0.0
            out[nz] *= 1.0 + rng.uniform(-frac, frac, size=int(nz.sum()))
            return out

        net = (self.weight - self.buoyancy) * (1.0 + rng.uniform(-frac, frac))
        return replace(
            self,
            mass_matrix=jitter(self.mass_matrix),
            damping_lin=jitter(self.damping_lin),
            damping_quad=jitter(self.damping_quad),
            buoyancy=self.weight - net,
        )

    @classmethod
    def default(cls) -> "VehicleParams":
        """A flat, hover-capable 1200 kg survey AUV with six fixed thrusters.

        Two stern thrusters (surge/yaw), two lateral (sway/yaw), two vertical
        (heave/pitch); roll is passively stable through the metacentric
        offset. Numbers are representative, not a calibration.
        """
        mass = np.diag([1600.0, 1900.0, 2100.0, 180.0, 420.0, 450.0])
        d_lin = np.diag([50.0, 90.0, 120.0, 30.0, 80.0, 90.0])
        d_quad = np.diag([150.0, 300.0, 400.0, 40.0, 90.0, 100.0])
        w = 1200.0 * 9.78
        alloc = np.array(
            [
                [1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
                [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, -0.6, 0.6],
                [-0.3, 0.3, 0.8, -0.8, 0.0, 0.0],
            ]
        )
        return cls(
            mass_matrix=mass,
            damping_lin=d_lin,
            damping_quad=d_quad,
            weight=w,
            buoyancy=w + 8.0,
            r_g=np.zeros(3),
            r_b=np.array([0.0, 0.0, -0.10]),
            p_dvl=np.array([0.8, 0.0, 0.15]),
            thruster_alloc=alloc,
            max_thrust=60.0,
        )


# ---------------------------------------------------------------------------
# process model
# ---------------------------------------------------------------------------


def inertial_step(
    batch: StateBatch,
    omega: np.ndarray,
    dt: float,
    earth_ned: np.ndarray,
    decay_rate: np.ndarray,
    anchor: np.ndarray,
) -> StateBatch:
    """One strapdown prediction step applied in place to a sigma-point batch.

    Position and velocity integrate forward-Euler; the attitude increments by
    the bias- and earth-rate-corrected body rotation over ``dt``; every
    colored-noise block relaxes toward its anchor (``decay_rate`` holds
    ``dt/tau`` per Euclidean entry, zero for integrated/white blocks).

    ``omega`` is the raw gyro sample (rad/s, body frame); the per-point gyro
    bias estimate and the earth rotation (nav frame) are removed before the
    attitude increment, so heading becomes observable through the north
    component of the residual rotation.
    """
    from . import _fastquat
    from .state import E_POS, E_VEL, E_ACC, E_BG

    e = batch.euclid
    e[:, E_POS] += e[:, E_VEL] * dt
    e[:, E_VEL] += e[:, E_ACC] * dt
    body_rate = (omega - e[:, E_BG]) - quat_rotate_inv(batch.quat, earth_ned)
    _fastquat.rows_mult_exp_norm(batch.quat, body_rate * dt)
    e -= (e - anchor) * decay_rate
    return batch


# ---------------------------------------------------------------------------
# measurement models (batched over sigma points)
# ---------------------------------------------------------------------------


def accel_measurement(batch: StateBatch) -> np.ndarray:
    """Specific force in body axes: ``C_b^n (a^n - g^n) + b_f``.

    The gravity vector is ``(0, 0, +g)`` in NED (down positive), built from
    the per-point gravity state; at rest and level the model predicts
    ``(0, 0, -g)``.
    """
    g_ned = np.zeros((len(batch), 3))
    g_ned[:, 2] = batch.gravity
    return quat_rotate_inv(batch.quat, batch.acceleration - g_ned) + batch.accel_bias


def dvl_measurement(batch: StateBatch, omega: np.ndarray, p_dvl: np.ndarray) -> np.ndarray:
    """Bottom-track velocity at the DVL head: body velocity plus the
    lever-arm rate ``(omega - b_g) x p_dvl``."""
    v_body = quat_rotate_inv(batch.quat, batch.velocity)
    return v_body + np.cross(omega - batch.gyro_bias, p_dvl)


def pressure_measurement(batch: StateBatch) -> np.ndarray:
    """Depth (m, positive down) — the down component of position."""
    return batch.position[:, 2:3]


def gps_measurement(batch: StateBatch) -> np.ndarray:
    """Horizontal position fix (north, east)."""
    return batch.position[:, 0:2]


def adcp_measurement(batch: StateBatch, cell_dist: float, d_max: float) -> np.ndarray:
    """Water velocity of one ADCP cell, in instrument (body) axes.

    The current at a cell ``cell_dist`` below the vehicle interpolates
    linearly between the current state at the vehicle and the one at
    ``d_max``; the instrument sees it relative to the vehicle's own velocity,
    plus the horizontal instrument bias.
    """
    if not 0.0 < cell_dist <= d_max:
        raise CellOutOfRange(f"cell at {cell_dist} m outside (0, {d_max}]")
    a = cell_dist / d_max
    cur = np.zeros((len(batch), 3))
    cur[:, 0:2] = (1.0 - a) * batch.current_vehicle + a * batch.current_below
    z = quat_rotate_inv(batch.quat, cur - batch.velocity)
    z[:, 0:2] += batch.adcp_bias
    return z


def _rows_with_sub(nominal: np.ndarray, sub: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``nominal @ x`` per point, with the estimated submatrix entries of
    ``sub (m, 6)`` replacing the nominal ones on the surge/sway rows."""
    y = x @ nominal.T
    xs = x[:, _SUB_COLS]
    for i, row in enumerate(_SUB_ROWS):
        delta = sub[:, 3 * i : 3 * i + 3] - nominal[row, _SUB_COLS]
        y[:, row] += np.einsum("mj,mj->m", xs, delta)
    return y


def restoring_wrench(quat: np.ndarray, r_g: np.ndarray, r_b: np.ndarray, weight: float, buoyancy: float) -> np.ndarray:
    """Gravity/buoyancy wrench in body axes for a batch of attitudes ``(m, 4)``.

    Force: ``C_b^n k (W - B)``; torque: ``r_g x (C_b^n k) W - r_b x (C_b^n k) B``
    with ``k`` the nav down axis. Level and neutrally trimmed this vanishes.
    """
    k_body = quat_rotate_inv(quat, np.array([0.0, 0.0, 1.0]))
    out = np.empty((quat.shape[0], 6))
    out[:, 0:3] = k_body * (weight - buoyancy)
    out[:, 3:6] = np.cross(r_g, k_body) * weight - np.cross(r_b, k_body) * buoyancy
    return out


def model_aiding_measurement(
    batch: StateBatch, omega: np.ndarray, params: VehicleParams,
    earth_ned: np.ndarray | None = None,
) -> np.ndarray:
    """Body wrench predicted from the motion model — compared against the
    wrench mapped from thruster commands.

    ``M [a_b; 0] + D_l nu_r + D_q (|nu_r| * nu_r) - g(R)`` where ``nu_r`` is
    the water-relative body velocity (current state subtracted before
    rotating), ``a_b`` the body-frame linear acceleration, and the angular
    acceleration is taken as zero (not a state). The estimated M/D submatrix
    entries override the nominal ones per sigma point.

    ``earth_ned`` is the earth rotation vector in the navigation frame; the
    water rotates with the earth, so the hydrodynamic rates exclude it. A
    raw gyro sample contains it, and leaving it in puts a small standing
    torque offset through the angular damping terms.

    The gravity/buoyancy wrench is an external load, so the thrust needed to
    produce a given motion carries it with a minus sign: a positively buoyant
    vehicle must thrust downward to hold depth.
    """
    m = len(batch)
    cur_ned = np.zeros((m, 3))
    cur_ned[:, 0:2] = batch.current_vehicle
    v_rel_body = quat_rotate_inv(batch.quat, batch.velocity - cur_ned)
    w_body = omega - batch.gyro_bias
    if earth_ned is not None:
        w_body = w_body - quat_rotate_inv(batch.quat, earth_ned)
    nu = np.concatenate([v_rel_body, w_body], axis=1)
    acc6 = np.zeros((m, 6))
    acc6[:, 0:3] = quat_rotate_inv(batch.quat, batch.acceleration)

    z = _rows_with_sub(params.mass_matrix, batch.mass_sub, acc6)
    z += _rows_with_sub(params.damping_lin, batch.damp_lin_sub, nu)
    z += _rows_with_sub(params.damping_quad, batch.damp_quad_sub, np.abs(nu) * nu)
    z -= restoring_wrench(batch.quat, params.r_g, params.r_b, params.weight, params.buoyancy)
    return z


def thruster_wrench(commands: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Body wrench produced by per-thruster forces through the allocation map."""
    commands = np.asarray(commands, dtype=np.float64)
    if commands.shape != (params.thruster_alloc.shape[1],):
        raise DimensionMismatch(
            f"expected {params.thruster_alloc.shape[1]} thruster commands, got {commands.shape}"
        )
    return params.thruster_alloc @ commands
