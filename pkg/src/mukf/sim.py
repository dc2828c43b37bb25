"""Ground-truth vehicle simulator and sensor synthesis.

Truth integrates rigid-body + hydrodynamic dynamics (RK4, sub-centisecond
steps) for a thruster-driven vehicle in a depth-dependent, slowly drifting
current field. The body state is the water-relative velocity ``nu``; ground
velocity adds the local current kinematically, which is exactly the structure
the filter's measurement models assume.

Sensor synthesis inverts the measurement models on the truth trajectory. The
gyro sample over one IMU interval is the exact relative-rotation logarithm
(plus earth rate and bias), and the accelerometer carries the forward
difference of ground velocity, so with all noise set to zero a matched filter
reproduces the trajectory to discretization error.

Per-sample noise follows the density convention ``sigma = density *
sqrt(rate)``; changing the IMU rate in config keeps the continuous-time noise
level consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.signal import lfilter

from ._quat import quat_conj, quat_log, quat_mult, quat_rotate, quat_rotate_inv, quat_to_rpy
from .errors import ConfigError
from .logio import (
    AdcpCell,
    AdcpProfile,
    DvlSample,
    ExperimentConfig,
    GpsFix,
    ImuSample,
    PressureSample,
    SensorLog,
    ThrusterCommand,
)
from .models import VehicleParams, earth_rotation_ned, gravity_wgs84

__all__ = ["Segment", "CurrentField", "SimResult", "build_mission", "simulate", "vehicle_from_config"]

# Controller gains (P/PD on the truth state; the controller is part of the
# plant, not of the estimator, so using truth here is not a crime).
_KU = 300.0  # surge speed
_KV = 200.0  # sway damping
_KZ = 120.0  # depth
_KW = 300.0  # heave damping
_KQ = 400.0  # pitch-rate damping
_KPSI = 60.0  # heading
_KR = 200.0  # yaw-rate damping

_PRIORITY = {"imu": 0, "pres": 1, "dvl": 2, "gps": 3, "adcp": 4, "thr": 5}


@dataclass
class Segment:
    kind: str  # "transit" or "hold"
    depth: float
    target: np.ndarray | None = None  # (n, e) for transit
    speed: float = 0.0
    heading: float | None = None  # rad; hold keeps it, transit faces the target
    duration: float | None = None  # s, for hold


@dataclass
class CurrentField:
    """Horizontal current: exponential blend in depth from ``surface`` toward
    ``deep`` (about 95 % there at ``ref_depth``), plus a slow linear temporal
    drift. The curved profile is deliberate: a filter interpolating linearly
    between two depths sees a realistic residual."""

    surface: np.ndarray
    deep: np.ndarray
    ref_depth: float
    drift_rate: np.ndarray

    def at(self, depth: float, t: float) -> np.ndarray:
        a = 1.0 - math.exp(-3.0 * max(depth, 0.0) / self.ref_depth)
        return self.surface + (self.deep - self.surface) * a + self.drift_rate * t

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "CurrentField":
        c = cfg.get("current")
        return cls(
            surface=np.asarray(c["surface"], dtype=np.float64),
            deep=np.asarray(c["deep"], dtype=np.float64),
            ref_depth=float(c["ref_depth"]),
            drift_rate=np.asarray(c["drift_rate"], dtype=np.float64),
        )


@dataclass
class SimResult:
    """Truth trajectory on the IMU grid plus the synthesized sensor log."""

    t: np.ndarray  # (n,)
    pos: np.ndarray  # (n, 3) NED
    quat: np.ndarray  # (n, 4)
    vel: np.ndarray  # (n, 3) ground velocity, NED
    acc: np.ndarray  # (n, 3) forward-difference acceleration, NED
    nu: np.ndarray  # (n, 6) water-relative body velocity
    current_vehicle: np.ndarray  # (n, 2)
    current_below: np.ndarray  # (n, 2) at d_max under the vehicle
    bias_gyro: np.ndarray  # (n, 3)
    bias_accel: np.ndarray  # (n, 3)
    bias_adcp: np.ndarray  # (n, 2)
    log: SensorLog
    meta: dict = field(default_factory=dict)

    @property
    def rpy(self) -> np.ndarray:
        return quat_to_rpy(self.quat)


# ---------------------------------------------------------------------------
# jitted dynamics core
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_qmult(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit(cache=True)
def _nb_rot(q, v):
    # body -> nav
    t0 = 2.0 * (q[2] * v[2] - q[3] * v[1])
    t1 = 2.0 * (q[3] * v[0] - q[1] * v[2])
    t2 = 2.0 * (q[1] * v[1] - q[2] * v[0])
    out = np.empty(3)
    out[0] = v[0] + q[0] * t0 + q[2] * t2 - q[3] * t1
    out[1] = v[1] + q[0] * t1 + q[3] * t0 - q[1] * t2
    out[2] = v[2] + q[0] * t2 + q[1] * t1 - q[2] * t0
    return out


@njit(cache=True)
def _nb_rot_inv(q, v):
    t0 = -2.0 * (q[2] * v[2] - q[3] * v[1])
    t1 = -2.0 * (q[3] * v[0] - q[1] * v[2])
    t2 = -2.0 * (q[1] * v[1] - q[2] * v[0])
    out = np.empty(3)
    out[0] = v[0] + q[0] * t0 - (q[2] * t2 - q[3] * t1)
    out[1] = v[1] + q[0] * t1 - (q[3] * t0 - q[1] * t2)
    out[2] = v[2] + q[0] * t2 - (q[1] * t1 - q[2] * t0)
    return out


@njit(cache=True)
def _nb_cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _nb_deriv(y, t, wrench, M, Minv, Dl, Dq, rg, rb, W, B, coriolis, cur):
    # y = [p(3), q(4), nu(6)]; cur = [cs_n, cs_e, cd_n, cd_e, ref_depth,
    # drift_n, drift_e, tether_on, tether_f, tether_period, tether_phase,
    # tether_yaw]
    q = y[3:7]
    nu = y[7:13]
    v = nu[0:3]
    w = nu[3:6]

    d = y[2]
    if d < 0.0:
        d = 0.0
    a = 1.0 - math.exp(-3.0 * d / cur[4])
    cn = cur[0] + (cur[2] - cur[0]) * a + cur[5] * t
    ce = cur[1] + (cur[3] - cur[1]) * a + cur[6] * t

    dy = np.empty(13)
    vg = _nb_rot(q, v)
    dy[0] = vg[0] + cn
    dy[1] = vg[1] + ce
    dy[2] = vg[2]

    # dq = 0.5 * q * (0, w)
    wq = np.empty(4)
    wq[0] = 0.0
    wq[1:] = w
    dq = _nb_qmult(q, wq)
    dy[3:7] = 0.5 * dq

    tau = wrench.copy()
    if cur[7] != 0.0:
        th = 2.0 * math.pi * t / cur[9] + cur[10]
        f_nav = np.empty(3)
        f_nav[0] = cur[8] * math.cos(th)
        f_nav[1] = cur[8] * math.sin(th)
        f_nav[2] = 0.0
        f_body = _nb_rot_inv(q, f_nav)
        tau[0:3] += f_body
        tau[5] += cur[11] * math.sin(0.7 * th)

    # hydrodynamic loads
    load = np.empty(6)
    for i in range(6):
        acc = 0.0
        for j in range(6):
            acc += Dl[i, j] * nu[j] + Dq[i, j] * (abs(nu[j]) * nu[j])
        load[i] = acc

    if coriolis != 0:
        f1 = np.zeros(3)
        f2 = np.zeros(3)
        for i in range(3):
            for j in range(6):
                f1[i] += M[i, j] * nu[j]
                f2[i] += M[i + 3, j] * nu[j]
        load[0:3] += _nb_cross(w, f1)
        load[3:6] += _nb_cross(w, f2) + _nb_cross(v, f1)

    # gravity/buoyancy act as external forces alongside the thrust
    kb = _nb_rot_inv(q, np.array([0.0, 0.0, 1.0]))
    tau[0:3] += kb * (W - B)
    tau[3:6] += _nb_cross(rg, kb) * W - _nb_cross(rb, kb) * B

    dy[7:13] = Minv @ (tau - load)
    return dy


@njit(cache=True)
def _nb_integrate(y, t, n_sub, h, wrench, M, Minv, Dl, Dq, rg, rb, W, B, coriolis, cur):
    for _ in range(n_sub):
        k1 = _nb_deriv(y, t, wrench, M, Minv, Dl, Dq, rg, rb, W, B, coriolis, cur)
        k2 = _nb_deriv(y + 0.5 * h * k1, t + 0.5 * h, wrench, M, Minv, Dl, Dq, rg, rb, W, B, coriolis, cur)
        k3 = _nb_deriv(y + 0.5 * h * k2, t + 0.5 * h, wrench, M, Minv, Dl, Dq, rg, rb, W, B, coriolis, cur)
        k4 = _nb_deriv(y + h * k3, t + h, wrench, M, Minv, Dl, Dq, rg, rb, W, B, coriolis, cur)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        qn = math.sqrt(y[3] ** 2 + y[4] ** 2 + y[5] ** 2 + y[6] ** 2)
        y[3:7] /= qn
        t += h
    return y


# ---------------------------------------------------------------------------
# mission plumbing
# ---------------------------------------------------------------------------


def build_mission(mission_cfg: dict) -> list[Segment]:
    segs = []
    for i, s in enumerate(mission_cfg.get("segments", [])):
        kind = s.get("kind")
        if kind == "transit":
            if "target" not in s:
                raise ConfigError(f"mission segment {i}: transit needs a target")
            segs.append(
                Segment(
                    kind="transit",
                    depth=float(s.get("depth", 0.0)),
                    target=np.asarray(s["target"], dtype=np.float64),
                    speed=float(s.get("speed", 0.5)),
                )
            )
        elif kind == "hold":
            heading = s.get("heading_deg")
            segs.append(
                Segment(
                    kind="hold",
                    depth=float(s.get("depth", 0.0)),
                    heading=None if heading is None else np.radians(float(heading)),
                    duration=float(s.get("duration", 60.0)),
                )
            )
        else:
            raise ConfigError(f"mission segment {i}: unknown kind {kind!r}")
    return segs


def _wrap(a: float) -> float:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def vehicle_from_config(cfg: ExperimentConfig) -> VehicleParams:
    v = cfg.get("vehicle")
    if v.get("preset", "default") != "default":
        raise ConfigError(f"unknown vehicle preset {v['preset']!r}")
    return VehicleParams.default()


def _estimate_duration(segs: list[Segment], start: np.ndarray) -> float:
    t, pos = 60.0, np.asarray(start[:2], dtype=np.float64)
    for s in segs:
        if s.kind == "transit":
            d = float(np.linalg.norm(s.target - pos))
            t += 2.5 * d / max(s.speed, 0.05) + 30.0
            pos = s.target
        else:
            t += s.duration
    return t


class _Controller:
    """Waypoint/hold state machine producing thruster commands at the control rate."""

    def __init__(self, segs: list[Segment], params: VehicleParams, capture_radius: float):
        self.segs = segs
        self.idx = 0
        self.hold_left = segs[0].duration if segs and segs[0].kind == "hold" else None
        self.capture = capture_radius
        self.params = params
        self.alloc_pinv = np.linalg.pinv(params.thruster_alloc)
        # static thrust that cancels net buoyancy
        self.trim = params.buoyancy - params.weight

    def _advance(self, dt: float, pos: np.ndarray):
        while self.idx < len(self.segs):
            seg = self.segs[self.idx]
            if seg.kind == "hold":
                if self.hold_left is None:
                    self.hold_left = seg.duration
                self.hold_left -= dt
                if self.hold_left > 0.0:
                    return seg
            else:
                if np.linalg.norm(seg.target - pos[:2]) > self.capture:
                    return seg
            self.idx += 1
            self.hold_left = None
        return None

    def commands(self, dt: float, pos, rpy, nu) -> np.ndarray:
        seg = self._advance(dt, pos)
        p = self.params
        roll, pitch, yaw = rpy
        if seg is None:
            u_des, z_des, psi_des = 0.0, pos[2], yaw
        elif seg.kind == "transit":
            d = seg.target - pos[:2]
            psi_des = math.atan2(d[1], d[0])
            u_des, z_des = seg.speed, seg.depth
        else:
            u_des, z_des = 0.0, seg.depth
            psi_des = seg.heading if seg.heading is not None else yaw

        wrench = np.zeros(6)
        dl, dq = p.damping_lin, p.damping_quad
        wrench[0] = dl[0, 0] * u_des + dq[0, 0] * abs(u_des) * u_des + _KU * (u_des - nu[0])
        wrench[1] = -_KV * nu[1]
        wrench[2] = _KZ * (z_des - pos[2]) - _KW * nu[2] + self.trim
        wrench[4] = -_KQ * nu[4]
        wrench[5] = _KPSI * _wrap(psi_des - yaw) - _KR * nu[5]
        cmds = self.alloc_pinv @ wrench
        return np.clip(cmds, -p.max_thrust, p.max_thrust)


# ---------------------------------------------------------------------------
# top-level simulation
# ---------------------------------------------------------------------------


def _stride(imu_rate: float, rate: float, name: str) -> int:
    s = imu_rate / rate
    if abs(s - round(s)) > 1e-9 or round(s) < 1:
        raise ConfigError(f"{name} rate {rate} must divide the IMU rate {imu_rate}")
    return int(round(s))


def _markov_chain(rng, n, dt, sigma, tau, dims) -> np.ndarray:
    """Exact first-order chain sampled on the IMU grid, stationary init."""
    if sigma == 0.0:
        return np.zeros((n, dims))
    phi = 1.0 - dt / tau
    drive = math.sqrt(2.0 * sigma * sigma * dt / tau)
    w = rng.normal(0.0, drive, (n, dims))
    w[0] = rng.normal(0.0, sigma, dims)  # stationary initial value
    return lfilter([1.0], [1.0, -phi], w, axis=0)


def simulate(cfg: ExperimentConfig, seed: int | None = None) -> SimResult:
    """Run one mission and synthesize its sensor log.

    ``seed`` overrides ``cfg["seed"]``. Determinism: identical config + seed
    give byte-identical logs.
    """
    rng = np.random.default_rng(cfg.get("seed") if seed is None else seed)
    lat = math.radians(cfg.get("geo.latitude_deg"))
    params = vehicle_from_config(cfg)
    sim_pert = float(cfg.get("vehicle.sim_perturbation", 0.0))
    if sim_pert:
        params = params.perturbed(rng, sim_pert)
    field_ = CurrentField.from_config(cfg)
    env = cfg.get("environment")
    sensors = cfg.get("sensors")

    imu_rate = float(sensors["imu"]["rate"])
    dt = 1.0 / imu_rate
    sub = max(1, int(math.ceil(dt / 0.01 - 1e-9)))
    h = dt / sub
    ctrl_stride = _stride(imu_rate, sensors["control"]["rate"], "control")

    segs = build_mission(cfg.get("mission"))
    start = np.asarray(cfg.get("mission").get("start", [0.0, 0.0, 0.0]), dtype=np.float64)
    heading0 = math.radians(float(cfg.get("mission").get("heading_deg", 0.0)))
    duration = cfg.get("duration")
    t_end = float(duration) if duration else _estimate_duration(segs, start)
    n = int(math.floor(t_end * imu_rate)) + 1

    # pack dynamics parameters
    M = params.mass_matrix
    Minv = np.linalg.inv(M)
    teth = env["tether"]
    cur_pack = np.array(
        [
            field_.surface[0],
            field_.surface[1],
            field_.deep[0],
            field_.deep[1],
            field_.ref_depth,
            field_.drift_rate[0],
            field_.drift_rate[1],
            1.0 if teth["enabled"] else 0.0,
            float(teth["force"]),
            float(teth["period"]),
            rng.uniform(0.0, 2.0 * np.pi) if teth["enabled"] else 0.0,
            float(teth["yaw_torque"]),
        ]
    )
    coriolis = 1 if env["coriolis"] else 0

    ctrl = _Controller(segs, params, float(cfg.get("mission.capture_radius")))

    y = np.zeros(13)
    y[0:3] = start
    y[3] = math.cos(0.5 * heading0)
    y[6] = math.sin(0.5 * heading0)

    t_grid = np.arange(n) / imu_rate
    pos = np.empty((n, 3))
    quat = np.empty((n, 4))
    nu_out = np.empty((n, 6))
    vel = np.empty((n, 3))
    n_ctrl = (n - 1) // ctrl_stride + 1
    commands = np.empty((n_ctrl, params.thruster_alloc.shape[1]))
    wrench = np.zeros(6)
    ctrl_dt = ctrl_stride * dt

    ci = 0
    for k in range(n):
        t = t_grid[k]
        if k % ctrl_stride == 0:
            rpy_k = quat_to_rpy(y[3:7])
            cmds = ctrl.commands(ctrl_dt, y[0:3], rpy_k, y[7:13])
            commands[ci] = cmds
            wrench = params.thruster_alloc @ cmds
            ci += 1
        pos[k] = y[0:3]
        quat[k] = y[3:7]
        nu_out[k] = y[7:13]
        cur = field_.at(y[2], t)
        vg = quat_rotate(y[3:7], y[7:10])
        vel[k] = vg + np.array([cur[0], cur[1], 0.0])
        if k < n - 1:
            y = _nb_integrate(y, t, sub, h, wrench, M, Minv, params.damping_lin,
                              params.damping_quad, params.r_g, params.r_b,
                              params.weight, params.buoyancy, coriolis, cur_pack)

    if np.any(quat[:, 0] < 0.0):
        flip = quat[:, 0] < 0.0
        quat[flip] *= -1.0

    # forward-difference acceleration of ground velocity (what the IMU chain
    # and the filter's acceleration state both represent)
    acc = np.empty_like(vel)
    dts = np.diff(t_grid)
    acc[:-1] = (vel[1:] - vel[:-1]) / dts[:, None]
    acc[-1] = acc[-2]

    # current bookkeeping for truth output
    drift_t = field_.drift_rate[None, :] * t_grid[:, None]
    a_v = 1.0 - np.exp(-3.0 * np.maximum(pos[:, 2], 0.0) / field_.ref_depth)
    cur_vehicle = field_.surface + (field_.deep - field_.surface) * a_v[:, None] + drift_t
    d_max = float(sensors["adcp"]["d_max"])
    a_b = 1.0 - np.exp(-3.0 * np.maximum(pos[:, 2] + d_max, 0.0) / field_.ref_depth)
    cur_below = field_.surface + (field_.deep - field_.surface) * a_b[:, None] + drift_t

    # sensor bias truths on the IMU grid
    imu = sensors["imu"]
    bg = _markov_chain(rng, n, dt, imu["gyro_bias_sigma"], imu["gyro_bias_tau"], 3)
    ba = _markov_chain(rng, n, dt, imu["accel_bias_sigma"], imu["accel_bias_tau"], 3)
    bc = _markov_chain(rng, n, dt, sensors["adcp"]["bias_sigma"], sensors["adcp"]["bias_tau"], 2)

    records = []

    # IMU: exact relative-rotation increments + earth rate + bias + noise
    earth = earth_rotation_ned(lat)
    sg = imu["gyro_noise_density"] * math.sqrt(imu_rate)
    sa = imu["accel_noise_density"] * math.sqrt(imu_rate)
    rel = quat_mult(quat_conj(quat[:-1]), quat[1:])
    phi = quat_log(rel) / dts[:, None]
    gyro = np.empty((n, 3))
    gyro[1:] = phi + quat_rotate_inv(quat[:-1], earth)
    gyro[0] = quat_rotate_inv(quat[0], earth)
    gyro += bg
    if sg:
        gyro += rng.normal(0.0, sg, (n, 3))
    g0 = gravity_wgs84(lat)
    spec_force = acc - np.array([0.0, 0.0, g0])
    accel = quat_rotate_inv(quat, spec_force) + ba
    if sa:
        accel = accel + rng.normal(0.0, sa, (n, 3))
    for k in range(n):
        records.append(ImuSample(t_grid[k], gyro[k].copy(), accel[k].copy()))

    seafloor = float(env["seafloor_depth"])

    # DVL: valid only within the altitude window
    dvl_cfg = sensors["dvl"]
    ds = _stride(imu_rate, dvl_cfg["rate"], "dvl")
    sd = float(dvl_cfg["sigma"])
    for k in range(ds, n, ds):
        altitude = seafloor - pos[k, 2]
        if not 0.3 <= altitude <= float(dvl_cfg["max_altitude"]):
            continue
        v_body = quat_rotate_inv(quat[k], vel[k]) + np.cross(nu_out[k, 3:6], params.p_dvl)
        noise = rng.normal(0.0, sd, 3) if sd else 0.0
        records.append(DvlSample(t_grid[k], v_body + noise))

    # pressure depth
    pr = sensors["pressure"]
    ps = _stride(imu_rate, pr["rate"], "pressure")
    sp = float(pr["sigma"])
    for k in range(ps, n, ps):
        noise = rng.normal(0.0, sp) if sp else 0.0
        records.append(PressureSample(t_grid[k], pos[k, 2] + noise))

    # GPS: only when surfaced, with heavy-tailed outliers
    gps = sensors["gps"]
    gs = _stride(imu_rate, gps["rate"], "gps")
    sgps = float(gps["sigma"])
    n_outliers = 0
    surface_depth = float(env["surface_depth"])
    for k in range(gs, n, gs):
        if pos[k, 2] > surface_depth:
            continue
        fix = pos[k, 0:2] + (rng.normal(0.0, sgps, 2) if sgps else 0.0)
        if gps["outlier_prob"] and rng.uniform() < float(gps["outlier_prob"]):
            fix = fix + rng.normal(0.0, float(gps["outlier_sigma"]), 2)
            n_outliers += 1
        records.append(GpsFix(t_grid[k], fix[0], fix[1]))

    # ADCP: per-cell water velocity, invalid past the seafloor
    adcp = sensors["adcp"]
    as_ = _stride(imu_rate, adcp["rate"], "adcp")
    sad = float(adcp["sigma"])
    cells_cfg = [float(c) for c in adcp["cells"]]
    n_cell_outliers = 0
    for k in range(as_, n, as_):
        cells = []
        for dist in cells_cfg:
            cell_depth = pos[k, 2] + dist
            valid = cell_depth < seafloor - 1.0
            cur = field_.at(cell_depth, t_grid[k])
            rel_nav = np.array([cur[0] - vel[k, 0], cur[1] - vel[k, 1], -vel[k, 2]])
            v_cell = quat_rotate_inv(quat[k], rel_nav)
            v_cell[0:2] += bc[k]
            if sad:
                v_cell = v_cell + rng.normal(0.0, sad, 3)
            if adcp["outlier_prob"] and rng.uniform() < float(adcp["outlier_prob"]):
                v_cell = v_cell + rng.normal(0.0, float(adcp["outlier_sigma"]), 3)
                n_cell_outliers += 1
            cells.append(AdcpCell(dist, v_cell, bool(valid)))
        records.append(AdcpProfile(t_grid[k], tuple(cells)))

    # thruster commands (exact: they are commands, not measurements)
    for i in range(ci):
        records.append(ThrusterCommand(t_grid[i * ctrl_stride], commands[i].copy()))

    records.sort(key=lambda r: (r.t, _PRIORITY[r.kind]))
    log = SensorLog(latitude=lat, t0=0.0, records=records)

    meta = {
        "seed": int(cfg.get("seed") if seed is None else seed),
        "gravity": g0,
        "latitude": lat,
        "gps_outliers": n_outliers,
        "adcp_cell_outliers": n_cell_outliers,
        "imu_rate": imu_rate,
        "mass_sub": params.sub_entries(params.mass_matrix).tolist(),
        "damp_lin_sub": params.sub_entries(params.damping_lin).tolist(),
        "damp_quad_sub": params.sub_entries(params.damping_quad).tolist(),
        "d_max": d_max,
    }
    return SimResult(
        t=t_grid,
        pos=pos,
        quat=quat,
        vel=vel,
        acc=acc,
        nu=nu_out,
        current_vehicle=cur_vehicle,
        current_below=cur_below,
        bias_gyro=bg,
        bias_accel=ba,
        bias_adcp=bc,
        log=log,
        meta=meta,
    )


TRUTH_COLUMNS = [
    "t",
    "p_n", "p_e", "p_d",
    "roll", "pitch", "yaw",
    "v_n", "v_e", "v_d",
    "a_n", "a_e", "a_d",
    "cv_n", "cv_e", "cb_n", "cb_e",
    "bg_x", "bg_y", "bg_z",
    "ba_x", "ba_y", "ba_z",
    "bc_x", "bc_y",
]


def truth_arrays(res: SimResult) -> dict:
    rpy = res.rpy
    cols = {
        "t": res.t,
        "p_n": res.pos[:, 0], "p_e": res.pos[:, 1], "p_d": res.pos[:, 2],
        "roll": rpy[:, 0], "pitch": rpy[:, 1], "yaw": rpy[:, 2],
        "v_n": res.vel[:, 0], "v_e": res.vel[:, 1], "v_d": res.vel[:, 2],
        "a_n": res.acc[:, 0], "a_e": res.acc[:, 1], "a_d": res.acc[:, 2],
        "cv_n": res.current_vehicle[:, 0], "cv_e": res.current_vehicle[:, 1],
        "cb_n": res.current_below[:, 0], "cb_e": res.current_below[:, 1],
        "bg_x": res.bias_gyro[:, 0], "bg_y": res.bias_gyro[:, 1], "bg_z": res.bias_gyro[:, 2],
        "ba_x": res.bias_accel[:, 0], "ba_y": res.bias_accel[:, 1], "ba_z": res.bias_accel[:, 2],
        "bc_x": res.bias_adcp[:, 0], "bc_y": res.bias_adcp[:, 1],
    }
    return cols
