"""Sensor-log replay filter: a manifold UKF over the 43-dimensional
navigation state, wired to the vehicle measurement models.

The filter consumes a :class:`~mukf.logio.SensorLog` record stream in
timestamp order. Every IMU sample triggers a prediction (strapdown + Markov
relaxation of the slow states) followed by an accelerometer update on the
acceleration state; the remaining record kinds map to their measurement
models. Per-kind chi-square gates, data-denial windows and enable switches
are all driven by the experiment config.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonMonotoneTimestamp
from .logio import ExperimentConfig, SensorLog
from .models import (
    GaussMarkov,
    VehicleParams,
    accel_measurement,
    adcp_measurement,
    dvl_measurement,
    earth_rotation_ned,
    gps_measurement,
    gravity_wgs84,
    inertial_step,
    model_aiding_measurement,
    pressure_measurement,
    thruster_wrench,
)
from .so3 import Rotation
from .state import (
    ATT,
    DIM,
    E_ACC,
    E_BA,
    E_BC,
    E_BG,
    E_CUR_B,
    E_CUR_V,
    E_DL_SUB,
    E_DQ_SUB,
    E_GRAV,
    E_M_SUB,
    E_POS,
    E_VEL,
    EUCLID_DIM,
    TANGENT_LABELS,
    NavManifold,
    NavState,
)
from .ukf import GaussianBelief, ManifoldUkf
from .sim import vehicle_from_config

__all__ = ["NavigationFilter", "RunResult", "DenialWindow"]

ESTIMATE_COLUMNS = [
    "p_n", "p_e", "p_d",
    "roll", "pitch", "yaw",
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
]


@dataclass
class DenialWindow:
    kinds: tuple[str, ...]
    t0: float
    t1: float

    def blocks(self, kind: str, t: float) -> bool:
        return kind in self.kinds and self.t0 <= t <= self.t1


@dataclass
class RunResult:
    t: np.ndarray  # (n,) estimate timestamps (IMU ticks)
    est: np.ndarray  # (n, 43) state columns per ESTIMATE_COLUMNS
    sigma: np.ndarray  # (n, 43) marginal tangent-space sigmas
    cov_ne: np.ndarray  # (n,) north/east position covariance
    updates: list[dict]
    final: GaussianBelief
    n_predicts: int
    wall_time: float

    @property
    def throughput(self) -> float:
        """Prediction/update cycles per wall-clock second."""
        return self.n_predicts / self.wall_time if self.wall_time > 0 else math.inf

    def columns(self) -> dict:
        cols = {"t": self.t}
        for i, name in enumerate(ESTIMATE_COLUMNS):
            cols[name] = self.est[:, i]
        for i, name in enumerate(TANGENT_LABELS):
            cols[f"sig_{name}"] = self.sigma[:, i]
        cols["cov_ne"] = self.cov_ne
        return cols


def _state_row(s: NavState) -> np.ndarray:
    return np.concatenate([
        s.position,
        s.attitude.as_rpy(),
        s.velocity,
        s.acceleration,
        s.mass_sub,
        s.damp_lin_sub,
        s.damp_quad_sub,
        s.current_vehicle,
        s.current_below,
        [s.gravity],
        s.gyro_bias,
        s.accel_bias,
        s.adcp_bias,
    ])


def _parse_denial(entries) -> list[DenialWindow]:
    out = []
    for e in entries or []:
        out.append(DenialWindow(tuple(e["kinds"]), float(e["t0"]), float(e["t1"])))
    return out


class NavigationFilter:
    def __init__(self, cfg: ExperimentConfig, params: VehicleParams | None = None):
        self.cfg = cfg
        fc = cfg.get("filter")
        ut = fc["ut"]
        self.manifold = NavManifold()
        self.ukf = ManifoldUkf(
            self.manifold, alpha=float(ut["alpha"]), beta=float(ut["beta"]), kappa=float(ut["kappa"])
        )
        self.params = params if params is not None else vehicle_from_config(cfg)
        pert = float(fc.get("param_perturbation", 0.0))
        if pert:
            # model mismatch study: the filter believes in perturbed nominals
            prng = np.random.default_rng(int(cfg.get("seed")) + 7777)
            self.params = self.params.perturbed(prng, pert)

        self.gates = {k: (None if v is None else float(v)) for k, v in fc["gates"].items()}
        self.enabled = dict(cfg.get("enabled"))
        self.denial = _parse_denial(cfg.get("denial"))
        self.surface_depth = float(cfg.get("environment.surface_depth"))

        sensors = cfg.get("sensors")
        imu = sensors["imu"]
        rate = float(imu["rate"])
        self.sig_accel = float(imu["accel_noise_density"]) * math.sqrt(rate)
        self.sig_gyro = float(imu["gyro_noise_density"]) * math.sqrt(rate)
        self.r_dvl = float(sensors["dvl"]["sigma"]) ** 2 * np.eye(3)
        self.r_gps = float(sensors["gps"]["sigma"]) ** 2 * np.eye(2)
        self.r_pres = np.array([[float(sensors["pressure"]["sigma"]) ** 2]])
        self.sig_adcp = float(sensors["adcp"]["sigma"])
        self.d_max = float(sensors["adcp"]["d_max"])
        meas = fc["measurement"]
        self.r_model = np.diag(
            [float(meas["model_sigma_force"]) ** 2] * 3 + [float(meas["model_sigma_torque"]) ** 2] * 3
        )
        self.surfaced_inflation = float(meas["surfaced_inflation"])

        # process-noise machinery
        proc = fc["process"]
        markov = fc["markov"]
        self.gm_current = GaussMarkov(float(markov["current_sigma"]), float(markov["current_tau"]))
        self.current_length = float(markov["current_speed_scale"])
        self.gm_bg = GaussMarkov(float(imu["gyro_bias_sigma"]), float(imu["gyro_bias_tau"]))
        self.gm_ba = GaussMarkov(float(imu["accel_bias_sigma"]), float(imu["accel_bias_tau"]))
        self.gm_bc = GaussMarkov(
            float(sensors["adcp"]["bias_sigma"]), float(sensors["adcp"]["bias_tau"])
        )
        frac = float(markov["params_frac"])
        floors = [float(x) for x in markov["params_floor"]]
        self.param_sigmas = {}
        for key, nominal, floor in (
            ("m", self.params.sub_entries(self.params.mass_matrix), floors[0]),
            ("dl", self.params.sub_entries(self.params.damping_lin), floors[1]),
            ("dq", self.params.sub_entries(self.params.damping_quad), floors[2]),
        ):
            self.param_sigmas[key] = np.maximum(frac * np.abs(nominal), floor)
        self.gm_params_tau = float(markov["params_tau"])
        self.acc_density = float(proc["accel_density"])
        self.vel_density = float(proc["vel_density"])
        self.pos_density = float(proc["pos_density"])
        self.att_factor = float(proc["att_factor"])

        self.latitude: float | None = None
        self.earth = np.zeros(3)
        self._last_gyro = np.zeros(3)
        self._anchor: np.ndarray | None = None

    # -- initialization ----------------------------------------------------

    def _current_advection(self, vel: np.ndarray) -> float:
        # Moving through the spatial field decorrelates the current estimate:
        # one correlation length of travel resamples the full variance. Only
        # the driving noise scales with speed; the mean reversion stays
        # temporal, so the estimate keeps its memory and the uncertainty
        # widens instead of snapping back to the anchor.
        return float(np.linalg.norm(vel)) / self.current_length

    def _markov_decay(self, dt: float) -> np.ndarray:
        d = np.zeros(EUCLID_DIM)
        d[E_M_SUB] = d[E_DL_SUB] = d[E_DQ_SUB] = dt / self.gm_params_tau
        d[E_CUR_V] = d[E_CUR_B] = dt / self.gm_current.tau
        d[E_BG] = dt / self.gm_bg.tau
        d[E_BA] = dt / self.gm_ba.tau
        d[E_BC] = dt / self.gm_bc.tau
        return d

    def initial_belief(self, log: SensorLog) -> GaussianBelief:
        init = self.cfg.get("filter.init")
        self.latitude = log.latitude
        self.earth = earth_rotation_ned(log.latitude)
        g0 = gravity_wgs84(log.latitude)

        pos = np.zeros(3)
        if init.get("position") is not None:
            pos = np.asarray(init["position"], dtype=np.float64).copy()
        if init.get("from_first_fixes", True):
            horizon = (log.records[0].t + 5.0) if log.records else 0.0
            got_gps = got_pres = False
            for r in log.records:
                if r.t > horizon or (got_gps and got_pres):
                    break
                if r.kind == "gps" and not got_gps:
                    pos[0], pos[1] = r.north, r.east
                    got_gps = True
                elif r.kind == "pres" and not got_pres:
                    pos[2] = r.depth
                    got_pres = True

        heading = math.radians(float(init["heading_deg"]) + float(init["heading_error_deg"]))
        mean = NavState(
            position=pos,
            attitude=Rotation.from_rpy(0.0, 0.0, heading),
            gravity=g0,
            mass_sub=self.params.sub_entries(self.params.mass_matrix),
            damp_lin_sub=self.params.sub_entries(self.params.damping_lin),
            damp_quad_sub=self.params.sub_entries(self.params.damping_quad),
        )
        self._anchor = mean.to_euclid()

        sig = np.zeros(DIM)
        sig[0:3] = np.asarray(init["pos_sigma"], dtype=np.float64)
        tilt = math.radians(float(init["tilt_sigma_deg"]))
        sig[3:5] = tilt
        sig[5] = math.radians(float(init["heading_sigma_deg"]))
        sig[6:9] = float(init["vel_sigma"])
        sig[9:12] = float(init["accel_sigma"])
        sig[12:18] = self.param_sigmas["m"]
        sig[18:24] = self.param_sigmas["dl"]
        sig[24:30] = self.param_sigmas["dq"]
        sig[30:34] = self.gm_current.sigma_drift
        sig[34] = float(init["gravity_sigma"])
        sig[35:38] = self.gm_bg.sigma_drift
        sig[38:41] = self.gm_ba.sigma_drift
        sig[41:43] = self.gm_bc.sigma_drift
        return GaussianBelief(mean, np.diag(sig**2))

    # -- per-step noise ----------------------------------------------------

    def process_noise(self, dt: float, advect: float) -> np.ndarray:
        q = np.zeros(DIM)
        q[0:3] = self.pos_density**2 * dt
        q[3:6] = (self.att_factor * self.sig_gyro * dt) ** 2
        q[6:9] = self.vel_density**2 * dt
        q[9:12] = self.acc_density**2 * dt
        for sl, key in ((slice(12, 18), "m"), (slice(18, 24), "dl"), (slice(24, 30), "dq")):
            s = self.param_sigmas[key]
            q[sl] = 2.0 * s**2 * dt / self.gm_params_tau
        # water current: temporal relaxation plus spatial decorrelation with
        # distance traveled through the field
        sig_c = self.gm_current.sigma_drift
        q[30:34] = sig_c**2 * dt * (2.0 / self.gm_current.tau + advect)
        q[34] = 0.0
        q[35:38] = self.gm_bg.step_var(dt)
        q[38:41] = self.gm_ba.step_var(dt)
        q[41:43] = self.gm_bc.step_var(dt)
        return q

    # -- replay ------------------------------------------------------------

    def _blocked(self, kind: str, t: float) -> bool:
        if not self.enabled.get(kind, True):
            return True
        return any(w.blocks(kind, t) for w in self.denial)

    def run(self, log: SensorLog, record_every: int = 1) -> RunResult:
        """Replay ``log`` and return per-tick estimates.

        ``record_every`` keeps every n-th IMU-tick estimate (the final tick is
        always kept); thinning the output does not change the filtering.
        """
        belief = self.initial_belief(log)

        n_imu = sum(1 for r in log.records if r.kind == "imu")
        n_keep = (n_imu + record_every - 1) // record_every
        if n_imu and (n_imu - 1) % record_every != 0:
            n_keep += 1  # the final tick is always kept
        t_out = np.empty(n_keep)
        est = np.empty((n_keep, len(ESTIMATE_COLUMNS)))
        sigma = np.empty((n_keep, DIM))
        cov_ne = np.empty(n_keep)
        updates: list[dict] = []

        t_prev: float | None = None
        tick = 0
        kept = 0
        wall0 = time.perf_counter()
        for rec in log.records:
            if rec.kind == "imu":
                if t_prev is not None:
                    dt = rec.t - t_prev
                    if dt < 0:
                        raise NonMonotoneTimestamp(f"imu at t={rec.t} after t={t_prev}")
                    if dt > 0:
                        belief = self._predict(belief, rec.gyro, dt)
                t_prev = rec.t
                self._last_gyro = rec.gyro
                if not self._blocked("accel", rec.t):
                    belief = self._update(
                        belief, updates, rec.t, "accel", rec.accel,
                        self.sig_accel**2 * np.eye(3),
                        accel_measurement,
                        self.gates.get("accel"),
                    )
                if tick % record_every == 0 or tick == n_imu - 1:
                    t_out[kept] = rec.t
                    est[kept] = _state_row(belief.mean)
                    d = np.diag(belief.cov)
                    sigma[kept] = np.sqrt(np.maximum(d, 0.0))
                    cov_ne[kept] = belief.cov[0, 1]
                    kept += 1
                tick += 1
                continue

            logical = {"pres": "pressure", "thr": "model"}.get(rec.kind, rec.kind)
            if self._blocked(logical, rec.t):
                continue
            if rec.kind == "dvl":
                belief = self._update(
                    belief, updates, rec.t, "dvl", rec.vel, self.r_dvl,
                    lambda b: dvl_measurement(b, self._last_gyro, self.params.p_dvl),
                    self.gates.get("dvl"),
                )
            elif rec.kind == "pres":
                belief = self._update(
                    belief, updates, rec.t, "pressure", np.array([rec.depth]), self.r_pres,
                    pressure_measurement, self.gates.get("pressure"),
                )
            elif rec.kind == "gps":
                belief = self._update(
                    belief, updates, rec.t, "gps", np.array([rec.north, rec.east]), self.r_gps,
                    gps_measurement, self.gates.get("gps"),
                )
            elif rec.kind == "adcp":
                cells = [c for c in rec.cells if c.valid and 0.0 < c.dist <= self.d_max]
                if not cells:
                    continue
                z = np.concatenate([c.vel for c in cells])
                r = self.sig_adcp**2 * np.eye(3 * len(cells))
                dists = [c.dist for c in cells]

                def h_adcp(b, dists=dists):
                    return np.concatenate(
                        [adcp_measurement(b, d, self.d_max) for d in dists], axis=1
                    )

                belief = self._update(
                    belief, updates, rec.t, "adcp", z, r, h_adcp, self.gates.get("adcp")
                )
            elif rec.kind == "thr":
                z = thruster_wrench(rec.forces, self.params)
                r = self.r_model
                if belief.mean.position[2] < self.surface_depth:
                    # near the surface the rigid-body model misses wave and
                    # free-surface loads; de-weight rather than reject
                    r = r * self.surfaced_inflation
                belief = self._update(
                    belief, updates, rec.t, "model", z, r,
                    lambda b: model_aiding_measurement(
                        b, self._last_gyro, self.params, self.earth
                    ),
                    self.gates.get("model"),
                )
        wall = time.perf_counter() - wall0

        return RunResult(
            t=t_out[:kept],
            est=est[:kept],
            sigma=sigma[:kept],
            cov_ne=cov_ne[:kept],
            updates=updates,
            final=belief,
            n_predicts=max(tick - 1, 0),
            wall_time=wall,
        )

    # -- internals ---------------------------------------------------------

    def _predict(self, belief: GaussianBelief, gyro: np.ndarray, dt: float) -> GaussianBelief:
        advect = self._current_advection(belief.mean.velocity)
        decay = self._markov_decay(dt)
        anchor = self._anchor

        def f(batch):
            inertial_step(batch, gyro, dt, self.earth, decay, anchor)
            return batch

        return self.ukf.predict(belief, f, self.process_noise(dt, advect))

    def _update(self, belief, updates, t, kind, z, r, h, gate) -> GaussianBelief:
        belief, report = self.ukf.update(belief, h, z, r, gate_confidence=gate)
        updates.append(
            {
                "t": t,
                "kind": kind,
                "dof": report.dof,
                "accepted": report.accepted,
                "d2": report.mahalanobis_sq,
                "threshold": report.threshold if report.threshold is not None else math.inf,
                "innovation_norm": float(np.linalg.norm(report.innovation)),
            }
        )
        return belief
