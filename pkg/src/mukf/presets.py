"""Canned experiment configurations for the benchmark scenarios.

Each builder returns a ready-to-run :class:`ExperimentConfig`; the CLI maps
``--preset`` names onto :data:`PRESETS`. The builders only assemble config
dictionaries — everything they set can equally be written in a YAML file and
passed with ``--config``.
"""

from __future__ import annotations

from .logio import ExperimentConfig

# Four corners of an axis-aligned square, starting and ending at the origin.
_SQUARE = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]


def _laps(side: float, depth: float, speed: float, n: int) -> list[dict]:
    segs = []
    for _ in range(n):
        for cn, ce in _SQUARE:
            segs.append(
                {
                    "kind": "transit",
                    "target": [cn * side, ce * side],
                    "depth": depth,
                    "speed": speed,
                }
            )
    return segs


def gyrocompass(imu_rate: float = 100.0) -> ExperimentConfig:
    """Heading self-alignment from earth rotation, no position aiding.

    A short stationary hold, an eight-minute straight surface line, then a
    submerged leg with gentle turns so the gyro biases become observable.
    The filter starts with a 15 degree heading error and a 30 degree prior;
    GPS is denied once the first fixes have seeded the initial position, so
    heading has to come from the earth rotation signature alone.
    """
    return ExperimentConfig.from_dict(
        {
            "duration": 960.0,
            "mission": {
                "start": [0.0, 0.0, 0.3],
                "heading_deg": 0.0,
                "segments": [
                    {"kind": "hold", "depth": 0.3, "heading_deg": 0.0, "duration": 60.0},
                    {"kind": "transit", "target": [240.0, 0.0], "depth": 0.3, "speed": 0.5},
                    {"kind": "transit", "target": [240.0, 60.0], "depth": 5.0, "speed": 0.5},
                    {"kind": "transit", "target": [120.0, 60.0], "depth": 5.0, "speed": 0.5},
                    {"kind": "transit", "target": [120.0, 0.0], "depth": 5.0, "speed": 0.5},
                ],
            },
            "sensors": {"imu": {"rate": imu_rate}},
            "denial": [{"t0": 30.0, "t1": 960.0, "kinds": ["gps"]}],
            "filter": {
                "init": {
                    "heading_deg": 0.0,
                    "heading_error_deg": 15.0,
                    "heading_sigma_deg": 30.0,
                }
            },
        }
    )


def square5x50(imu_rate: float = 100.0) -> ExperimentConfig:
    """Dead-reckoned square: 5 laps of a 50 m square (1 km) at 10 m depth.

    GPS is available only while the vehicle floats at the surface during the
    first segment; after the dive the filter runs on IMU + DVL + pressure +
    thruster model aiding. ADCP is off — this scenario measures bottom-lock
    dead reckoning.
    """
    return ExperimentConfig.from_dict(
        {
            # the laps finish around t=1290; an open end would leave the
            # vehicle station-keeping (and drifting with the current) for
            # the simulator's worst-case duration estimate
            "duration": 1300.0,
            "mission": {
                "start": [0.0, 0.0, 0.3],
                "heading_deg": 0.0,
                "segments": [
                    {"kind": "hold", "depth": 0.3, "heading_deg": 0.0, "duration": 40.0},
                    {"kind": "hold", "depth": 10.0, "heading_deg": 0.0, "duration": 30.0},
                ]
                + _laps(50.0, 10.0, 0.8, 5),
            },
            "current": {"surface": [0.10, -0.05], "deep": [0.05, -0.02]},
            "sensors": {"imu": {"rate": imu_rate}},
            "enabled": {"adcp": False},
            "filter": {"init": {"heading_deg": 0.0, "heading_error_deg": 2.0}},
        }
    )


def adcp_square(imu_rate: float = 100.0) -> ExperimentConfig:
    """Surfaced ten-minute init, then a square with corner surfacing.

    The first 600 s are a slow surface line so GPS, DVL and ADCP settle the
    biases and the current states. The following 1000 s are a square at
    10 m depth whose corners each end in a short surfacing — this is the
    window a denial study drops DVL and GPS over. The preset leaves every
    aid enabled; the denial window itself comes from ``--deny`` or a config
    override.
    """
    square: list[dict] = []
    corners = [[150.0, 100.0], [50.0, 100.0], [50.0, 0.0], [150.0, 0.0]]
    for (cn, ce), depth in zip(corners, [10.0, 22.0, 10.0, 22.0]):
        # the 22 m legs run 4 m off the seafloor: the ADCP cells all reach
        # past the bottom there, so those stretches have no valid water cells
        square.append({"kind": "transit", "target": [cn, ce], "depth": depth, "speed": 0.5})
        square.append({"kind": "hold", "depth": 0.3, "duration": 25.0})
    return ExperimentConfig.from_dict(
        {
            "duration": 1600.0,
            "mission": {
                "start": [0.0, 0.0, 0.3],
                "heading_deg": 0.0,
                "segments": [
                    {"kind": "hold", "depth": 0.3, "heading_deg": 0.0, "duration": 60.0},
                    {"kind": "transit", "target": [150.0, 0.0], "depth": 0.3, "speed": 0.3},
                    {"kind": "hold", "depth": 0.3, "duration": 30.0},
                ]
                + square,
            },
            "current": {"surface": [0.20, -0.10], "deep": [0.05, 0.0]},
            "environment": {"seafloor_depth": 26.0},
            "sensors": {"imu": {"rate": imu_rate}},
            "filter": {"init": {"heading_deg": 0.0, "heading_error_deg": 2.0}},
        }
    )


def zero_noise_line(imu_rate: float = 100.0) -> tuple[ExperimentConfig, ExperimentConfig]:
    """A noiseless straight surface transit plus its matched filter config.

    Returns ``(sim_cfg, filter_cfg)``. The sim config zeroes every noise
    source so the log is an exact rendering of the dynamics; the filter
    config is identical except the measurement sigmas get small floors —
    a filter fed zero-variance measurements would treat them as hard
    constraints and amplify round-off instead of averaging it away.

    The run stays surfaced (GPS active) and flies a single straight leg at
    constant depth and heading, so the zero-angular-acceleration assumption
    in the model-aiding measurement holds along the whole path. It opens
    with a short hold: the vehicle then starts at its thrust-trimmed
    equilibrium and the first measurements carry zero innovation instead of
    a step the fresh (wide) priors would misattribute.
    """
    quiet = {
        "duration": 600.0,
        "mission": {
            "start": [0.0, 0.0, 0.3],
            "heading_deg": 0.0,
            "segments": [
                {"kind": "hold", "depth": 0.3, "heading_deg": 0.0, "duration": 30.0},
                {"kind": "transit", "target": [300.0, 0.0], "depth": 0.3, "speed": 0.3},
            ],
        },
        "current": {"surface": [0.0, 0.0], "deep": [0.0, 0.0]},
        "environment": {"coriolis": False},
        "sensors": {
            "imu": {
                "rate": imu_rate,
                "gyro_noise_density": 0.0,
                "accel_noise_density": 0.0,
                "gyro_bias_sigma": 0.0,
                "accel_bias_sigma": 0.0,
            },
            "dvl": {"sigma": 0.0},
            "adcp": {"sigma": 0.0, "bias_sigma": 0.0},
            "gps": {"sigma": 0.0, "outlier_prob": 0.0},
            "pressure": {"sigma": 0.0},
        },
    }
    sim_cfg = ExperimentConfig.from_dict(quiet)
    filter_cfg = sim_cfg.override(
        {
            "sensors": {
                # bias sigmas stay nonzero too: a zero prior variance row
                # would make the initial covariance singular
                "imu": {
                    "gyro_noise_density": 1e-7,
                    "accel_noise_density": 1e-5,
                    "gyro_bias_sigma": 1e-9,
                    "accel_bias_sigma": 1e-7,
                },
                "dvl": {"sigma": 1e-4},
                "adcp": {"sigma": 1e-3, "bias_sigma": 1e-6},
                "gps": {"sigma": 0.01},
                "pressure": {"sigma": 1e-3},
            },
            "filter": {
                # the init is exact by construction (hold segment, known
                # start), and the priors say so: wide sigma-point spreads
                # would otherwise feed second-order curvature terms of the
                # restoring torque into the first updates as fake innovation
                "init": {
                    "position": [0.0, 0.0, 0.3],
                    "heading_deg": 0.0,
                    "heading_error_deg": 0.0,
                    "heading_sigma_deg": 0.2,
                    "tilt_sigma_deg": 0.1,
                    "pos_sigma": [0.05, 0.05, 0.02],
                    "vel_sigma": 0.01,
                    "accel_sigma": 0.01,
                    "gravity_sigma": 1e-3,
                },
                "process": {"pos_density": 1e-3},
                # likewise the model is exact, so parameters stay pinned
                # instead of absorbing discretization residue of the
                # thrust-step transients
                "markov": {
                    "current_sigma": 0.02,
                    "params_frac": 1e-4,
                    "params_floor": [5e-3, 5e-3, 5e-3],
                },
                "measurement": {"model_sigma_force": 1.0, "model_sigma_torque": 1.0},
            },
        }
    )
    return sim_cfg, filter_cfg


PRESETS = {
    "gyrocompass": gyrocompass,
    "square5x50": square5x50,
    "adcp-square": adcp_square,
}
