"""Sensor logs, result files and experiment configuration.

The sensor log is a plain-text line format, one record per line::

    #mukf-log v1 lat=<rad> t0=<epoch s>
    <t> imu gx=.. gy=.. gz=.. ax=.. ay=.. az=..
    <t> dvl vx=.. vy=.. vz=..
    <t> adcp cell=<dist>:<vx>:<vy>:<vz>:<valid> [cell=..]
    <t> gps n=.. e=..
    <t> pres d=..
    <t> thr f1=.. f2=.. ..

Timestamps are seconds since ``t0`` and must be non-decreasing. Floats are
serialized with ``repr`` (shortest round-trip form), so read/write cycles are
lossless and byte-stable. Angles are radians everywhere in files; degrees
appear only at the CLI/config surface with explicit ``_deg`` suffixes.

Results and truth files are comma-separated with a fixed, documented column
order (see docs/formats.md); experiment configuration is YAML deep-merged
over :data:`DEFAULT_CONFIG`.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    ConfigError,
    MalformedRecord,
    NonMonotoneTimestamp,
    SchemaMismatch,
)

__all__ = [
    "ImuSample",
    "DvlSample",
    "AdcpCell",
    "AdcpProfile",
    "GpsFix",
    "PressureSample",
    "ThrusterCommand",
    "SensorLog",
    "read_log",
    "write_log",
    "write_results",
    "read_results",
    "write_truth",
    "read_truth",
    "write_updates",
    "ExperimentConfig",
    "DEFAULT_CONFIG",
]

_MAGIC = "#mukf-log"
_VERSION = "v1"


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro: np.ndarray  # rad/s, body
    accel: np.ndarray  # m/s^2 specific force, body

    kind = "imu"


@dataclass(frozen=True)
class DvlSample:
    t: float
    vel: np.ndarray  # m/s, body frame at the DVL head

    kind = "dvl"


@dataclass(frozen=True)
class AdcpCell:
    dist: float  # m below the vehicle
    vel: np.ndarray  # m/s, instrument axes, water relative to vehicle
    valid: bool


@dataclass(frozen=True)
class AdcpProfile:
    t: float
    cells: tuple

    kind = "adcp"


@dataclass(frozen=True)
class GpsFix:
    t: float
    north: float
    east: float

    kind = "gps"


@dataclass(frozen=True)
class PressureSample:
    t: float
    depth: float  # m, positive down

    kind = "pres"


@dataclass(frozen=True)
class ThrusterCommand:
    t: float
    forces: np.ndarray  # N per thruster

    kind = "thr"


@dataclass
class SensorLog:
    """All records of one run, time ordered, plus the site metadata."""

    latitude: float  # rad
    t0: float = 0.0  # epoch seconds of t == 0
    records: list = field(default_factory=list)

    def counts(self) -> dict:
        out: dict = {}
        for r in self.records:
            out[r.kind] = out.get(r.kind, 0) + 1
        return out

    @property
    def duration(self) -> float:
        return self.records[-1].t - self.records[0].t if self.records else 0.0


def _f(x) -> str:
    return repr(float(x))


def write_log(path, log: SensorLog) -> None:
    lines = [f"{_MAGIC} {_VERSION} lat={_f(log.latitude)} t0={_f(log.t0)}"]
    for r in log.records:
        t = _f(r.t)
        if r.kind == "imu":
            g, a = r.gyro, r.accel
            lines.append(
                f"{t} imu gx={_f(g[0])} gy={_f(g[1])} gz={_f(g[2])}"
                f" ax={_f(a[0])} ay={_f(a[1])} az={_f(a[2])}"
            )
        elif r.kind == "dvl":
            v = r.vel
            lines.append(f"{t} dvl vx={_f(v[0])} vy={_f(v[1])} vz={_f(v[2])}")
        elif r.kind == "adcp":
            cells = " ".join(
                f"cell={_f(c.dist)}:{_f(c.vel[0])}:{_f(c.vel[1])}:{_f(c.vel[2])}:{int(c.valid)}"
                for c in r.cells
            )
            lines.append(f"{t} adcp {cells}")
        elif r.kind == "gps":
            lines.append(f"{t} gps n={_f(r.north)} e={_f(r.east)}")
        elif r.kind == "pres":
            lines.append(f"{t} pres d={_f(r.depth)}")
        elif r.kind == "thr":
            forces = " ".join(f"f{i + 1}={_f(v)}" for i, v in enumerate(r.forces))
            lines.append(f"{t} thr {forces}")
        else:  # pragma: no cover - record types are closed
            raise MalformedRecord(f"unknown record kind {r.kind!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _fields(parts, lineno, expected) -> dict:
    out = {}
    for p in parts:
        if "=" not in p:
            raise MalformedRecord(f"line {lineno}: bad field {p!r}")
        k, v = p.split("=", 1)
        out[k] = v
    if expected is not None and set(out) != set(expected):
        raise MalformedRecord(
            f"line {lineno}: expected fields {sorted(expected)}, got {sorted(out)}"
        )
    return out


def _float(s: str, lineno: int) -> float:
    try:
        return float(s)
    except ValueError:
        raise MalformedRecord(f"line {lineno}: not a number: {s!r}") from None


def read_log(path) -> SensorLog:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise SchemaMismatch(f"{path}: empty file, missing header")
    header = lines[0].split()
    if len(header) < 2 or header[0] != _MAGIC:
        raise SchemaMismatch(f"{path}: not a {_MAGIC} file")
    if header[1] != _VERSION:
        raise SchemaMismatch(f"{path}: unsupported version {header[1]!r}, expected {_VERSION}")
    head = _fields(header[2:], 1, {"lat", "t0"})
    log = SensorLog(latitude=_float(head["lat"], 1), t0=_float(head["t0"], 1))

    last_t = -np.inf
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise MalformedRecord(f"line {lineno}: too few tokens")
        t = _float(parts[0], lineno)
        kind = parts[1]
        if t < last_t:
            raise NonMonotoneTimestamp(f"line {lineno}: t={t} after t={last_t}")
        last_t = t
        body = parts[2:]
        if kind == "imu":
            f = _fields(body, lineno, {"gx", "gy", "gz", "ax", "ay", "az"})
            rec = ImuSample(
                t,
                np.array([_float(f["gx"], lineno), _float(f["gy"], lineno), _float(f["gz"], lineno)]),
                np.array([_float(f["ax"], lineno), _float(f["ay"], lineno), _float(f["az"], lineno)]),
            )
        elif kind == "dvl":
            f = _fields(body, lineno, {"vx", "vy", "vz"})
            rec = DvlSample(
                t, np.array([_float(f["vx"], lineno), _float(f["vy"], lineno), _float(f["vz"], lineno)])
            )
        elif kind == "adcp":
            cells = []
            for p in body:
                f = _fields([p], lineno, {"cell"})
                bits = f["cell"].split(":")
                if len(bits) != 5:
                    raise MalformedRecord(f"line {lineno}: cell needs 5 ':' fields, got {len(bits)}")
                cells.append(
                    AdcpCell(
                        _float(bits[0], lineno),
                        np.array([_float(b, lineno) for b in bits[1:4]]),
                        bool(int(bits[4])),
                    )
                )
            rec = AdcpProfile(t, tuple(cells))
        elif kind == "gps":
            f = _fields(body, lineno, {"n", "e"})
            rec = GpsFix(t, _float(f["n"], lineno), _float(f["e"], lineno))
        elif kind == "pres":
            f = _fields(body, lineno, {"d"})
            rec = PressureSample(t, _float(f["d"], lineno))
        elif kind == "thr":
            f = _fields(body, lineno, None)
            keys = sorted(f, key=lambda k: int(k[1:]) if k[1:].isdigit() else -1)
            if any(not k.startswith("f") or not k[1:].isdigit() for k in f):
                raise MalformedRecord(f"line {lineno}: thr fields must be f1..fN")
            rec = ThrusterCommand(t, np.array([_float(f[k], lineno) for k in keys]))
        else:
            raise MalformedRecord(f"line {lineno}: unknown record kind {kind!r}")
        log.records.append(rec)
    return log


# ---------------------------------------------------------------------------
# CSV-style result and truth files
# ---------------------------------------------------------------------------


def _write_csv(path, columns: list[str], arrays: dict) -> None:
    n = len(arrays[columns[0]])
    cols = [np.asarray(arrays[c]) for c in columns]
    for c, a in zip(columns, cols):
        if len(a) != n:
            raise SchemaMismatch(f"column {c!r} has {len(a)} rows, expected {n}")
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for i in range(n):
            fh.write(",".join(repr(float(a[i])) for a in cols) + "\n")


def _read_csv(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise SchemaMismatch(f"{path}: empty file")
        columns = header.split(",")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(columns):
                raise MalformedRecord(
                    f"line {lineno}: {len(parts)} values for {len(columns)} columns"
                )
            rows.append([_float(p, lineno) for p in parts])
    data = np.asarray(rows, dtype=np.float64).reshape(-1, len(columns))
    return {c: data[:, i] for i, c in enumerate(columns)}


def write_results(path, arrays: dict, columns: list[str] | None = None) -> None:
    """Per-timestep state estimates, marginal sigmas and (optionally) truth
    differences; column order follows ``columns`` or dict insertion order."""
    _write_csv(path, columns or list(arrays), arrays)


def read_results(path) -> dict:
    out = _read_csv(path)
    if "t" not in out or not any(c.startswith("sig_") for c in out):
        raise SchemaMismatch(f"{path}: not a results file (missing t/sig_ columns)")
    return out


def write_truth(path, arrays: dict, columns: list[str] | None = None, meta: dict | None = None) -> None:
    _write_csv(path, columns or list(arrays), arrays)
    if meta is not None:
        Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True))


def read_truth(path) -> tuple[dict, dict]:
    data = _read_csv(path)
    if "t" not in data or "p_n" not in data:
        raise SchemaMismatch(f"{path}: not a truth file (missing t/p_n columns)")
    meta_path = Path(str(path) + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return data, meta


def write_updates(path, reports: list[dict]) -> None:
    """Measurement-update audit trail: one row per update attempt."""
    cols = ["t", "kind", "dof", "accepted", "d2", "threshold", "innovation_norm"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in reports:
            fh.write(
                f"{r['t']!r},{r['kind']},{r['dof']},{int(r['accepted'])},"
                f"{r['d2']!r},{r['threshold']!r},{r['innovation_norm']!r}\n"
            )


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "geo": {"latitude_deg": -13.0},
    "duration": None,  # seconds; None runs the mission to completion
    "mission": {
        "segments": [
            # {"kind": "hold"|"transit", "target": [n, e], "depth": d,
            #  "speed": u, "heading_deg": h, "duration": s}
        ],
        "capture_radius": 2.0,
    },
    "current": {
        "surface": [0.0, 0.0],  # m/s N/E at zero depth
        "deep": [0.0, 0.0],  # m/s N/E at ref_depth and below
        "ref_depth": 30.0,
        "drift_rate": [0.0, 0.0],  # m/s per s, added linearly in time
    },
    "environment": {
        "seafloor_depth": 35.0,
        "surface_depth": 0.5,  # shallower than this counts as surfaced
        "coriolis": True,
        "tether": {"enabled": False, "force": 20.0, "period": 600.0, "yaw_torque": 4.0},
    },
    "vehicle": {"preset": "default", "sim_perturbation": 0.0},
    "sensors": {
        "imu": {
            "rate": 100.0,
            "gyro_noise_density": 5e-6,  # rad/s/sqrt(Hz)
            "accel_noise_density": 1.2e-3,  # m/s^2/sqrt(Hz)
            "gyro_bias_sigma": 2.4e-7,  # rad/s stationary
            "gyro_bias_tau": 3600.0,
            "accel_bias_sigma": 5e-3,  # m/s^2 stationary
            "accel_bias_tau": 3600.0,
        },
        "dvl": {"rate": 5.0, "sigma": 0.005, "max_altitude": 200.0},
        "adcp": {
            "rate": 1.0,
            "sigma": 0.05,  # per-cell water-track, much noisier than bottom-track
            "cells": [4.0, 8.0, 12.0, 16.0, 20.0],
            "d_max": 20.0,
            "bias_sigma": 0.04,  # water-track velocity bias, m/s
            "bias_tau": 1800.0,
            "outlier_prob": 0.03,  # per cell: scattering layers, sidelobe hits
            "outlier_sigma": 0.8,
        },
        "gps": {"rate": 1.0, "sigma": 1.5, "outlier_prob": 0.05, "outlier_sigma": 30.0},
        "pressure": {"rate": 5.0, "sigma": 0.02},
        "control": {"rate": 5.0},
    },
    "filter": {
        "ut": {"alpha": 0.01, "beta": 2.0, "kappa": 0.0},
        "gates": {
            "accel": None,  # never gated: it is the workhorse update
            "dvl": 0.99,
            "gps": 0.99,
            "adcp": 0.99,
            "pressure": 0.99,
            "model": 0.99,
        },
        "process": {
            "accel_density": 0.05,  # m/s^2/sqrt(s) random walk on the accel state
            "vel_density": 1e-3,
            "pos_density": 0.0,
            "att_factor": 1.2,  # inflation on the gyro-noise attitude Q
        },
        "markov": {
            "current_sigma": 0.08,
            "current_tau": 3600.0,
            "current_speed_scale": 500.0,  # m; spatial decorrelation length
            "params_frac": 0.2,  # stationary sigma as fraction of nominal
            "params_floor": [2.0, 1.0, 2.0],  # absolute floor for M, D_l, D_q entries
            "params_tau": 3600.0,
        },
        "measurement": {
            "model_sigma_force": 8.0,  # N; covers thrust-map error and unmodeled coupling
            "model_sigma_torque": 8.0,  # N m
            "surfaced_inflation": 10.0,
        },
        "init": {
            "heading_deg": 0.0,
            "heading_error_deg": 0.0,  # deliberate offset added to the truth heading
            "heading_sigma_deg": 10.0,
            "tilt_sigma_deg": 2.0,
            "pos_sigma": [5.0, 5.0, 0.5],
            "vel_sigma": 0.2,
            "accel_sigma": 0.05,
            "gravity_sigma": 0.01,
            "from_first_fixes": True,
        },
        "param_perturbation": 0.0,  # fractional error of the filter's assumed vehicle
    },
    "enabled": {"accel": True, "dvl": True, "adcp": True, "gps": True, "pressure": True, "model": True},
    "denial": [],  # [{"t0": s, "t1": s, "kinds": ["gps", ..]}]
}


def _deep_merge(base: dict, override: dict, path_: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        here = f"{path_}.{k}" if path_ else k
        if k in out and isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _deep_merge(out[k], v, here)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    """A validated configuration tree: user values deep-merged over defaults.

    Access nested values with :meth:`get` using dotted paths; unknown
    top-level sections are rejected so typos fail loudly.
    """

    data: dict

    @classmethod
    def from_dict(cls, override: dict | None = None) -> "ExperimentConfig":
        override = override or {}
        unknown = set(override) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        return cls(_deep_merge(DEFAULT_CONFIG, override))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text())
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(raw)

    def save(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.data, sort_keys=False))

    def get(self, dotted: str, default=None):
        node = self.data
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is not None:
                    return default
                raise ConfigError(f"missing config key {dotted!r}")
            node = node[part]
        return node

    def override(self, override: dict) -> "ExperimentConfig":
        return ExperimentConfig(_deep_merge(self.data, override))
