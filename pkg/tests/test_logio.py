import numpy as np
import pytest

from mukf.errors import (
    ConfigError,
    MalformedRecord,
    NonMonotoneTimestamp,
    SchemaMismatch,
)
from mukf.logio import (
    AdcpCell,
    AdcpProfile,
    DEFAULT_CONFIG,
    DvlSample,
    ExperimentConfig,
    GpsFix,
    ImuSample,
    PressureSample,
    SensorLog,
    ThrusterCommand,
    read_log,
    read_results,
    write_log,
    write_results,
)


def sample_log():
    records = [
        ImuSample(0.0, np.array([1e-3, -2e-4, 0.12345678901234567]),
                  np.array([0.01, -0.02, -9.81])),
        PressureSample(0.0, 12.345),
        ImuSample(0.01, np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, -9.78])),
        DvlSample(0.01, np.array([0.5, -0.01, 0.002])),
        GpsFix(0.01, 3.25, -7.5),
        AdcpProfile(
            0.01,
            (
                AdcpCell(4.0, np.array([0.1, 0.2, -0.05]), True),
                AdcpCell(20.0, np.array([0.0, 0.0, 0.0]), False),
            ),
        ),
        ThrusterCommand(0.01, np.array([10.0, -10.0, 0.0, 0.0, 3.5, 3.5])),
    ]
    return SensorLog(latitude=-0.22689280275926285, t0=1.7e9, records=records)


class TestLogRoundTrip:
    def test_counts_and_header(self, tmp_path):
        p = tmp_path / "a.log"
        write_log(p, sample_log())
        log = read_log(p)
        assert log.latitude == -0.22689280275926285
        assert log.t0 == 1.7e9
        assert log.counts() == {"imu": 2, "pres": 1, "dvl": 1, "gps": 1, "adcp": 1, "thr": 1}

    def test_values_lossless(self, tmp_path):
        p = tmp_path / "a.log"
        orig = sample_log()
        write_log(p, orig)
        log = read_log(p)
        for a, b in zip(orig.records, log.records):
            assert a.t == b.t
            assert a.kind == b.kind
        imu = log.records[0]
        # repr round-trip must preserve every bit
        assert imu.gyro[2] == 0.12345678901234567
        np.testing.assert_array_equal(imu.accel, orig.records[0].accel)
        adcp = [r for r in log.records if r.kind == "adcp"][0]
        assert adcp.cells[0].dist == 4.0
        assert adcp.cells[0].valid
        assert not adcp.cells[1].valid
        thr = [r for r in log.records if r.kind == "thr"][0]
        np.testing.assert_array_equal(thr.forces, orig.records[-1].forces)

    def test_rewrite_byte_identical(self, tmp_path):
        p1, p2 = tmp_path / "a.log", tmp_path / "b.log"
        write_log(p1, sample_log())
        write_log(p2, read_log(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_log(self, tmp_path):
        p = tmp_path / "e.log"
        write_log(p, SensorLog(latitude=0.1, t0=0.0, records=[]))
        log = read_log(p)
        assert log.records == []
        assert log.duration == 0.0

    def test_comments_and_blanks_skipped(self, tmp_path):
        p = tmp_path / "c.log"
        p.write_text(
            "#mukf-log v1 lat=0.1 t0=0.0\n"
            "\n"
            "# a comment\n"
            "1.5 pres d=10.0\n"
        )
        log = read_log(p)
        assert len(log.records) == 1
        assert log.records[0].depth == 10.0


class TestLogErrors:
    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.log"
        p.write_text("not a header\n")
        with pytest.raises(SchemaMismatch):
            read_log(p)

    def test_unknown_kind(self, tmp_path):
        p = tmp_path / "x.log"
        p.write_text("#mukf-log v1 lat=0.0 t0=0.0\n1.0 sonar range=5\n")
        with pytest.raises(MalformedRecord, match="line 2"):
            read_log(p)

    def test_missing_field(self, tmp_path):
        p = tmp_path / "x.log"
        p.write_text("#mukf-log v1 lat=0.0 t0=0.0\n1.0 dvl vx=1 vy=2\n")
        with pytest.raises(MalformedRecord, match="line 2"):
            read_log(p)

    def test_non_monotone_time(self, tmp_path):
        p = tmp_path / "x.log"
        p.write_text(
            "#mukf-log v1 lat=0.0 t0=0.0\n"
            "2.0 pres d=1\n"
            "1.0 pres d=2\n"
        )
        with pytest.raises(NonMonotoneTimestamp, match="line 3"):
            read_log(p)

    def test_bad_float(self, tmp_path):
        p = tmp_path / "x.log"
        p.write_text("#mukf-log v1 lat=0.0 t0=0.0\n1.0 pres depth=bogus\n")
        with pytest.raises(MalformedRecord, match="line 2"):
            read_log(p)

    def test_bad_cell(self, tmp_path):
        p = tmp_path / "x.log"
        p.write_text("#mukf-log v1 lat=0.0 t0=0.0\n1.0 adcp cell=4:0.1:0.2\n")
        with pytest.raises(MalformedRecord, match="line 2"):
            read_log(p)


class TestResultsCsv:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "r.csv"
        cols = {
            "t": np.array([0.0, 0.5, 1.0]),
            "p_n": np.array([0.0, 0.1, 0.25]),
            "sig_p_n": np.array([1.0, 0.9, 0.8]),
        }
        write_results(p, cols)
        back = read_results(p)
        assert list(back.keys()) == ["t", "p_n", "sig_p_n"]
        for k in cols:
            np.testing.assert_array_equal(back[k], cols[k])

    def test_requires_sigma_columns(self, tmp_path):
        p = tmp_path / "r.csv"
        write_results(p, {"t": np.array([0.0]), "p_n": np.array([1.0])})
        with pytest.raises(SchemaMismatch):
            read_results(p)

    def test_ragged_rejected(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("t,p_n,sig_p_n\n0.0,1.0\n")
        with pytest.raises(MalformedRecord):
            read_results(p)


class TestConfig:
    def test_defaults_complete(self):
        cfg = ExperimentConfig.from_dict({})
        assert cfg.get("sensors.imu.rate") == 100.0
        assert cfg.get("filter.ut.alpha") == 0.01
        assert cfg.get("geo.latitude_deg") == -13.0

    def test_override_merges_deep(self):
        cfg = ExperimentConfig.from_dict({"sensors": {"imu": {"rate": 25.0}}})
        assert cfg.get("sensors.imu.rate") == 25.0
        # untouched siblings keep their defaults
        assert cfg.get("sensors.imu.gyro_noise_density") == DEFAULT_CONFIG["sensors"]["imu"]["gyro_noise_density"]
        assert cfg.get("sensors.dvl.rate") == 5.0

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="sensros"):
            ExperimentConfig.from_dict({"sensros": {}})

    def test_yaml_round_trip(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        cfg = ExperimentConfig.from_dict({"seed": 7, "duration": 120.0})
        cfg.save(p)
        back = ExperimentConfig.load(p)
        assert back.data == cfg.data

    def test_dotted_get_missing(self):
        cfg = ExperimentConfig.from_dict({})
        with pytest.raises(ConfigError):
            cfg.get("sensors.sonar.rate")

    def test_override_helper(self):
        cfg = ExperimentConfig.from_dict({})
        out = cfg.override({"sensors": {"imu": {"rate": 12.5}}})
        assert out.get("sensors.imu.rate") == 12.5
        assert cfg.get("sensors.imu.rate") == 100.0
