import pytest

from parkloc.core import GroundTruthSample, ManeuverLog, SensorSample
from parkloc.errors import ValidationError
from parkloc.logio import (SENSOR_COLUMNS, TRUTH_COLUMNS, read_log,
                           read_sensor_csv, read_truth_csv, write_log)


def build_log(n=20, dt=0.01):
    samples = []
    truth = []
    for k in range(n):
        t = k * dt
        samples.append(SensorSample(
            t=t, accel=(0.1, -0.2, -9.81), gyro=(0.0, 0.0, 0.3),
            wheel_speeds=(1.0, 1.1, 0.9, 1.05), steering_front=0.123456789123,
            gear="R" if k % 2 else "F"))
        truth.append(GroundTruthSample(t=t, x=1.0 * t, y=-0.5 * t, psi=0.01 * k,
                                       v_x=1.0, v_y=0.02, omega_z=0.3))
    return ManeuverLog(samples=tuple(samples), truth=tuple(truth), maneuver_id="rt")


class TestCsvRoundTrip:
    def test_headers_exact(self, tmp_path):
        log = build_log()
        write_log(log, tmp_path / "m_log.csv", tmp_path / "m_truth.csv")
        assert (tmp_path / "m_log.csv").read_text().splitlines()[0] == \
            "t,ax,ay,az,wx,wy,wz,ws_fl,ws_fr,ws_rl,ws_rr,delta_f,gear"
        assert (tmp_path / "m_truth.csv").read_text().splitlines()[0] == \
            "t,X,Y,psi,vx,vy,wz"
        assert SENSOR_COLUMNS[-1] == "gear" and TRUTH_COLUMNS[0] == "t"

    def test_values_survive_round_trip(self, tmp_path):
        log = build_log()
        write_log(log, tmp_path / "m_log.csv", tmp_path / "m_truth.csv")
        loaded = read_log(tmp_path / "m_log.csv", tmp_path / "m_truth.csv")
        for a, b in zip(loaded.samples, log.samples):
            assert a.gear == b.gear
            assert a.steering_front == pytest.approx(b.steering_front, rel=1e-11)
            assert a.wheel_speeds == pytest.approx(b.wheel_speeds, rel=1e-11)
        for a, b in zip(loaded.truth, log.truth):
            assert (a.x, a.y, a.psi) == pytest.approx((b.x, b.y, b.psi), rel=1e-11)

    def test_twelve_significant_digits(self, tmp_path):
        log = build_log()
        write_log(log, tmp_path / "m_log.csv")
        row = (tmp_path / "m_log.csv").read_text().splitlines()[1].split(",")
        assert row[11] == "0.123456789123"

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,ax\n0.0,0.0\n")
        with pytest.raises(ValidationError):
            read_sensor_csv(path)

    def test_bad_gear_rejected(self, tmp_path):
        log = build_log(n=2)
        write_log(log, tmp_path / "m_log.csv")
        text = (tmp_path / "m_log.csv").read_text().replace(",F", ",P")
        (tmp_path / "m_log.csv").write_text(text)
        with pytest.raises(ValidationError):
            read_sensor_csv(tmp_path / "m_log.csv")

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "bad_truth.csv"
        path.write_text("t,X,Y,psi,vx,vy,wz\n0.0,a,0,0,0,0,0\n")
        with pytest.raises(ValidationError):
            read_truth_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValidationError):
            read_sensor_csv(path)
