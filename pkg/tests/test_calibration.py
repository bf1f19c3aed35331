import math

import numpy as np
import pytest

from parkloc.calibration import (CalibrationSample, GateThresholds,
                                 VARIANT_DELTA_BETA, VARIANT_OMEGA_VY,
                                 calibrate_log, estimate_delta_beta,
                                 estimate_omega_vy, gate_samples,
                                 segment_by_direction)
from parkloc.core import GroundTruthSample, ManeuverLog, SensorSample
from parkloc.errors import NumericalError, ValidationError
from parkloc.lateral import k_from_x

WHEELBASE = 2.9


def truth_sample(t, v_x, v_y=0.0, omega=0.0):
    return GroundTruthSample(t=t, x=0.0, y=0.0, psi=0.0, v_x=v_x, v_y=v_y,
                             omega_z=omega)


def sensor_sample(t, steering=0.0):
    return SensorSample(t=t, accel=(0, 0, -9.81), gyro=(0, 0, 0),
                        wheel_speeds=(1, 1, 1, 1), steering_front=steering, gear="F")


def log_from_vx(profile, dt=0.01):
    samples = tuple(sensor_sample(k * dt) for k in range(len(profile)))
    truth = tuple(truth_sample(k * dt, v) for k, v in enumerate(profile))
    return ManeuverLog(samples=samples, truth=truth)


class TestSegmentByDirection:
    def test_forward_only(self):
        log = log_from_vx([1.0] * 20)
        assert segment_by_direction(log) == [(1, 0, 20)]

    def test_forward_stop_reverse(self):
        profile = [1.0] * 10 + [0.0] * 5 + [-1.0] * 10
        log = log_from_vx(profile)
        assert segment_by_direction(log) == [(1, 0, 10), (-1, 15, 25)]

    def test_all_deadband(self):
        log = log_from_vx([0.05] * 10)
        assert segment_by_direction(log) == []

    def test_requires_truth(self):
        log = ManeuverLog(samples=tuple(sensor_sample(k * 0.01) for k in range(5)))
        with pytest.raises(ValidationError):
            segment_by_direction(log)


class TestGateSamples:
    def make_log(self):
        rows = [
            # (v_x, v_y, omega): one too slow, one too fast laterally, two good
            (0.05, 0.0, 0.2),
            (2.0, 0.0, 0.8),       # a_y = 1.6 > 1.0
            (1.0, 0.02, 0.2),
            (1.0, 0.03, 0.3),
            (1.0, 0.0, 0.01),      # omega below the omega-vy floor
        ]
        samples = tuple(sensor_sample(k * 0.01, steering=0.1) for k in range(len(rows)))
        truth = tuple(truth_sample(k * 0.01, *row) for k, row in enumerate(rows))
        return ManeuverLog(samples=samples, truth=truth)

    def test_omega_vy_gates(self):
        log = self.make_log()
        kept, considered = gate_samples(log, (1, 0, 5), VARIANT_OMEGA_VY)
        assert considered == 5
        assert len(kept) == 2
        assert kept[0].regressor == 0.2 and kept[0].response == 0.02

    def test_delta_beta_keeps_low_omega(self):
        log = self.make_log()
        kept, _ = gate_samples(log, (1, 0, 5), VARIANT_DELTA_BETA)
        assert len(kept) == 3  # the omega floor only applies to omega-vy
        beta = math.atan2(0.02, 1.0)
        assert kept[0].response == pytest.approx(beta, rel=1e-12)

    def test_empty_input(self):
        log = self.make_log()
        kept, considered = gate_samples(log, (1, 0, 0), VARIANT_OMEGA_VY)
        assert kept == [] and considered == 0

    def test_thresholds_positive(self):
        with pytest.raises(ValidationError):
            GateThresholds(min_speed=0.0)


def omega_vy_samples(slope, n, sigma=0.0, seed=0, direction=1, omega_lo=0.05,
                     omega_hi=0.6):
    rng = np.random.default_rng(seed)
    omegas = rng.uniform(omega_lo, omega_hi, n) * rng.choice([-1.0, 1.0], n)
    noise = rng.normal(0.0, sigma, n) if sigma > 0 else np.zeros(n)
    return [CalibrationSample(float(w), float(slope * w + e), direction)
            for w, e in zip(omegas, noise)]


class TestEstimateOmegaVy:
    def test_noise_free_exact(self):
        samples = omega_vy_samples(0.15, 500)
        result = estimate_omega_vy(samples, WHEELBASE)
        est = result.estimate(1)
        assert est.slope == pytest.approx(0.15, abs=1e-12)
        assert est.x_rho == pytest.approx(-0.15, abs=1e-12)
        assert est.residual_rms < 1e-12

    def test_statistical_recovery(self):
        n, sigma, slope = 10_000, 0.005, 0.15
        samples = omega_vy_samples(slope, n, sigma=sigma, seed=42)
        result = estimate_omega_vy(samples, WHEELBASE)
        est = result.estimate(1)
        omegas = np.array([s.regressor for s in samples])
        bound = 3.0 * sigma / math.sqrt(float(np.sum(omegas ** 2)))
        assert abs(est.slope - slope) <= bound
        assert est.slope_stderr == pytest.approx(bound / 3.0, rel=0.1)

    def test_consistency_improves_with_n(self):
        errors = []
        for n in (100, 1000, 10_000):
            errs = []
            for seed in range(20):
                samples = omega_vy_samples(0.15, n, sigma=0.01, seed=seed)
                est = estimate_omega_vy(samples, WHEELBASE).estimate(1)
                errs.append(abs(est.slope - 0.15))
            errors.append(np.mean(errs))
        assert errors[0] > errors[1] > errors[2]
        # roughly 1/sqrt(N): each decade shrinks the error by ~sqrt(10)
        assert 1.8 < errors[0] / errors[1] < 5.5
        assert 1.8 < errors[1] / errors[2] < 5.5

    def test_scale_equivariance(self):
        samples = omega_vy_samples(0.15, 300, sigma=0.01, seed=3)
        scaled = [CalibrationSample(2.5 * s.regressor, 2.5 * s.response, s.direction)
                  for s in samples]
        a = estimate_omega_vy(samples, WHEELBASE).estimate(1)
        b = estimate_omega_vy(scaled, WHEELBASE).estimate(1)
        assert a.slope == pytest.approx(b.slope, rel=1e-12)

    def test_k_and_x_consistent(self):
        samples = omega_vy_samples(0.15, 200, sigma=0.01, seed=4)
        est = estimate_omega_vy(samples, WHEELBASE).estimate(1)
        assert est.k_rho == pytest.approx(k_from_x(est.x_rho, WHEELBASE), abs=1e-12)

    def test_insufficient_samples(self):
        with pytest.raises(ValidationError):
            estimate_omega_vy(omega_vy_samples(0.15, 10), WHEELBASE)

    def test_rank_deficient(self):
        samples = [CalibrationSample(0.0, 0.0, 1) for _ in range(100)]
        with pytest.raises(NumericalError):
            estimate_omega_vy(samples, WHEELBASE)


def steady_state_samples(x_rho, n, v_x=1.0, steering_offset=0.0, seed=0):
    """Samples satisfying the kinematic steady-state relations for a given
    zero-slip point; the steering channel may carry a constant offset."""
    rng = np.random.default_rng(seed)
    omegas = rng.uniform(0.05, 0.5, n) * rng.choice([-1.0, 1.0], n)
    k_rho = k_from_x(x_rho, WHEELBASE)
    direction = 1 if v_x > 0 else -1
    omega_samples = []
    beta_samples = []
    for w in omegas:
        tan_d = (WHEELBASE - x_rho) * w / v_x
        beta = -k_rho * tan_d
        tan_meas = math.tan(math.atan(tan_d) + steering_offset)
        omega_samples.append(CalibrationSample(float(w), float(-x_rho * w), direction))
        beta_samples.append(CalibrationSample(float(tan_meas), float(beta), direction))
    return omega_samples, beta_samples


class TestEstimateDeltaBeta:
    def test_noise_free_recovers_k(self):
        _, beta_samples = steady_state_samples(-0.21, 400)
        est = estimate_delta_beta(beta_samples, WHEELBASE).estimate(1)
        expected_k = k_from_x(-0.21, WHEELBASE)
        assert est.k_rho == pytest.approx(expected_k, abs=1e-10)
        assert est.x_rho == pytest.approx(-0.21, abs=1e-10)

    def test_reverse_direction_reports_same_physical_point(self):
        # physically consistent reverse samples: v_y = -x*omega, side slip
        # referenced to |v_x|, steering from the signed kinematic relation
        rng = np.random.default_rng(17)
        x_rho, v_x = -0.21, -1.0
        omega_s, beta_s = [], []
        for w in rng.uniform(0.05, 0.5, 400) * rng.choice([-1.0, 1.0], 400):
            v_y = -x_rho * w
            tan_d = (WHEELBASE - x_rho) * w / v_x
            beta = math.atan2(v_y, abs(v_x))
            omega_s.append(CalibrationSample(float(w), float(v_y), -1))
            beta_s.append(CalibrationSample(float(tan_d), float(beta), -1))
        x_omega = estimate_omega_vy(omega_s, WHEELBASE).estimate(-1).x_rho
        x_beta = estimate_delta_beta(beta_s, WHEELBASE).estimate(-1).x_rho
        assert x_omega == pytest.approx(-0.21, abs=1e-12)
        assert x_beta == pytest.approx(-0.21, abs=1e-3)  # atan curvature only

    def test_steering_offset_hurts_delta_beta_more(self):
        offset = math.radians(0.5)
        omega_s, beta_s = steady_state_samples(-0.21, 2000, steering_offset=offset,
                                               seed=7)
        x_err_omega = abs(estimate_omega_vy(omega_s, WHEELBASE).estimate(1).x_rho + 0.21)
        x_err_beta = abs(estimate_delta_beta(beta_s, WHEELBASE).estimate(1).x_rho + 0.21)
        assert x_err_beta >= x_err_omega
        assert x_err_omega < 1e-10   # untouched by the steering channel


class TestCalibrateLog:
    def make_two_direction_log(self, x_fwd=-0.05, x_rev=-0.21, n=400):
        dt = 0.01
        rows = []
        rng = np.random.default_rng(9)
        for k in range(n):
            v_x = 1.0 if k < n // 2 else -1.0
            x_rho = x_fwd if v_x > 0 else x_rev
            omega = float(rng.uniform(0.08, 0.5) * rng.choice([-1.0, 1.0]))
            rows.append((v_x, -x_rho * omega, omega))
        samples = []
        truth = []
        for k, (v_x, v_y, omega) in enumerate(rows):
            delta = math.atan(WHEELBASE * omega / v_x) if abs(v_x) > 0.1 else 0.0
            samples.append(sensor_sample(k * dt, steering=delta))
            truth.append(truth_sample(k * dt, v_x, v_y, omega))
        return ManeuverLog(samples=tuple(samples), truth=tuple(truth))

    def test_both_directions_recovered(self):
        log = self.make_two_direction_log()
        results = calibrate_log(log, WHEELBASE, min_samples=50)
        omega_result = results[VARIANT_OMEGA_VY]
        assert omega_result.estimate(1).x_rho == pytest.approx(-0.05, abs=1e-10)
        assert omega_result.estimate(-1).x_rho == pytest.approx(-0.21, abs=1e-10)
        assert omega_result.n_kept <= omega_result.n_considered

    def test_json_dict_shape(self):
        log = self.make_two_direction_log()
        results = calibrate_log(log, WHEELBASE, min_samples=50)
        payload = results[VARIANT_OMEGA_VY].to_json_dict()
        assert set(payload["forward"]) == {"x_rho", "k_rho", "slope", "stderr", "n", "rms"}
        assert 0.0 <= payload["fraction_rejected"] <= 1.0
