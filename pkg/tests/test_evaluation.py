import math

import numpy as np
import pytest

from parkloc import quat
from parkloc.core import (AckermannDeviationMap, GroundTruthSample, TireParams,
                          VehicleParams)
from parkloc.ekf import FilterConfig, FilterOutput
from parkloc.errors import ValidationError
from parkloc.evaluation import (ModelComparison, compare_models,
                                render_bar_chart_svg, render_comparison_table,
                                render_error_plot_svg, render_quantile_table,
                                summarize, trajectory_error)
from parkloc.lateral import LateralModelKind, LateralModelParams
from parkloc.scenario import Scenario, Segment, simulate_scenario
from parkloc.sensors import SensorNoise, synthesize_sensors

VEHICLE = VehicleParams(mass=1820.0, yaw_inertia=3500.0, lever_front=1.42,
                        lever_rear=1.48, track_front=1.6, stiffness_front=130e3,
                        stiffness_rear=120e3, imu_lever_x=1.5)


def make_output(t, xy, psi=0.0):
    n = len(t)
    p = np.zeros((n, 3))
    p[:, :2] = xy
    q = np.tile(quat.from_yaw(psi), (n, 1))
    return FilterOutput(t=np.asarray(t, dtype=float), v=np.zeros((n, 3)), q=q,
                        p=p, cov_diag=np.zeros((n, 10)))


def make_truth(t, xy, psi=None):
    out = []
    for i, ti in enumerate(t):
        out.append(GroundTruthSample(t=float(ti), x=float(xy[i, 0]), y=float(xy[i, 1]),
                                     psi=0.0 if psi is None else float(psi[i]),
                                     v_x=1.0, v_y=0.0, omega_z=0.0))
    return out


class TestTrajectoryError:
    def test_identical_trajectories(self):
        t = np.linspace(0, 10, 101)
        xy = np.column_stack([t, np.sin(t)])
        report = trajectory_error(make_output(t, xy), make_truth(t, xy))
        assert np.all(report.error == 0.0)

    def test_constant_offset(self):
        t = np.linspace(0, 5, 51)
        xy = np.column_stack([t, 0 * t])
        shifted = xy + np.array([0.3, 0.4])
        report = trajectory_error(make_output(t, shifted), make_truth(t, xy))
        assert np.allclose(report.error, 0.5, atol=1e-12)

    def test_align_start_removes_offset(self):
        t = np.linspace(0, 5, 51)
        xy = np.column_stack([t, 0 * t])
        shifted = xy + np.array([0.3, 0.4])
        report = trajectory_error(make_output(t, shifted), make_truth(t, xy),
                                  align_start=True)
        assert np.allclose(report.error, 0.0, atol=1e-12)

    def test_rigid_transform_invariance(self):
        rng = np.random.default_rng(21)
        t = np.linspace(0, 8, 81)
        est = np.column_stack([t, np.sin(0.5 * t)])
        ref = est + rng.normal(scale=0.05, size=est.shape)
        base = trajectory_error(make_output(t, est), make_truth(t, ref))
        angle, shift = 0.7, np.array([5.0, -3.0])
        rot = np.array([[math.cos(angle), -math.sin(angle)],
                        [math.sin(angle), math.cos(angle)]])
        est_m = est @ rot.T + shift
        ref_m = ref @ rot.T + shift
        moved = trajectory_error(make_output(t, est_m, psi=angle),
                                 make_truth(t, ref_m))
        assert np.allclose(moved.error, base.error, atol=1e-9)

    def test_interpolates_reference(self):
        t_est = np.linspace(0, 10, 101)
        t_ref = np.linspace(0, 10, 501)
        est = np.column_stack([t_est, 0 * t_est])
        ref = np.column_stack([t_ref, 0 * t_ref])
        report = trajectory_error(make_output(t_est, est), make_truth(t_ref, ref))
        assert np.allclose(report.error, 0.0, atol=1e-12)

    def test_no_overlap_rejected(self):
        t = np.linspace(0, 5, 51)
        xy = np.column_stack([t, 0 * t])
        truth = make_truth(t + 100.0, xy)
        with pytest.raises(ValidationError):
            trajectory_error(make_output(t, xy), truth)


class TestSummarize:
    def test_integer_ramp(self):
        errors = np.arange(1.0, 101.0)
        stats = summarize(errors)
        assert stats == {"p63": 63.0, "p95": 95.0, "max": 100.0}

    def test_single_sample(self):
        stats = summarize([0.2])
        assert stats == {"p63": 0.2, "p95": 0.2, "max": 0.2}

    def test_ordering_invariant(self):
        stats = summarize([0.5, 0.1, 0.9, 0.3])
        assert stats["p63"] <= stats["p95"] <= stats["max"]

    def test_monotone_under_large_sample(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            errors = list(rng.uniform(0, 1, size=rng.integers(3, 40)))
            before = summarize(errors)
            after = summarize(errors + [max(errors) + 1.0])
            assert after["p63"] >= before["p63"]
            assert after["p95"] >= before["p95"]
            assert after["max"] >= before["max"]

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            summarize([])


def reverse_turn_logs(n=2):
    scenario = Scenario("rev90", (
        Segment(duration=1.0, v_x=-0.5, delta_f=0.0),
        Segment(duration=15.0, v_x=-0.5, omega_z=-math.pi / 30.0),
        Segment(duration=1.0, v_x=-0.5, delta_f=0.0)), rate_hz=100.0,
        model="omega-vy")
    lateral = LateralModelParams(x_rho_forward=0.0, x_rho_reverse=-0.21,
                                 wheelbase=VEHICLE.wheelbase)
    truth = simulate_scenario(scenario, VEHICLE, TireParams(),
                              AckermannDeviationMap(0.0), lateral=lateral)
    logs = []
    for k in range(n):
        log = synthesize_sensors(truth, VEHICLE, SensorNoise(),
                                 maneuver_id=f"rev90_{k}")
        logs.append(log)
    return logs, lateral


class TestCompareModels:
    def test_identical_configs_identical_columns(self):
        logs, lateral = reverse_turn_logs(n=1)
        config = FilterConfig(lateral_kind=LateralModelKind.OMEGA_VY,
                              lateral_params=lateral, imu_lever_x=1.5)
        comparison = compare_models(logs, {"a": config, "b": config})
        assert np.array_equal(comparison.column("a"), comparison.column("b"))

    def test_zero_slip_column_exceeds_matched_column(self):
        logs, lateral = reverse_turn_logs(n=1)
        configs = {
            "omega-vy": FilterConfig(lateral_kind=LateralModelKind.OMEGA_VY,
                                     lateral_params=lateral, imu_lever_x=1.5),
            "zero-slip": FilterConfig(lateral_kind=LateralModelKind.ZERO_SLIP,
                                      imu_lever_x=1.5),
        }
        comparison = compare_models(logs, configs, reduction="final")
        gap = comparison.column("zero-slip")[0] - comparison.column("omega-vy")[0]
        assert gap == pytest.approx(math.sqrt(2) * 0.21, rel=0.15)
        assert comparison.improved("omega-vy", "zero-slip") == [True]

    def test_requires_truth(self):
        logs, lateral = reverse_turn_logs(n=1)
        bare = logs[0]
        from parkloc.core import ManeuverLog
        no_truth = ManeuverLog(samples=bare.samples, maneuver_id="x")
        config = FilterConfig(lateral_kind=LateralModelKind.ZERO_SLIP, imu_lever_x=1.5)
        with pytest.raises(ValidationError):
            compare_models([no_truth], {"zero-slip": config})


FIG_LABELS = [str(k) for k in range(1, 10)]
OMEGA_BARS = [0.105, 0.090, 0.159, 0.094, 0.092, 0.165, 0.130, 0.140, 0.134]
ZERO_BARS = [0.130, 0.088, 0.187, 0.091, 0.117, 0.307, 0.249, 0.210, 0.144]


class TestRendering:
    def test_comparison_table_marks_improvements(self):
        comparison = ModelComparison(
            maneuvers=tuple(FIG_LABELS), labels=("omega-vy", "zero-slip"),
            errors=np.column_stack([OMEGA_BARS, ZERO_BARS]), reduction="max")
        text = render_comparison_table(comparison, candidate="omega-vy",
                                       baseline="zero-slip")
        assert "0.165" in text and "0.307" in text
        row6 = [line for line in text.splitlines() if line.startswith("6")][0]
        assert row6.endswith("yes")

    def test_quantile_table(self):
        text = render_quantile_table({
            "omega-vy": {"p63": 0.12, "p95": 0.18, "max": 0.25},
            "zero-slip": {"p63": 0.15, "p95": 0.30, "max": 0.38}})
        assert "0.12 m" in text and "0.38 m" in text

    def test_renderers_are_deterministic(self):
        series = {"omega-vy": OMEGA_BARS, "zero-slip": ZERO_BARS}
        a = render_bar_chart_svg(FIG_LABELS, series)
        b = render_bar_chart_svg(FIG_LABELS, series)
        assert a == b
        t = np.linspace(0, 10, 50)
        e = np.abs(np.sin(t))
        assert render_error_plot_svg(t, e) == render_error_plot_svg(t, e)

    def test_bar_chart_contains_all_bars(self):
        svg = render_bar_chart_svg(FIG_LABELS, {"omega-vy": OMEGA_BARS,
                                                "zero-slip": ZERO_BARS})
        assert svg.count("<rect") == 18 + 2  # bars plus two legend swatches
