"""Parameter estimation for the lateral-velocity models.

Given logs with ground truth, both regression variants estimate the
zero-slip point offset per driving direction:

    omega-vy:   zero-intercept least squares of v_yr on omega_z,
                x_rho = -slope
    delta-beta: zero-intercept least squares of beta_r on tan(delta_f),
                k_rho = -slope

Zero-intercept fits are deliberate: neither model has a constant term, and
an intercept would silently absorb sensor bias. Bias shows up in the
residual RMS instead.

Side slip is referenced to |v_x| (matching the direction-split scatter
presentation), so the delta-beta slope changes sign with the driving
direction; the estimator uses the direction tag to report the physical
zero-slip point either way.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import DIRECTION_DEADBAND, ManeuverLog, driving_direction_sign
from .errors import NumericalError, ValidationError
from .lateral import k_from_x, x_from_k

VARIANT_OMEGA_VY = "omega-vy"
VARIANT_DELTA_BETA = "delta-beta"

MIN_SAMPLES_PER_DIRECTION = 50


@dataclass(frozen=True)
class CalibrationSample:
    """One regression point: (omega_z, v_yr) or (tan delta_f, beta_r)."""

    regressor: float
    response: float
    direction: int        # +1 forward, -1 reverse
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.direction not in (-1, 1):
            raise ValidationError("CalibrationSample.direction must be +1 or -1")
        if not (math.isfinite(self.regressor) and math.isfinite(self.response)
                and math.isfinite(self.weight)):
            raise ValidationError("CalibrationSample: non-finite value")


@dataclass(frozen=True)
class GateThresholds:
    """Sample gates keeping regression inside the well-defined regime."""

    min_speed: float = 0.3        # |v_x| floor [m/s]
    min_omega: float = 0.05       # |omega_z| floor for the omega-vy variant [rad/s]
    max_lat_accel: float = 1.0    # |a_y| ceiling [m/s^2]

    def __post_init__(self) -> None:
        if self.min_speed <= 0.0 or self.min_omega <= 0.0 or self.max_lat_accel <= 0.0:
            raise ValidationError("GateThresholds: thresholds must be positive")


@dataclass(frozen=True)
class DirectionEstimate:
    direction: int
    n: int
    slope: float
    slope_stderr: float
    x_rho: float
    k_rho: float
    residual_rms: float


@dataclass(frozen=True)
class CalibrationResult:
    variant: str
    wheelbase: float
    forward: Optional[DirectionEstimate]
    reverse: Optional[DirectionEstimate]
    n_considered: int = 0
    n_kept: int = 0

    @property
    def fraction_rejected(self) -> float:
        if self.n_considered == 0:
            return 0.0
        return 1.0 - self.n_kept / self.n_considered

    def estimate(self, direction: int) -> DirectionEstimate:
        est = self.forward if direction == 1 else self.reverse
        if est is None:
            raise ValidationError(f"no estimate for direction {direction:+d}")
        return est

    def to_json_dict(self) -> dict:
        def as_dict(est: Optional[DirectionEstimate]) -> Optional[dict]:
            if est is None:
                return None
            return {"x_rho": est.x_rho, "k_rho": est.k_rho, "slope": est.slope,
                    "stderr": est.slope_stderr, "n": est.n, "rms": est.residual_rms}
        return {"variant": self.variant, "wheelbase": self.wheelbase,
                "forward": as_dict(self.forward), "reverse": as_dict(self.reverse),
                "n_considered": self.n_considered, "n_kept": self.n_kept,
                "fraction_rejected": self.fraction_rejected}


def segment_by_direction(log: ManeuverLog,
                         deadband: float = DIRECTION_DEADBAND
                         ) -> List[Tuple[int, int, int]]:
    """Maximal constant-direction index ranges over the truth track.

    Returns (direction, start, stop) with stop exclusive; deadband samples
    separate segments and belong to none.
    """
    if not log.truth:
        raise ValidationError("segment_by_direction: log has no ground truth")
    segments: List[Tuple[int, int, int]] = []
    current_dir = 0
    start = 0
    for i, s in enumerate(log.truth):
        d = driving_direction_sign(s.v_x, deadband)
        if d != current_dir:
            if current_dir != 0:
                segments.append((current_dir, start, i))
            current_dir = d
            start = i
    if current_dir != 0:
        segments.append((current_dir, start, len(log.truth)))
    return segments


def _steering_at_truth_times(log: ManeuverLog) -> np.ndarray:
    t_sensor = np.array([s.t for s in log.samples])
    steer = np.array([s.steering_front for s in log.samples])
    t_truth = np.array([s.t for s in log.truth])
    return np.interp(t_truth, t_sensor, steer)


def gate_samples(log: ManeuverLog, segment: Tuple[int, int, int], variant: str,
                 thresholds: GateThresholds = GateThresholds()
                 ) -> Tuple[List[CalibrationSample], int]:
    """Regression samples from one direction segment, plus the count considered.

    The lateral-acceleration gate uses the centripetal estimate
    a_y = v_x * omega_z. beta_r is atan2(v_yr, |v_x|).
    """
    if variant not in (VARIANT_OMEGA_VY, VARIANT_DELTA_BETA):
        raise ValidationError(f"gate_samples: unknown variant {variant!r}")
    direction, start, stop = segment
    steering = _steering_at_truth_times(log) if variant == VARIANT_DELTA_BETA else None
    kept: List[CalibrationSample] = []
    considered = 0
    for i in range(start, stop):
        s = log.truth[i]
        considered += 1
        if abs(s.v_x) < thresholds.min_speed:
            continue
        if abs(s.v_x * s.omega_z) > thresholds.max_lat_accel:
            continue
        if variant == VARIANT_OMEGA_VY:
            if abs(s.omega_z) < thresholds.min_omega:
                continue
            kept.append(CalibrationSample(s.omega_z, s.v_y, direction))
        else:
            beta_r = math.atan2(s.v_y, abs(s.v_x))
            kept.append(CalibrationSample(math.tan(steering[i]), beta_r, direction))
    return kept, considered


def _fit_zero_intercept(samples: Sequence[CalibrationSample]) -> Tuple[float, float, float]:
    """Weighted zero-intercept least squares: (slope, stderr, residual rms)."""
    x = np.array([s.regressor for s in samples])
    y = np.array([s.response for s in samples])
    w = np.array([s.weight for s in samples])
    sxx = float(np.sum(w * x * x))
    if sxx <= 0.0 or not math.isfinite(sxx):
        raise NumericalError("regression is rank deficient (no regressor variation)")
    slope = float(np.sum(w * x * y)) / sxx
    resid = y - slope * x
    n = len(samples)
    dof = max(n - 1, 1)
    sigma2 = float(np.sum(w * resid * resid)) / dof
    stderr = math.sqrt(sigma2 / sxx)
    rms = math.sqrt(float(np.mean(resid * resid)))
    return slope, stderr, rms


def _estimate(samples: Sequence[CalibrationSample], wheelbase: float, variant: str,
              min_samples: int, n_considered: int) -> CalibrationResult:
    by_dir: Dict[int, List[CalibrationSample]] = {1: [], -1: []}
    for s in samples:
        by_dir[s.direction].append(s)
    estimates: Dict[int, Optional[DirectionEstimate]] = {1: None, -1: None}
    for direction, group in by_dir.items():
        if not group:
            continue
        if len(group) < min_samples:
            raise ValidationError(
                f"calibration needs >= {min_samples} gated samples for direction "
                f"{direction:+d}, got {len(group)}")
        slope, stderr, rms = _fit_zero_intercept(group)
        if variant == VARIANT_OMEGA_VY:
            x_rho = -slope
            k_rho = k_from_x(x_rho, wheelbase)
        else:
            # beta_r is referenced to |v_x| while the steering relation
            # carries signed v_x, so the fitted slope flips in reverse;
            # fold the direction back out to report the physical point
            k_rho = -slope * direction
            x_rho = x_from_k(k_rho, wheelbase)
        estimates[direction] = DirectionEstimate(
            direction=direction, n=len(group), slope=slope, slope_stderr=stderr,
            x_rho=x_rho, k_rho=k_rho, residual_rms=rms)
    if estimates[1] is None and estimates[-1] is None:
        raise ValidationError("calibration received no samples")
    return CalibrationResult(variant=variant, wheelbase=wheelbase,
                             forward=estimates[1], reverse=estimates[-1],
                             n_considered=n_considered, n_kept=len(samples))


def estimate_omega_vy(samples: Sequence[CalibrationSample], wheelbase: float,
                      min_samples: int = MIN_SAMPLES_PER_DIRECTION,
                      n_considered: int = 0) -> CalibrationResult:
    """Fit v_yr = slope * omega_z per direction; x_rho = -slope."""
    return _estimate(samples, wheelbase, VARIANT_OMEGA_VY, min_samples,
                     n_considered or len(samples))


def estimate_delta_beta(samples: Sequence[CalibrationSample], wheelbase: float,
                        min_samples: int = MIN_SAMPLES_PER_DIRECTION,
                        n_considered: int = 0) -> CalibrationResult:
    """Fit beta_r = slope * tan(delta_f) per direction; k_rho = -slope."""
    return _estimate(samples, wheelbase, VARIANT_DELTA_BETA, min_samples,
                     n_considered or len(samples))


def calibrate_log(log: ManeuverLog, wheelbase: float,
                  thresholds: GateThresholds = GateThresholds(),
                  deadband: float = DIRECTION_DEADBAND,
                  min_samples: int = MIN_SAMPLES_PER_DIRECTION
                  ) -> Dict[str, CalibrationResult]:
    """Run both estimation variants on one log with ground truth."""
    segments = segment_by_direction(log, deadband)
    results: Dict[str, CalibrationResult] = {}
    for variant, estimator in ((VARIANT_OMEGA_VY, estimate_omega_vy),
                               (VARIANT_DELTA_BETA, estimate_delta_beta)):
        samples: List[CalibrationSample] = []
        considered = 0
        for segment in segments:
            kept, seen = gate_samples(log, segment, variant, thresholds)
            samples.extend(kept)
            considered += seen
        results[variant] = estimator(samples, wheelbase, min_samples=min_samples,
                                     n_considered=considered)
    return results


def write_scatter_csv(path, samples: Sequence[CalibrationSample]) -> None:
    """Scatter dump (x, y, direction) for regression plots."""
    with open(path, "w", newline="") as fh:
        fh.write("x,y,direction\n")
        for s in samples:
            fh.write(f"{s.regressor:.12g},{s.response:.12g},{s.direction:+d}\n")


def write_report_json(path, results: Dict[str, CalibrationResult]) -> None:
    payload = {variant: result.to_json_dict() for variant, result in results.items()}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
