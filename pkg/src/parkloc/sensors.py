"""Synthetic proprioceptive sensors from ground-truth trajectories.

Produces the gyro, accelerometer, per-wheel encoder, steering, and gear
channels a consumer vehicle would log, with configurable bias/noise/
quantization. Everything is deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (AckermannDeviationMap, DIRECTION_DEADBAND, GEAR_FORWARD,
                   GEAR_NEUTRAL, GEAR_REVERSE, GRAVITY, GroundTruthSample,
                   ManeuverLog, SensorSample, VehicleParams,
                   driving_direction_sign)
from .errors import ValidationError
from .sim import _ackermann_split, _wheel_layout


@dataclass(frozen=True)
class SensorNoise:
    """Bias, white noise, and quantization levels for sensor synthesis.

    Scalar biases apply to every axis of the respective sensor. All-zero
    defaults give noise-free, bit-reproducible logs.
    """

    gyro_bias: float = 0.0          # [rad/s]
    gyro_sigma: float = 0.0         # white noise std [rad/s]
    accel_bias: float = 0.0         # [m/s^2]
    accel_sigma: float = 0.0        # white noise std [m/s^2]
    encoder_step: float = 0.0       # wheel-speed quantization [m/s]; 0 = off
    steering_offset: float = 0.0    # constant steering bias [rad]
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("gyro_sigma", "accel_sigma", "encoder_step"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"SensorNoise.{name} must be >= 0")


def _steering_from_truth(truth: Sequence[GroundTruthSample], wheelbase: float) -> np.ndarray:
    """Reconstruct the mean front steering angle from yaw rate and speed.

    Near standstill the angle is held at its previous value (the kinematic
    inversion degenerates there).
    """
    angles = np.zeros(len(truth))
    last = 0.0
    for i, s in enumerate(truth):
        if abs(s.v_x) > DIRECTION_DEADBAND:
            last = math.atan(wheelbase * s.omega_z / s.v_x)
        angles[i] = last
    return angles


def synthesize_sensors(truth: Sequence[GroundTruthSample], params: VehicleParams,
                       noise: SensorNoise,
                       deviation: Optional[AckermannDeviationMap] = None,
                       maneuver_id: str = "synthetic") -> ManeuverLog:
    """Build a maneuver log whose sensor channels match a truth trajectory.

    The accelerometer reports specific force at the IMU location (lever
    arm and centripetal terms included, a_z = -9.81 on level ground);
    wheel encoders report unsigned per-wheel rolling speeds; the gear
    channel carries the driving direction.
    """
    truth = tuple(truth)
    if not truth:
        raise ValidationError("synthesize_sensors: empty truth trajectory")
    if len(truth) < 2:
        raise ValidationError("synthesize_sensors: need at least two truth samples")
    times = np.array([s.t for s in truth])
    dts = np.diff(times)
    if np.any(dts <= 0.0):
        raise ValidationError("synthesize_sensors: truth timestamps must increase")
    nominal = float(np.median(dts))
    if np.any(np.abs(dts - nominal) > 0.01 * nominal + 1e-12):
        raise ValidationError("synthesize_sensors: truth must be uniformly sampled")

    deviation = deviation or AckermannDeviationMap(0.0)
    rng = np.random.default_rng(noise.seed)
    n = len(truth)

    # IMU-point velocity in the body frame, then its body-frame derivative
    lx, ly = params.imu_lever_x, params.imu_lever_y
    v_imu = np.array([(s.v_x - s.omega_z * ly, s.v_y + s.omega_z * lx) for s in truth])
    dv_imu = np.gradient(v_imu, times, axis=0)

    steering = _steering_from_truth(truth, params.wheelbase)
    wheels = _wheel_layout(params)

    samples = []
    for i, s in enumerate(truth):
        omega = s.omega_z
        accel_x = dv_imu[i, 0] - omega * v_imu[i, 1]
        accel_y = dv_imu[i, 1] + omega * v_imu[i, 0]
        accel = np.array([accel_x, accel_y, -GRAVITY]) + noise.accel_bias
        gyro = np.array([0.0, 0.0, omega]) + noise.gyro_bias
        if noise.gyro_sigma > 0.0:
            gyro = gyro + rng.normal(0.0, noise.gyro_sigma, 3)
        if noise.accel_sigma > 0.0:
            accel = accel + rng.normal(0.0, noise.accel_sigma, 3)

        fl, fr, _, _ = _ackermann_split(steering[i], params, deviation)
        steer_per_wheel = (fl, fr, 0.0, 0.0)
        speeds = []
        for (wx, wy, _), delta in zip(wheels, steer_per_wheel):
            v_cx = s.v_x - omega * wy
            v_cy = s.v_y + omega * wx
            rolling = math.cos(delta) * v_cx + math.sin(delta) * v_cy
            speed = abs(rolling)
            if noise.encoder_step > 0.0:
                speed = round(speed / noise.encoder_step) * noise.encoder_step
            speeds.append(speed)

        direction = driving_direction_sign(s.v_x)
        gear = GEAR_FORWARD if direction > 0 else GEAR_REVERSE if direction < 0 else GEAR_NEUTRAL
        samples.append(SensorSample(
            t=s.t,
            accel=(float(accel[0]), float(accel[1]), float(accel[2])),
            gyro=(float(gyro[0]), float(gyro[1]), float(gyro[2])),
            wheel_speeds=(speeds[0], speeds[1], speeds[2], speeds[3]),
            steering_front=float(steering[i] + noise.steering_offset),
            gear=gear))
    return ManeuverLog(samples=tuple(samples), truth=truth, maneuver_id=maneuver_id,
                       rate_hz=1.0 / nominal)
