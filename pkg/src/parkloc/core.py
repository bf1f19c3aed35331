"""Shared domain types and planar rigid-body velocity plumbing.

Conventions used everywhere in this package:
    - body frame: x forward, y left, z up
    - earth frame: planar X/Y, yaw psi counterclockwise positive
    - the vehicle reference point is the rear-axle center
    - wheel encoders are unsigned; the gear signal supplies the sign

All types are immutable value objects and all operations are pure
functions, so everything here is safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import ValidationError

#: gear selector states; encoders are unsigned so direction comes from here
GEAR_FORWARD = "F"
GEAR_REVERSE = "R"
GEAR_NEUTRAL = "N"
GEAR_SIGNS = {GEAR_FORWARD: +1, GEAR_REVERSE: -1, GEAR_NEUTRAL: 0}

#: default speed deadband for direction decisions [m/s]; side slip is
#: ill-defined near standstill so direction is treated as unknown there
DIRECTION_DEADBAND = 0.1

#: gravity magnitude [m/s^2]; accelerometers read a_z = -GRAVITY at rest
#: on level ground and the mechanization compensates with +GRAVITY
GRAVITY = 9.81


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValidationError(f"{name}: non-finite value {v!r}")


@dataclass(frozen=True)
class VehicleParams:
    """Physical vehicle parameters (single/two-track geometry and tires).

    Lengths in meters, mass in kg, inertia in kg m^2, stiffnesses in N/rad.
    ``imu_lever_x`` points from the rear-axle center to the IMU, positive
    forward; ``imu_lever_y`` positive to the left.
    """

    mass: float                    # m [kg]
    yaw_inertia: float             # J_zz [kg m^2]
    lever_front: float             # l_f, CoG to front axle [m]
    lever_rear: float              # l_r, CoG to rear axle [m]
    track_front: float             # b_f [m]; rear track assumed equal
    stiffness_front: float         # c_f, front axle total [N/rad]
    stiffness_rear: float          # c_r, rear axle total [N/rad]
    imu_lever_x: float = 0.0       # rear axle -> IMU, forward positive [m]
    imu_lever_y: float = 0.0       # rear axle -> IMU, left positive [m]

    def __post_init__(self) -> None:
        _require_finite(
            "VehicleParams", self.mass, self.yaw_inertia, self.lever_front,
            self.lever_rear, self.track_front, self.stiffness_front,
            self.stiffness_rear, self.imu_lever_x, self.imu_lever_y)
        for name in ("mass", "yaw_inertia", "lever_front", "lever_rear",
                     "track_front", "stiffness_front", "stiffness_rear"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"VehicleParams.{name} must be > 0")
        if not math.isfinite(self.side_slip_gradient) or self.side_slip_gradient <= 0.0:
            raise ValidationError("VehicleParams: side-slip gradient must be finite and > 0")

    @property
    def wheelbase(self) -> float:
        """L = l_f + l_r [m]."""
        return self.lever_front + self.lever_rear

    @property
    def side_slip_gradient(self) -> float:
        """rho_sg = m l_f / (c_r L): rear side slip per unit lateral acceleration."""
        return self.mass * self.lever_front / (self.stiffness_rear * self.wheelbase)


@dataclass(frozen=True)
class TireParams:
    """Low-speed tire behavior: linear stiffness plus turn-slip shift."""

    unloaded_radius: float = 0.35          # R_0 [m]
    camber_stiffness_ratio: float = 0.8    # K_yRphi0 / K_yalpha0 [-]
    turn_slip_enabled: bool = True

    def __post_init__(self) -> None:
        _require_finite("TireParams", self.unloaded_radius, self.camber_stiffness_ratio)
        if self.unloaded_radius <= 0.0:
            raise ValidationError("TireParams.unloaded_radius must be > 0")
        if self.camber_stiffness_ratio < 0.0:
            raise ValidationError("TireParams.camber_stiffness_ratio must be >= 0")


@dataclass(frozen=True)
class AckermannDeviationMap:
    """Linear map from the inside-wheel steering angle to its deviation.

    ``coefficient < 0`` models consumer-grade steering that gives the
    inside wheel less angle than ideal Ackermann geometry would require.
    The map is odd-symmetric and vanishes at zero steering.
    """

    coefficient: float = 0.0    # d(delta_A)/d(delta_inside) [-]

    def __post_init__(self) -> None:
        _require_finite("AckermannDeviationMap", self.coefficient)

    def __call__(self, inside_angle: float) -> float:
        """Deviation angle delta_A for a given ideal inside-wheel angle [rad]."""
        return self.coefficient * inside_angle


@dataclass(frozen=True)
class SensorSample:
    """One time-stamped proprioceptive record.

    ``accel`` is specific force in the body frame with a_z = -9.81 m/s^2 at
    rest on level ground. Wheel speeds are unsigned contact speeds [m/s].
    """

    t: float                                # [s]
    accel: Tuple[float, float, float]       # (a_x, a_y, a_z) [m/s^2]
    gyro: Tuple[float, float, float]        # (w_x, w_y, w_z) [rad/s]
    wheel_speeds: Tuple[float, float, float, float]  # (fl, fr, rl, rr) [m/s]
    steering_front: float                   # mean front steering [rad]
    gear: str                               # one of GEAR_FORWARD/REVERSE/NEUTRAL

    def __post_init__(self) -> None:
        if self.gear not in GEAR_SIGNS:
            raise ValidationError(f"SensorSample.gear must be one of F/R/N, got {self.gear!r}")
        if any(w < 0.0 for w in self.wheel_speeds):
            raise ValidationError("SensorSample.wheel_speeds must be >= 0 (unsigned encoders)")
        _require_finite("SensorSample", self.t, *self.accel, *self.gyro,
                        *self.wheel_speeds, self.steering_front)

    @property
    def gear_sign(self) -> int:
        return GEAR_SIGNS[self.gear]


@dataclass(frozen=True)
class GroundTruthSample:
    """Reference state: pose in the earth frame, body velocity at the rear axle."""

    t: float          # [s]
    x: float          # X [m]
    y: float          # Y [m]
    psi: float        # yaw [rad]
    v_x: float        # longitudinal velocity, signed [m/s]
    v_y: float        # lateral velocity at the rear axle [m/s]
    omega_z: float    # yaw rate [rad/s]

    def __post_init__(self) -> None:
        _require_finite("GroundTruthSample", self.t, self.x, self.y, self.psi,
                        self.v_x, self.v_y, self.omega_z)


def _check_timestamps(kind: str, times: Sequence[float]) -> None:
    if not times:
        return
    dts = [times[i + 1] - times[i] for i in range(len(times) - 1)]
    if any(dt <= 0.0 for dt in dts):
        raise ValidationError(f"{kind}: timestamps must be strictly increasing")
    if dts:
        nominal = sorted(dts)[len(dts) // 2]
        if nominal <= 0.0:
            raise ValidationError(f"{kind}: degenerate sample interval")
        for dt in dts:
            if abs(dt - nominal) > 0.01 * nominal + 1e-12:
                raise ValidationError(
                    f"{kind}: non-uniform sample interval {dt:.6g} s "
                    f"(nominal {nominal:.6g} s, 1% jitter allowed)")


@dataclass(frozen=True)
class ManeuverLog:
    """One maneuver's sensor records plus optional ground truth."""

    samples: Tuple[SensorSample, ...]
    truth: Optional[Tuple[GroundTruthSample, ...]] = None
    maneuver_id: str = "maneuver"
    description: str = ""
    rate_hz: float = 0.0    # nominal rate; 0 means "derive from timestamps"

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.truth is not None:
            object.__setattr__(self, "truth", tuple(self.truth))
        if not self.samples:
            raise ValidationError("ManeuverLog: empty sensor record")
        _check_timestamps("ManeuverLog.samples", [s.t for s in self.samples])
        if self.truth is not None:
            if not self.truth:
                raise ValidationError("ManeuverLog: truth present but empty")
            _check_timestamps("ManeuverLog.truth", [s.t for s in self.truth])
            if (self.truth[-1].t < self.samples[0].t
                    or self.truth[0].t > self.samples[-1].t):
                raise ValidationError("ManeuverLog: sensor and truth time ranges do not overlap")

    @property
    def nominal_dt(self) -> float:
        if self.rate_hz > 0.0:
            return 1.0 / self.rate_hz
        if len(self.samples) < 2:
            return 0.0
        return (self.samples[-1].t - self.samples[0].t) / (len(self.samples) - 1)


def transfer_planar_velocity(v_at_a: Tuple[float, float], omega_z: float,
                             lever_ab: Tuple[float, float]) -> Tuple[float, float]:
    """Velocity of point B given the velocity of point A on the same rigid body.

    v_B = v_A + omega x lever, planar cross product:
    dv_x = -omega_z * lever_y, dv_y = +omega_z * lever_x.
    """
    return (v_at_a[0] - omega_z * lever_ab[1],
            v_at_a[1] + omega_z * lever_ab[0])


def driving_direction_sign(v_x: float, deadband: float = DIRECTION_DEADBAND) -> int:
    """+1 forward, -1 reverse, 0 inside the deadband."""
    if deadband < 0.0:
        raise ValidationError("driving_direction_sign: deadband must be >= 0")
    if v_x > deadband:
        return 1
    if v_x < -deadband:
        return -1
    return 0


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
