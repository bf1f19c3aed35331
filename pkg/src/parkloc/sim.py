"""Planar vehicle simulation with low-speed tire effects.

Ground truth comes from three generators of increasing fidelity:

    kinematic bicycle       zero rear-axle lateral velocity
    lateral bicycle         imposed v_yr = -x_rho * omega_z
    nonlinear two-track     lateral velocity emerges from tire forces,
                            turn slip, and Ackermann-deviation geometry

The two-track model holds v_x at its commanded value (the low-speed
effects of interest are lateral) and integrates the lateral/yaw balance
with per-wheel linear tire forces. Wheel side-slip angles use the
magnitude of the rolling speed, so tires restore in both driving
directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

from .core import AckermannDeviationMap, TireParams, VehicleParams, wrap_angle
from .errors import ConvergenceError, TurnSlipSingularError, ValidationError

#: contact speeds below this make turn slip singular [m/s]
TURN_SLIP_MIN_SPEED = 0.01

#: minimum longitudinal speed for the dynamic two-track model [m/s]
TWO_TRACK_MIN_SPEED = 0.05


@dataclass(frozen=True)
class SimState:
    """Planar vehicle state; velocities refer to the rear-axle center."""

    x: float = 0.0        # [m]
    y: float = 0.0        # [m]
    psi: float = 0.0      # yaw, wrapped to (-pi, pi]
    v_x: float = 0.0      # [m/s], signed
    v_y: float = 0.0      # [m/s]
    omega_z: float = 0.0  # [rad/s]

    def __post_init__(self) -> None:
        for name in ("x", "y", "psi", "v_x", "v_y", "omega_z"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"SimState.{name} is not finite")
        object.__setattr__(self, "psi", wrap_angle(self.psi))


@dataclass(frozen=True)
class SimInputs:
    """Commanded longitudinal speed and mean front steering angle."""

    v_x: float            # [m/s], signed
    delta_f: float = 0.0  # [rad]

    def __post_init__(self) -> None:
        if not math.isfinite(self.v_x) or not math.isfinite(self.delta_f):
            raise ValidationError("SimInputs: non-finite input")
        if abs(self.delta_f) >= 0.5 * math.pi:
            raise ValidationError("SimInputs.delta_f must satisfy |delta_f| < pi/2")


def rk4_step(rhs: Callable[[Sequence[float]], Sequence[float]],
             state: Sequence[float], dt: float) -> List[float]:
    """Classic fourth-order Runge-Kutta step for an autonomous RHS."""
    k1 = rhs(state)
    k2 = rhs([s + 0.5 * dt * k for s, k in zip(state, k1)])
    k3 = rhs([s + 0.5 * dt * k for s, k in zip(state, k2)])
    k4 = rhs([s + dt * k for s, k in zip(state, k3)])
    return [s + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)]


def _pose_rhs(v_x: float, v_y: float, omega_z: float):
    def rhs(pose: Sequence[float]) -> Tuple[float, float, float]:
        _, _, psi = pose
        return (v_x * math.cos(psi) - v_y * math.sin(psi),
                v_x * math.sin(psi) + v_y * math.cos(psi),
                omega_z)
    return rhs


def kinematic_bicycle_step(state: SimState, inputs: SimInputs,
                           params: VehicleParams, dt: float) -> SimState:
    """One pose integration step of the kinematic bicycle (zero rear slip).

    Yaw rate follows directly from the steering geometry,
    omega_z = v_x tan(delta_f) / L, and the pose is advanced with RK4.
    """
    if not 0.0 < dt <= 0.01:
        raise ValidationError("kinematic_bicycle_step: need 0 < dt <= 0.01 s")
    omega = inputs.v_x * math.tan(inputs.delta_f) / params.wheelbase
    x, y, psi = rk4_step(_pose_rhs(inputs.v_x, 0.0, omega), (state.x, state.y, state.psi), dt)
    return SimState(x=x, y=y, psi=psi, v_x=inputs.v_x, v_y=0.0, omega_z=omega)


def lateral_bicycle_step(state: SimState, inputs: SimInputs, params: VehicleParams,
                         x_rho: float, dt: float) -> SimState:
    """Kinematic bicycle with an imposed rear-axle lateral velocity.

    The rear axle moves laterally with v_yr = -x_rho * omega_z, i.e. the
    zero-slip point sits x_rho ahead of the rear axle.
    """
    if not 0.0 < dt <= 0.01:
        raise ValidationError("lateral_bicycle_step: need 0 < dt <= 0.01 s")
    omega = inputs.v_x * math.tan(inputs.delta_f) / params.wheelbase
    v_y = -x_rho * omega
    x, y, psi = rk4_step(_pose_rhs(inputs.v_x, v_y, omega), (state.x, state.y, state.psi), dt)
    return SimState(x=x, y=y, psi=psi, v_x=inputs.v_x, v_y=v_y, omega_z=omega)


def turn_slip_shift(omega_z: float, v_contact: float, tire: TireParams) -> float:
    """Additive slip-angle shift caused by turn slip at low speed.

    phi = -omega_z / v_contact and the shift is
    (K_yRphi0/K_yalpha0) * R_0 * phi * sgn(v_contact) [rad]. Singular at
    standstill; callers should hold the last value when that happens.
    """
    if abs(v_contact) <= TURN_SLIP_MIN_SPEED:
        raise TurnSlipSingularError(
            f"turn slip undefined at contact speed {v_contact:.4g} m/s")
    phi = -omega_z / v_contact
    sign = 1.0 if v_contact > 0.0 else -1.0
    return tire.camber_stiffness_ratio * tire.unloaded_radius * phi * sign


def ackermann_angles(delta_f_mean: float, geometry: VehicleParams,
                     deviation: AckermannDeviationMap) -> Tuple[float, float]:
    """Per-wheel front steering angles for a mean steering command.

    Splits the command into ideal Ackermann angles for the implied turn
    radius, then applies the deviation map to the inside wheel (a negative
    coefficient reduces the inside angle, as built into consumer cars).
    Returns (front-left, front-right) [rad].
    """
    fl, fr, _, _ = _ackermann_split(delta_f_mean, geometry, deviation)
    return fl, fr


def _ackermann_split(delta_f_mean: float, geometry: VehicleParams,
                     deviation: AckermannDeviationMap) -> Tuple[float, float, float, float]:
    """(delta_fl, delta_fr, ideal inside angle, inside lateral offset)."""
    if abs(delta_f_mean) >= 0.5 * math.pi:
        raise ValidationError("ackermann_angles: |delta_f| must be < pi/2")
    if delta_f_mean == 0.0:
        return 0.0, 0.0, 0.0, 0.0
    half_track = 0.5 * geometry.track_front
    length = geometry.wheelbase
    radius = length / abs(math.tan(delta_f_mean))
    if radius <= half_track:
        raise ValidationError(
            f"ackermann_angles: turn radius {radius:.3g} m is inside the front track")
    inner = math.atan(length / (radius - half_track))
    outer = math.atan(length / (radius + half_track))
    if delta_f_mean > 0.0:   # left turn, inside wheel is front-left
        inside_ideal = inner
        fl, fr = inner + deviation(inner), outer
        return fl, fr, inside_ideal, +half_track
    inside_ideal = -inner
    fl, fr = -outer, -inner + deviation(-inner)
    return fl, fr, inside_ideal, -half_track


# wheel order used throughout: fl, fr, rl, rr
def _wheel_layout(params: VehicleParams) -> Tuple[Tuple[float, float, float], ...]:
    half = 0.5 * params.track_front   # rear track taken equal to the front
    length = params.wheelbase
    return ((length, +half, 0.5 * params.stiffness_front),
            (length, -half, 0.5 * params.stiffness_front),
            (0.0, +half, 0.5 * params.stiffness_rear),
            (0.0, -half, 0.5 * params.stiffness_rear))


def ackermann_side_slip_shift(delta_f_mean: float, params: VehicleParams,
                              deviation: AckermannDeviationMap) -> float:
    """Steady-state rear side-slip change caused by the Ackermann deviation.

    The misaligned inside wheel loads the front axle with an extra force
    of about (c_f/2) * delta_A; eliminating it through the steady-state
    force/moment balance moves the rear side slip by
    (b_f c_f / (4 c_r L)) * sin(delta_inside) * delta_A * sgn(delta_f).
    The shift is independent of the driving direction and odd in the
    steering angle (the inside wheel switches sides with the turn).
    """
    _, _, inside_ideal, _ = _ackermann_split(delta_f_mean, params, deviation)
    if inside_ideal == 0.0:
        return 0.0
    gain = (params.track_front * params.stiffness_front
            / (4.0 * params.stiffness_rear * params.wheelbase))
    sign = 1.0 if delta_f_mean > 0.0 else -1.0
    return gain * math.sin(inside_ideal) * deviation(inside_ideal) * sign


class _TwoTrackRhs:
    """Lateral/yaw force balance of the two-track model at fixed inputs.

    State vector: (x, y, psi, v_y, omega_z); v_x is a parameter. Turn-slip
    shifts hold their last value should a wheel's contact speed enter the
    singular band.
    """

    def __init__(self, inputs: SimInputs, params: VehicleParams, tire: TireParams,
                 deviation: AckermannDeviationMap):
        self.v_x = inputs.v_x
        self.params = params
        self.tire = tire
        self.wheels = _wheel_layout(params)
        # Slip forces act through the ideal wheel orientations; the
        # deviation's net effect enters as the equivalent rear slip offset.
        # Steering the model wheels at the deviated angles instead would
        # flip the effect's sign with the driving direction, which the
        # geometric mechanism does not do.
        ideal = _ackermann_split(inputs.delta_f, params, AckermannDeviationMap(0.0))
        self.steer = (ideal[0], ideal[1], 0.0, 0.0)
        # F = -c (slip + shift) settles the side slip at -shift, hence the sign
        beta_shift = ackermann_side_slip_shift(inputs.delta_f, params, deviation)
        self.slip_offset = (0.0, 0.0, -beta_shift, -beta_shift)
        self._last_shift = [0.0, 0.0, 0.0, 0.0]

    def __call__(self, state: Sequence[float]) -> Tuple[float, float, float, float, float]:
        _, _, psi, v_y, omega = state
        p = self.params
        sum_fy = 0.0
        sum_m = 0.0
        for i, ((wx, wy, stiffness), delta) in enumerate(zip(self.wheels, self.steer)):
            v_cx = self.v_x - omega * wy
            v_cy = v_y + omega * wx
            cos_d = math.cos(delta)
            sin_d = math.sin(delta)
            v_wx = cos_d * v_cx + sin_d * v_cy
            v_wy = -sin_d * v_cx + cos_d * v_cy
            slip = math.atan2(v_wy, abs(v_wx))
            shift = self.slip_offset[i]
            if self.tire.turn_slip_enabled:
                try:
                    ts = turn_slip_shift(omega, v_wx, self.tire)
                    self._last_shift[i] = ts
                except TurnSlipSingularError:
                    ts = self._last_shift[i]
                shift += ts
            force_w = -stiffness * (slip + shift)
            f_bx = -sin_d * force_w
            f_by = cos_d * force_w
            sum_fy += f_by
            sum_m += (wx - p.lever_rear) * f_by - wy * f_bx
        omega_dot = sum_m / p.yaw_inertia
        v_y_dot = sum_fy / p.mass - p.lever_rear * omega_dot - omega * self.v_x
        return (self.v_x * math.cos(psi) - v_y * math.sin(psi),
                self.v_x * math.sin(psi) + v_y * math.cos(psi),
                omega,
                v_y_dot,
                omega_dot)


def _stable_substeps(params: VehicleParams, v_x: float, dt: float) -> int:
    # crude bound on the fastest lateral/yaw eigenvalue; tires stiffen as 1/|v|
    speed = max(abs(v_x), TWO_TRACK_MIN_SPEED)
    cf, cr = params.stiffness_front, params.stiffness_rear
    lam = ((cf + cr) / params.mass
           + (cf * params.lever_front + cr * params.lever_rear)
           * params.wheelbase / params.yaw_inertia) / speed
    return max(1, math.ceil(dt * lam))


def two_track_step(state: SimState, inputs: SimInputs, params: VehicleParams,
                   tire: TireParams, deviation: AckermannDeviationMap,
                   dt: float) -> SimState:
    """One RK4 step of the nonlinear two-track model.

    Longitudinal dynamics are not modeled: v_x snaps to the commanded
    value. Internally sub-steps as needed to keep the stiff low-speed
    tire dynamics inside the RK4 stability region.
    """
    if not 0.0 < dt <= 0.005:
        raise ValidationError("two_track_step: need 0 < dt <= 0.005 s")
    if abs(inputs.v_x) < TWO_TRACK_MIN_SPEED:
        raise ValidationError(
            f"two_track_step: |v_x| >= {TWO_TRACK_MIN_SPEED} m/s required (standstill)")
    rhs = _TwoTrackRhs(inputs, params, tire, deviation)
    n_sub = _stable_substeps(params, inputs.v_x, dt)
    y = [state.x, state.y, state.psi, state.v_y, state.omega_z]
    h = dt / n_sub
    for _ in range(n_sub):
        y = rk4_step(rhs, y, h)
    return SimState(x=y[0], y=y[1], psi=y[2], v_x=inputs.v_x, v_y=y[3], omega_z=y[4])


def steady_state_beta_r(v_x: float, delta_f: float, params: VehicleParams,
                        tire: TireParams, deviation: AckermannDeviationMap,
                        dt: float = 0.005, settle_window: float = 1.0,
                        tol: float = 1e-9, max_time: float = 60.0) -> float:
    """Settled rear-axle side-slip angle for constant inputs.

    Integrates the two-track model until the lateral/yaw state moves less
    than ``tol`` over ``settle_window`` seconds, then returns
    beta_r = atan2(v_yr, |v_x|).
    """
    inputs = SimInputs(v_x=v_x, delta_f=delta_f)
    state = SimState(v_x=v_x)
    history: List[Tuple[float, float, float]] = [(0.0, state.v_y, state.omega_z)]
    t = 0.0
    while t < max_time:
        state = two_track_step(state, inputs, params, tire, deviation, dt)
        t += dt
        history.append((t, state.v_y, state.omega_z))
        # compare against the sample one settle-window ago
        while history and history[0][0] < t - settle_window - 0.5 * dt:
            history.pop(0)
        if history[0][0] <= t - settle_window + 0.5 * dt:
            _, vy_old, om_old = history[0]
            if math.hypot(state.v_y - vy_old, state.omega_z - om_old) < tol:
                return math.atan2(state.v_y, abs(v_x))
    raise ConvergenceError(
        f"steady_state_beta_r: no steady state within {max_time} s "
        f"(v_x={v_x}, delta_f={delta_f})")
