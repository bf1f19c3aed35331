"""Strapdown mechanization with an extended Kalman filter.

State vector (10): body velocity v (3), attitude quaternion q (4, Hamilton,
body-to-earth), position p (3). The IMU drives the prediction; wheel
encoders, the configured lateral-velocity model, and a zero-vertical-
velocity assumption provide scalar pseudo-measurements of the velocity at
the IMU location. Position and heading are unobservable by construction
and drift; that is the quantity under study.

Mechanization (one step, inputs held over dt):
    v' = v + dt (f + R(q)^T g - w x v)          g = [0, 0, 9.81]
    q' = q (x) exp(w dt / 2)                    exact attitude increment
    p' = p + dt/2 (R(q) v + R(q') v')           trapezoidal position update

The analytic Jacobian below differentiates exactly this map, so central
finite differences of :func:`mechanize` must reproduce it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import quat
from .core import GRAVITY, ManeuverLog, SensorSample
from .errors import CovarianceError, ValidationError
from .lateral import LateralModelKind, LateralModelParams, select_parameter

#: 99% quantile of the chi-square distribution with 1 dof
CHI2_GATE_99 = 6.6348966010212145

GRAVITY_VEC = np.array([0.0, 0.0, GRAVITY])

_STATE_DIM = 10
_IV = slice(0, 3)    # velocity block
_IQ = slice(3, 7)    # quaternion block
_IP = slice(7, 10)   # position block

MEASUREMENT_CHANNELS = ("vx", "vy", "vz")


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


@dataclass(frozen=True)
class NavState:
    """Velocity / attitude / position of the IMU point."""

    v: np.ndarray   # body velocity [m/s], shape (3,)
    q: np.ndarray   # unit quaternion [w, x, y, z]
    p: np.ndarray   # earth-frame position [m], shape (3,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.v.shape != (3,) or self.q.shape != (4,) or self.p.shape != (3,):
            raise ValidationError("NavState: v, q, p must have shapes (3,), (4,), (3,)")
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.q))
                and np.all(np.isfinite(self.p))):
            raise ValidationError("NavState: non-finite entries")

    @classmethod
    def initial(cls, x: float = 0.0, y: float = 0.0, psi: float = 0.0,
                v: Sequence[float] = (0.0, 0.0, 0.0)) -> "NavState":
        return cls(v=np.asarray(v, dtype=float), q=quat.from_yaw(psi),
                   p=np.array([x, y, 0.0]))


@dataclass(frozen=True)
class FilterConfig:
    """Noise model, measurement model, and initialization choices."""

    lateral_kind: LateralModelKind = LateralModelKind.ZERO_SLIP
    lateral_params: Optional[LateralModelParams] = None
    imu_lever_x: float = 0.0          # rear axle -> IMU [m]
    imu_lever_y: float = 0.0
    # measurement standard deviations for the velocity pseudo-measurements
    sigma_vx: float = 0.03            # [m/s]
    sigma_vy: float = 0.02            # [m/s]
    sigma_vz: float = 0.10            # [m/s]
    # continuous process noise densities
    accel_noise: float = 0.05         # -> velocity random walk [m/s^2 / sqrt(Hz)]
    gyro_noise: float = 0.002         # -> attitude random walk [rad/s / sqrt(Hz)]
    pos_noise: float = 1e-6           # small floor keeping P positive definite
    # initial standard deviations per state block
    init_sigma_v: float = 0.1
    init_sigma_q: float = 0.01
    init_sigma_p: float = 0.01
    gate_chi2: float = CHI2_GATE_99   # innovation gate; inf disables
    init_velocity_from_measurements: bool = True

    def __post_init__(self) -> None:
        for name in ("sigma_vx", "sigma_vy", "sigma_vz", "accel_noise", "gyro_noise",
                     "pos_noise", "init_sigma_v", "init_sigma_q", "init_sigma_p"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"FilterConfig.{name} must be > 0")
        if self.lateral_kind is not LateralModelKind.ZERO_SLIP and self.lateral_params is None:
            raise ValidationError(
                f"FilterConfig: {self.lateral_kind.value} model requires lateral_params")

    def x_rho(self, direction: int) -> float:
        """Zero-slip point offset used by the v_y measurement for a direction."""
        if self.lateral_kind is LateralModelKind.ZERO_SLIP:
            return 0.0
        assert self.lateral_params is not None
        return select_parameter(self.lateral_params, direction)

    def initial_covariance(self) -> np.ndarray:
        d = np.concatenate([np.full(3, self.init_sigma_v ** 2),
                            np.full(4, self.init_sigma_q ** 2),
                            np.full(3, self.init_sigma_p ** 2)])
        return np.diag(d)

    def process_noise(self, dt: float) -> np.ndarray:
        d = np.concatenate([np.full(3, self.accel_noise ** 2 * dt),
                            np.full(4, (0.5 * self.gyro_noise) ** 2 * dt),
                            np.full(3, self.pos_noise ** 2 * dt)])
        return np.diag(d)


@dataclass
class InnovationRecord:
    t: float
    channel: str
    innovation: float
    variance: float
    accepted: bool


@dataclass
class FilterOutput:
    """Filter trajectory aligned to the sensor timestamps."""

    t: np.ndarray                      # (N,)
    v: np.ndarray                      # (N, 3)
    q: np.ndarray                      # (N, 4)
    p: np.ndarray                      # (N, 3)
    cov_diag: np.ndarray               # (N, 10)
    innovations: List[InnovationRecord] = field(default_factory=list)

    CSV_HEADER = ("t,vx,vy,vz,qw,qx,qy,qz,X,Y,Z,"
                  "cov_vx,cov_vy,cov_vz,cov_qw,cov_qx,cov_qy,cov_qz,cov_X,cov_Y,cov_Z")

    def write_csv(self, path: Union[str, Path]) -> None:
        rows = np.hstack([self.t[:, None], self.v, self.q, self.p, self.cov_diag])
        with Path(path).open("w", newline="") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for row in rows:
                fh.write(",".join(format(x, ".12g") for x in row) + "\n")

    def write_innovation_csv(self, directory: Union[str, Path], stem: str = "innovations") -> None:
        """One CSV per measurement channel: t,innovation,variance,accepted."""
        directory = Path(directory)
        for channel in MEASUREMENT_CHANNELS:
            records = [r for r in self.innovations if r.channel == channel]
            with (directory / f"{stem}_{channel}.csv").open("w", newline="") as fh:
                fh.write("t,innovation,variance,accepted\n")
                for r in records:
                    fh.write(f"{r.t:.12g},{r.innovation:.12g},{r.variance:.12g},"
                             f"{int(r.accepted)}\n")


def read_output_csv(path: Union[str, Path]) -> FilterOutput:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 21:
        raise ValidationError(f"{path}: expected 21 columns, got {data.shape[1]}")
    return FilterOutput(t=data[:, 0], v=data[:, 1:4], q=data[:, 4:8],
                        p=data[:, 8:11], cov_diag=data[:, 11:21])


def mechanize(state: NavState, accel: Sequence[float], gyro: Sequence[float],
              dt: float) -> NavState:
    """Propagate the navigation state over one IMU interval."""
    if dt < 0.0:
        raise ValidationError("mechanize: dt must be >= 0")
    if dt == 0.0:
        return state
    f = np.asarray(accel, dtype=float)
    w = np.asarray(gyro, dtype=float)
    r_old = quat.rotation_matrix(state.q)
    v_dot = f + r_old.T @ GRAVITY_VEC - np.cross(w, state.v)
    v_new = state.v + dt * v_dot
    q_new = quat.multiply(state.q, quat.from_rotation_vector(w * dt))
    r_new = quat.rotation_matrix(q_new)
    p_new = state.p + 0.5 * dt * (r_old @ state.v + r_new @ v_new)
    return NavState(v=v_new, q=q_new, p=p_new)


def mechanize_jacobian(state: NavState, accel: Sequence[float], gyro: Sequence[float],
                       dt: float) -> np.ndarray:
    """Exact Jacobian of :func:`mechanize` with respect to [v, q, p]."""
    w = np.asarray(gyro, dtype=float)
    f = np.asarray(accel, dtype=float)
    q = state.q
    dq = quat.from_rotation_vector(w * dt)
    q_new = quat.multiply(q, dq)
    r_old = quat.rotation_matrix(q)
    r_new = quat.rotation_matrix(q_new)
    partials_old = quat.rotation_matrix_partials(q)       # (4, 3, 3)
    partials_new = quat.rotation_matrix_partials(q_new)

    v_new = state.v + dt * (f + r_old.T @ GRAVITY_VEC - np.cross(w, state.v))

    jac = np.zeros((_STATE_DIM, _STATE_DIM))
    # velocity block
    dv_dv = np.eye(3) - dt * _skew(w)
    dv_dq = dt * np.stack([partials_old[i].T @ GRAVITY_VEC for i in range(4)], axis=1)
    jac[_IV, _IV] = dv_dv
    jac[_IV, _IQ] = dv_dq
    # attitude block: right multiplication by the fixed increment
    dqn_dq = quat.right_multiply_matrix(dq)
    jac[_IQ, _IQ] = dqn_dq
    # position block
    jac[_IP, _IV] = 0.5 * dt * (r_old + r_new @ dv_dv)
    d_rv_old = np.stack([partials_old[i] @ state.v for i in range(4)], axis=1)
    d_rv_new = np.stack([partials_new[i] @ v_new for i in range(4)], axis=1)
    jac[_IP, _IQ] = 0.5 * dt * (d_rv_old + d_rv_new @ dqn_dq + r_new @ dv_dq)
    jac[_IP, _IP] = np.eye(3)
    return jac


def _check_covariance(p_mat: np.ndarray, where: str) -> np.ndarray:
    p_mat = 0.5 * (p_mat + p_mat.T)
    try:
        np.linalg.cholesky(p_mat)
    except np.linalg.LinAlgError:
        raise CovarianceError(f"{where}: covariance lost positive definiteness") from None
    return p_mat


def predict(state: NavState, cov: np.ndarray, sample: SensorSample, dt: float,
            config: FilterConfig) -> Tuple[NavState, np.ndarray]:
    """EKF time update over one IMU interval; dt = 0 is a no-op."""
    if dt == 0.0:
        return state, cov
    jac = mechanize_jacobian(state, sample.accel, sample.gyro, dt)
    new_state = mechanize(state, sample.accel, sample.gyro, dt)
    new_state = replace(new_state, q=quat.normalize(new_state.q))
    new_cov = jac @ cov @ jac.T + config.process_noise(dt)
    new_cov = _check_covariance(new_cov, "predict")
    return new_state, new_cov


def _scalar_update(x: np.ndarray, cov: np.ndarray, index: int, z: float, var: float,
                   gate: float) -> Tuple[np.ndarray, np.ndarray, float, float, bool]:
    innovation = z - x[index]
    s_var = cov[index, index] + var
    if innovation * innovation > gate * s_var:
        return x, cov, innovation, s_var, False
    gain = cov[:, index] / s_var
    x = x + gain * innovation
    # Joseph form for numerical robustness
    ikh = np.eye(_STATE_DIM)
    ikh[:, index] -= gain
    cov = ikh @ cov @ ikh.T + var * np.outer(gain, gain)
    cov = 0.5 * (cov + cov.T)
    return x, cov, innovation, s_var, True


def velocity_measurements(sample: SensorSample, config: FilterConfig,
                          direction: int) -> Dict[str, float]:
    """Measured IMU-point velocities from one sensor sample.

    v_x comes from the mean rear wheel speeds signed by gear (transferred
    over the lateral IMU lever), v_y from the configured lateral model as
    (l_x - x_rho) * omega_z, and v_z from the zero-vertical-velocity
    assumption. Needs a nonzero direction.
    """
    if direction == 0:
        raise ValidationError("velocity_measurements: direction undefined (neutral)")
    omega_z = sample.gyro[2]
    rear_mean = 0.5 * (sample.wheel_speeds[2] + sample.wheel_speeds[3])
    z_vx = direction * rear_mean - omega_z * config.imu_lever_y
    z_vy = (config.imu_lever_x - config.x_rho(direction)) * omega_z
    return {"vx": z_vx, "vy": z_vy, "vz": 0.0}


def measure_velocity(state: NavState, cov: np.ndarray, sample: SensorSample,
                     config: FilterConfig, direction: int
                     ) -> Tuple[NavState, np.ndarray, List[InnovationRecord]]:
    """Apply the scalar velocity updates for one sample.

    ``direction`` is the current driving direction (+1/-1), or 0 when the
    gear is neutral and no valid direction is being held, in which case the
    v_x and v_y updates are skipped (their models are undefined) and only
    the vertical channel is applied.
    """
    x = np.concatenate([state.v, state.q, state.p])
    records: List[InnovationRecord] = []
    channels: List[Tuple[str, int, float, float]] = []
    if direction != 0:
        meas = velocity_measurements(sample, config, direction)
        channels.append(("vx", 0, meas["vx"], config.sigma_vx ** 2))
        channels.append(("vy", 1, meas["vy"], config.sigma_vy ** 2))
    channels.append(("vz", 2, 0.0, config.sigma_vz ** 2))
    for name, index, z, var in channels:
        x, cov, innovation, s_var, accepted = _scalar_update(
            x, cov, index, z, var, config.gate_chi2)
        records.append(InnovationRecord(sample.t, name, innovation, s_var, accepted))
    new_state = NavState(v=x[_IV], q=quat.normalize(x[_IQ]), p=x[_IP])
    cov = _check_covariance(cov, "measure_velocity")
    return new_state, cov, records


def run_filter(log: ManeuverLog, config: FilterConfig,
               initial_pose: Optional[Tuple[float, float, float]] = None) -> FilterOutput:
    """Full predict/update pass over a maneuver log.

    The initial pose (x, y, psi) refers to the rear-axle center and comes
    from the argument, else from the first ground-truth sample, else the
    origin. Velocity starts at the first sample's pseudo-measurements
    unless configured otherwise (then ground truth / zero is used).
    Position and heading drift freely; only velocity is stabilized.

    The filter state lives at the IMU; the emitted velocity and position
    series are transferred back to the rear-axle center so they compare
    directly against ground truth. The covariance diagonal refers to the
    internal IMU-point state.
    """
    samples = log.samples
    lever = np.array([config.imu_lever_x, config.imu_lever_y, 0.0])
    if initial_pose is not None:
        x0, y0, psi0 = initial_pose
    elif log.truth:
        x0, y0, psi0 = log.truth[0].x, log.truth[0].y, log.truth[0].psi
    else:
        x0 = y0 = psi0 = 0.0

    direction = samples[0].gear_sign
    v0 = np.zeros(3)
    if config.init_velocity_from_measurements and direction != 0:
        meas = velocity_measurements(samples[0], config, direction)
        v0 = np.array([meas["vx"], meas["vy"], meas["vz"]])
    elif not config.init_velocity_from_measurements and log.truth:
        t0 = log.truth[0]
        v0 = np.array([t0.v_x - t0.omega_z * config.imu_lever_y,
                       t0.v_y + t0.omega_z * config.imu_lever_x, 0.0])

    state = NavState.initial(x0, y0, psi0, v0)
    state = replace(state, p=state.p + quat.rotation_matrix(state.q) @ lever)
    cov = config.initial_covariance()

    n = len(samples)
    out_t = np.empty(n)
    out_v = np.empty((n, 3))
    out_q = np.empty((n, 4))
    out_p = np.empty((n, 3))
    out_cov = np.empty((n, _STATE_DIM))
    innovations: List[InnovationRecord] = []

    for i, sample in enumerate(samples):
        if i > 0:
            dt = sample.t - samples[i - 1].t
            state, cov = predict(state, cov, samples[i - 1], dt, config)
        state, cov, records = measure_velocity(state, cov, sample, config,
                                               sample.gear_sign)
        innovations.extend(records)
        out_t[i] = sample.t
        out_q[i] = state.q
        out_v[i] = state.v - np.cross(np.asarray(sample.gyro), lever)
        out_p[i] = state.p - quat.rotation_matrix(state.q) @ lever
        out_cov[i] = np.diag(cov)
    return FilterOutput(t=out_t, v=out_v, q=out_q, p=out_p, cov_diag=out_cov,
                        innovations=innovations)
