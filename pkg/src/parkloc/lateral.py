"""Lateral-velocity pseudo-measurement models for low-speed driving.

Three interchangeable models predict the rear-axle lateral velocity from
proprioceptive signals:

    zero-slip   v_yr = 0
    delta-beta  beta_r = -k_rho * tan(delta_f)
    omega-vy    v_yr = -x_rho * omega_z

``x_rho`` is the signed distance from the rear-axle center to the point on
the longitudinal axis where the zero-side-slip assumption actually holds
(positive forward). ``k_rho`` is the equivalent dimensionless gain; the two
are related through k = x / (L - x) at wheelbase L. Parameters are kept
separately for forward and reverse driving; no sign relation between the
two directions is assumed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateParameterError, ValidationError


class LateralModelKind(enum.Enum):
    """Which lateral-velocity model a filter or report uses."""

    ZERO_SLIP = "zero-slip"
    DELTA_BETA = "delta-beta"
    OMEGA_VY = "omega-vy"


def vy_omega_model(omega_z: float, x_rho: float) -> float:
    """Rear-axle lateral velocity v_yr = -x_rho * omega_z [m/s]."""
    return -x_rho * omega_z


def beta_delta_model(tan_delta_f: float, k_rho: float) -> float:
    """Rear-axle side-slip angle beta_r = -k_rho * tan(delta_f) [rad]."""
    return -k_rho * tan_delta_f


def k_from_x(x: float, wheelbase: float) -> float:
    """Convert the zero-slip point offset x to the dimensionless gain k.

    k = x / (L - x). The pole at x = L (zero-slip point on the front axle)
    is rejected.
    """
    if wheelbase <= 0.0:
        raise ValidationError("k_from_x: wheelbase must be > 0")
    denom = wheelbase - x
    if abs(denom) < 1e-12 * max(1.0, wheelbase):
        raise DegenerateParameterError(
            f"k_from_x: x = {x!r} coincides with the wheelbase (pole of k = x/(L-x))")
    return x / denom


def x_from_k(k: float, wheelbase: float) -> float:
    """Inverse of :func:`k_from_x`: x = k L / (1 + k)."""
    if wheelbase <= 0.0:
        raise ValidationError("x_from_k: wheelbase must be > 0")
    denom = 1.0 + k
    if abs(denom) < 1e-12:
        raise DegenerateParameterError(
            f"x_from_k: k = {k!r} is at the pole of x = kL/(1+k)")
    return k * wheelbase / denom


@dataclass(frozen=True)
class LateralModelParams:
    """Per-direction zero-slip point offsets plus the wheelbase for conversions."""

    x_rho_forward: float    # [m], positive = ahead of the rear axle
    x_rho_reverse: float    # [m]
    wheelbase: float        # L [m]

    def __post_init__(self) -> None:
        if self.wheelbase <= 0.0 or not math.isfinite(self.wheelbase):
            raise ValidationError("LateralModelParams.wheelbase must be finite and > 0")
        for name in ("x_rho_forward", "x_rho_reverse"):
            x = getattr(self, name)
            if not math.isfinite(x):
                raise ValidationError(f"LateralModelParams.{name} must be finite")
            if abs(x) >= self.wheelbase:
                raise ValidationError(
                    f"LateralModelParams.{name} = {x:.3g} m exceeds the wheelbase "
                    f"{self.wheelbase:.3g} m; the zero-slip point must stay within "
                    "one wheelbase of the rear axle")

    def k_rho(self, direction: int) -> float:
        """Dimensionless gain for the given driving direction."""
        return k_from_x(select_parameter(self, direction), self.wheelbase)

    @classmethod
    def from_k(cls, k_forward: float, k_reverse: float, wheelbase: float) -> "LateralModelParams":
        return cls(x_rho_forward=x_from_k(k_forward, wheelbase),
                   x_rho_reverse=x_from_k(k_reverse, wheelbase),
                   wheelbase=wheelbase)


def select_parameter(params: LateralModelParams, direction: int) -> float:
    """Pick the x_rho for a driving direction (+1 forward, -1 reverse).

    Neutral (0) is rejected: the caller must hold the last valid direction.
    """
    if direction == 1:
        return params.x_rho_forward
    if direction == -1:
        return params.x_rho_reverse
    raise ValidationError(
        f"select_parameter: direction must be +1 or -1, got {direction!r}")
