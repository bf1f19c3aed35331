"""Closed-form effect of a lateral-velocity parameter error on a circle.

On a steady-state circle (constant v_x and omega_z), assuming the
zero-lateral-velocity point dx away from where it really is injects a
spurious lateral velocity v_y = dx * omega_z into dead reckoning. The
resulting position perturbation has a closed form, which makes it the
reference oracle for the filter-level mis-modeling experiments:

    X(t)  = (v_x/w) sin(wt)                 nominal circle
    Y(t)  = (v_x/w) (1 - cos(wt))
    X'(t) = X(t) + dx (cos(wt) - 1)         perturbed circle
    Y'(t) = Y(t) + dx sin(wt)
    e     = |dx| sqrt(2 (1 - cos(wt)))      position error vs turn phase

The error peaks at 2|dx| after half a circle; after a quarter turn it is
sqrt(2)|dx|, the figure of merit for 90-degree parking maneuvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class CirclePerturbationSpec:
    """Steady circle plus a lateral-velocity parameter error."""

    v_x: float          # [m/s]
    omega_z: float      # [rad/s], nonzero
    dx: float           # parameter error [m]
    turn_angle: float   # total phase to analyze [rad]

    def __post_init__(self) -> None:
        if self.omega_z == 0.0:
            raise ValidationError("CirclePerturbationSpec.omega_z must be nonzero")
        for name in ("v_x", "omega_z", "dx", "turn_angle"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"CirclePerturbationSpec.{name} must be finite")


@dataclass(frozen=True)
class DisturbanceReport:
    """Sampled perturbation track and its scalar summaries."""

    phase: np.ndarray     # omega_z * t [rad]
    delta_x: np.ndarray   # [m]
    delta_y: np.ndarray   # [m]
    error: np.ndarray     # [m]
    e_max: float          # 2 |dx|
    e_90: float           # sqrt(2) |dx|


def nominal_circle(v_x: float, omega_z: float, t) -> Tuple[np.ndarray, np.ndarray]:
    """Undisturbed circle position at time(s) t; radius v_x/omega_z."""
    if omega_z == 0.0:
        raise ValidationError("nominal_circle: omega_z must be nonzero")
    t = np.asarray(t, dtype=float)
    radius = v_x / omega_z
    return radius * np.sin(omega_z * t), radius * (1.0 - np.cos(omega_z * t))


def perturbed_circle(v_x: float, omega_z: float, dx: float, t
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """Circle position with the spurious lateral velocity dx * omega_z."""
    x, y = nominal_circle(v_x, omega_z, t)
    t = np.asarray(t, dtype=float)
    return (x + dx * (np.cos(omega_z * t) - 1.0),
            y + dx * np.sin(omega_z * t))


def position_error(dx: float, phase) -> np.ndarray:
    """Position error |dx| sqrt(2 (1 - cos(phase))) at turn phase omega_z*t.

    Taking the phase (not time) as input keeps the expression total; the
    straight-driving limit is simply phase -> 0.
    """
    phase = np.asarray(phase, dtype=float)
    return abs(dx) * np.sqrt(2.0 * (1.0 - np.cos(phase)))


def max_position_error(dx: float) -> float:
    """Worst-case error, reached after a 180-degree turn."""
    return 2.0 * abs(dx)


def quarter_turn_error(dx: float) -> float:
    """Error after a 90-degree turn: sqrt(2) |dx|."""
    return math.sqrt(2.0) * abs(dx)


def analyze(spec: CirclePerturbationSpec, n_points: int = 361) -> DisturbanceReport:
    """Sample the perturbation over the requested turn angle."""
    if n_points < 2:
        raise ValidationError("analyze: need at least two sample points")
    phase = np.linspace(0.0, abs(spec.turn_angle), n_points)
    t = phase / abs(spec.omega_z)
    x0, y0 = nominal_circle(spec.v_x, spec.omega_z, t)
    x1, y1 = perturbed_circle(spec.v_x, spec.omega_z, spec.dx, t)
    dx_t = x1 - x0
    dy_t = y1 - y0
    return DisturbanceReport(phase=phase, delta_x=dx_t, delta_y=dy_t,
                             error=np.hypot(dx_t, dy_t),
                             e_max=max_position_error(spec.dx),
                             e_90=quarter_turn_error(spec.dx))


def write_report_csv(path, report: DisturbanceReport) -> None:
    """CSV columns: phase, dX, dY, e."""
    with open(path, "w", newline="") as fh:
        fh.write("phase,dX,dY,e\n")
        for row in zip(report.phase, report.delta_x, report.delta_y, report.error):
            fh.write(",".join(format(v, ".12g") for v in row) + "\n")
