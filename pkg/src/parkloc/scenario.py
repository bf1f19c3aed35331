"""Scenario descriptions and ground-truth generation.

A scenario is a list of constant-input segments (duration, commanded v_x,
and either a steering angle or a yaw-rate target). Truth trajectories are
generated by one of three models:

    "kinematic"  kinematic bicycle, zero rear lateral velocity
    "omega-vy"   kinematic bicycle plus v_yr = -x_rho * omega_z, with
                 x_rho selected by driving direction
    "two-track"  full nonlinear two-track dynamics

Scenario files are TOML; a few named scenarios ship with the package.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (AckermannDeviationMap, GroundTruthSample, TireParams,
                   VehicleParams, driving_direction_sign)
from .errors import SchemaError, ValidationError
from .lateral import LateralModelParams, select_parameter
from .sim import (SimInputs, SimState, kinematic_bicycle_step,
                  lateral_bicycle_step, two_track_step, TWO_TRACK_MIN_SPEED)

SCENARIO_MODELS = ("kinematic", "omega-vy", "two-track")

_BUNDLED_DIR = Path(__file__).parent / "scenarios"


@dataclass(frozen=True)
class Segment:
    """Constant inputs held for a fixed duration."""

    duration: float                   # [s]
    v_x: float                        # [m/s], signed
    delta_f: Optional[float] = None   # [rad]
    omega_z: Optional[float] = None   # [rad/s]; alternative to delta_f

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ValidationError("Segment.duration must be > 0")
        if (self.delta_f is None) == (self.omega_z is None):
            raise ValidationError("Segment needs exactly one of delta_f / omega_z")

    def steering(self, wheelbase: float) -> float:
        """Mean front steering angle implied by this segment."""
        if self.delta_f is not None:
            return self.delta_f
        if self.v_x == 0.0:
            if self.omega_z != 0.0:
                raise ValidationError("Segment: omega_z target requires v_x != 0")
            return 0.0
        return math.atan(wheelbase * self.omega_z / self.v_x)


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    segments: Tuple[Segment, ...]
    rate_hz: float = 100.0
    model: str = "kinematic"
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValidationError("Scenario: no segments")
        if self.rate_hz <= 0.0:
            raise ValidationError("Scenario.rate_hz must be > 0")
        if self.model not in SCENARIO_MODELS:
            raise ValidationError(
                f"Scenario.model must be one of {SCENARIO_MODELS}, got {self.model!r}")


def bundled_scenario_path(name: str) -> Path:
    path = _BUNDLED_DIR / f"{name}.toml"
    if not path.exists():
        available = sorted(p.stem for p in _BUNDLED_DIR.glob("*.toml"))
        raise ValidationError(f"no bundled scenario {name!r}; available: {available}")
    return path


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Load a scenario from a TOML file path or a bundled scenario name."""
    path = Path(source)
    if not path.exists() and not path.suffix:
        path = bundled_scenario_path(str(source))
    if not path.exists():
        raise ValidationError(f"scenario file not found: {source}")
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    known = {"id", "description", "rate_hz", "model", "segments"}
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(f"{path}: unknown scenario keys {sorted(unknown)}")
    if "segments" not in doc:
        raise SchemaError(f"{path}: missing key 'segments'")
    segments = []
    for i, raw in enumerate(doc["segments"]):
        seg_known = {"duration", "v_x", "delta_f", "omega_z"}
        extra = set(raw) - seg_known
        if extra:
            raise SchemaError(f"{path}: segments[{i}]: unknown keys {sorted(extra)}")
        for key in ("duration", "v_x"):
            if key not in raw:
                raise SchemaError(f"{path}: segments[{i}]: missing key '{key}'")
        segments.append(Segment(duration=float(raw["duration"]), v_x=float(raw["v_x"]),
                                delta_f=raw.get("delta_f"), omega_z=raw.get("omega_z")))
    return Scenario(scenario_id=str(doc.get("id", path.stem)),
                    segments=tuple(segments),
                    rate_hz=float(doc.get("rate_hz", 100.0)),
                    model=str(doc.get("model", "kinematic")),
                    description=str(doc.get("description", "")))


def _advance(state: SimState, inputs: SimInputs, model: str, params: VehicleParams,
             tire: TireParams, deviation: AckermannDeviationMap,
             x_rho: float, dt: float) -> SimState:
    if model == "kinematic":
        max_h = 0.01
        step = kinematic_bicycle_step
    elif model == "omega-vy":
        max_h = 0.01

        def step(s, i, p, h):
            return lateral_bicycle_step(s, i, p, x_rho, h)
    else:
        if abs(inputs.v_x) < TWO_TRACK_MIN_SPEED:
            # stopped: the two-track model is singular, hold the pose
            return SimState(x=state.x, y=state.y, psi=state.psi,
                            v_x=inputs.v_x, v_y=0.0, omega_z=0.0)
        max_h = 0.005

        def step(s, i, p, h):
            return two_track_step(s, i, p, tire, deviation, h)
    n_sub = max(1, math.ceil(dt / max_h - 1e-12))
    h = dt / n_sub
    for _ in range(n_sub):
        state = step(state, inputs, params, h)
    return state


def simulate_scenario(scenario: Scenario, params: VehicleParams, tire: TireParams,
                      deviation: AckermannDeviationMap,
                      lateral: Optional[LateralModelParams] = None,
                      initial: SimState = SimState()) -> List[GroundTruthSample]:
    """Generate the ground-truth track for a scenario.

    Samples land on the uniform grid t_k = k / rate_hz, with the state
    recorded before each step; segment durations are rounded to whole
    ticks.
    """
    if scenario.model == "omega-vy" and lateral is None:
        raise ValidationError("simulate_scenario: omega-vy model needs lateral params")
    dt = 1.0 / scenario.rate_hz
    state = initial
    truth: List[GroundTruthSample] = []
    tick = 0

    def record() -> None:
        truth.append(GroundTruthSample(t=tick * dt, x=state.x, y=state.y, psi=state.psi,
                                       v_x=state.v_x, v_y=state.v_y,
                                       omega_z=state.omega_z))

    for segment in scenario.segments:
        n_steps = max(1, round(segment.duration * scenario.rate_hz))
        inputs = SimInputs(v_x=segment.v_x, delta_f=segment.steering(params.wheelbase))
        x_rho = 0.0
        if scenario.model == "omega-vy" and lateral is not None:
            direction = driving_direction_sign(segment.v_x)
            if direction != 0:
                x_rho = select_parameter(lateral, direction)
        # recorded samples carry the inputs active over [t_k, t_k + dt);
        # for the kinematic models the velocities are direct functions of
        # the inputs, for the two-track model they are dynamic states
        if scenario.model == "two-track":
            state = SimState(x=state.x, y=state.y, psi=state.psi, v_x=inputs.v_x,
                             v_y=state.v_y, omega_z=state.omega_z)
        else:
            omega = inputs.v_x * math.tan(inputs.delta_f) / params.wheelbase
            state = SimState(x=state.x, y=state.y, psi=state.psi, v_x=inputs.v_x,
                             v_y=-x_rho * omega, omega_z=omega)
        for _ in range(n_steps):
            record()
            state = _advance(state, inputs, scenario.model, params, tire, deviation,
                             x_rho, dt)
            tick += 1
    record()
    return truth
