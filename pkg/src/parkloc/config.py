"""Run configuration: one TOML document drives every CLI command.

Sections: vehicle, tire, lateral_model, filter, noise, scenario, paths.
Unknown keys are rejected, required keys are reported by their dotted
names, and the fully resolved document (defaults included) is echoed into
every run manifest for provenance. All values are SI.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import AckermannDeviationMap, TireParams, VehicleParams
from .ekf import CHI2_GATE_99, FilterConfig
from .errors import SchemaError
from .lateral import LateralModelKind, LateralModelParams
from .sensors import SensorNoise

_REQUIRED = object()


def _positive(v: float) -> bool:
    return v > 0.0


def _non_negative(v: float) -> bool:
    return v >= 0.0


def _any(v: Any) -> bool:
    return True


@dataclass(frozen=True)
class _Key:
    types: tuple
    default: Any = _REQUIRED
    check: Callable[[Any], bool] = _any
    unit: str = ""


def _f(default: Any = _REQUIRED, check: Callable = _any, unit: str = "") -> _Key:
    return _Key(types=(int, float), default=default, check=check, unit=unit)


def _b(default: Any = _REQUIRED) -> _Key:
    return _Key(types=(bool,), default=default)


def _s(default: Any = _REQUIRED, check: Callable = _any) -> _Key:
    return _Key(types=(str,), default=default, check=check)


_LATERAL_KINDS = tuple(kind.value for kind in LateralModelKind)
_SCENARIO_MODELS = ("kinematic", "omega-vy", "two-track")

SCHEMA: Dict[str, Dict[str, _Key]] = {
    "vehicle": {
        "mass": _f(check=_positive, unit="kg"),
        "yaw_inertia": _f(check=_positive, unit="kg m^2"),
        "lever_front": _f(check=_positive, unit="m"),
        "lever_rear": _f(check=_positive, unit="m"),
        "track_front": _f(check=_positive, unit="m"),
        "stiffness_front": _f(check=_positive, unit="N/rad"),
        "stiffness_rear": _f(check=_positive, unit="N/rad"),
        "imu_lever_x": _f(default=0.0, unit="m"),
        "imu_lever_y": _f(default=0.0, unit="m"),
        "ackermann_deviation": _f(default=0.0, unit="-"),
    },
    "tire": {
        "unloaded_radius": _f(default=0.35, check=_positive, unit="m"),
        "camber_stiffness_ratio": _f(default=0.8, check=_non_negative, unit="-"),
        "turn_slip_enabled": _b(default=True),
    },
    "lateral_model": {
        "kind": _s(default="omega-vy", check=lambda v: v in _LATERAL_KINDS),
        "x_rho_forward": _f(default=0.0, unit="m"),
        "x_rho_reverse": _f(default=-0.21, unit="m"),
    },
    "filter": {
        "sigma_vx": _f(default=0.03, check=_positive, unit="m/s"),
        "sigma_vy": _f(default=0.02, check=_positive, unit="m/s"),
        "sigma_vz": _f(default=0.10, check=_positive, unit="m/s"),
        "accel_noise": _f(default=0.05, check=_positive, unit="m/s^2"),
        "gyro_noise": _f(default=0.002, check=_positive, unit="rad/s"),
        "pos_noise": _f(default=1e-6, check=_positive, unit="m"),
        "init_sigma_v": _f(default=0.1, check=_positive, unit="m/s"),
        "init_sigma_q": _f(default=0.01, check=_positive, unit="-"),
        "init_sigma_p": _f(default=0.01, check=_positive, unit="m"),
        "gate_chi2": _f(default=CHI2_GATE_99, check=_positive, unit="-"),
        "init_velocity_from_measurements": _b(default=True),
    },
    "noise": {
        "gyro_bias": _f(default=0.0, unit="rad/s"),
        "gyro_sigma": _f(default=0.0, check=_non_negative, unit="rad/s"),
        "accel_bias": _f(default=0.0, unit="m/s^2"),
        "accel_sigma": _f(default=0.0, check=_non_negative, unit="m/s^2"),
        "encoder_step": _f(default=0.0, check=_non_negative, unit="m/s"),
        "steering_offset": _f(default=0.0, unit="rad"),
        "seed": _Key(types=(int,), default=0, check=lambda v: v >= 0),
    },
    "scenario": {
        "source": _s(default="perpendicular_reverse_90"),
        "rate_hz": _f(default=100.0, check=_positive, unit="Hz"),
        "model": _s(default="omega-vy", check=lambda v: v in _SCENARIO_MODELS),
    },
    "paths": {
        "out_dir": _s(default="out"),
    },
}


def _validate_section(name: str, schema: Mapping[str, _Key],
                      raw: Mapping[str, Any]) -> Dict[str, Any]:
    unknown = set(raw) - set(schema)
    if unknown:
        raise SchemaError(f"{name}: unknown key(s) {sorted(unknown)}")
    resolved: Dict[str, Any] = {}
    for key, spec in schema.items():
        if key in raw:
            value = raw[key]
        elif spec.default is _REQUIRED:
            raise SchemaError(f"{name}.{key}: missing required key")
        else:
            value = spec.default
        if isinstance(value, bool) and bool not in spec.types:
            raise SchemaError(f"{name}.{key}: expected {spec.types}, got bool")
        if not isinstance(value, spec.types):
            raise SchemaError(
                f"{name}.{key}: expected type {'/'.join(t.__name__ for t in spec.types)}, "
                f"got {type(value).__name__}")
        if spec.types == (int, float) and not isinstance(value, bool):
            value = float(value)
            if not math.isfinite(value):
                raise SchemaError(f"{name}.{key}: non-finite value")
        if not spec.check(value):
            unit = f" [{spec.unit}]" if spec.unit else ""
            raise SchemaError(f"{name}.{key}: value {value!r}{unit} out of range")
        resolved[key] = value
    return resolved


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with typed accessors for every module."""

    resolved: Dict[str, Dict[str, Any]]

    @property
    def vehicle(self) -> VehicleParams:
        v = self.resolved["vehicle"]
        return VehicleParams(
            mass=v["mass"], yaw_inertia=v["yaw_inertia"], lever_front=v["lever_front"],
            lever_rear=v["lever_rear"], track_front=v["track_front"],
            stiffness_front=v["stiffness_front"], stiffness_rear=v["stiffness_rear"],
            imu_lever_x=v["imu_lever_x"], imu_lever_y=v["imu_lever_y"])

    @property
    def deviation(self) -> AckermannDeviationMap:
        return AckermannDeviationMap(self.resolved["vehicle"]["ackermann_deviation"])

    @property
    def tire(self) -> TireParams:
        t = self.resolved["tire"]
        return TireParams(unloaded_radius=t["unloaded_radius"],
                          camber_stiffness_ratio=t["camber_stiffness_ratio"],
                          turn_slip_enabled=t["turn_slip_enabled"])

    @property
    def lateral_kind(self) -> LateralModelKind:
        return LateralModelKind(self.resolved["lateral_model"]["kind"])

    @property
    def lateral_params(self) -> LateralModelParams:
        lm = self.resolved["lateral_model"]
        return LateralModelParams(x_rho_forward=lm["x_rho_forward"],
                                  x_rho_reverse=lm["x_rho_reverse"],
                                  wheelbase=self.vehicle.wheelbase)

    def filter_config(self, kind: Optional[LateralModelKind] = None) -> FilterConfig:
        f = self.resolved["filter"]
        v = self.resolved["vehicle"]
        kind = kind or self.lateral_kind
        params = None if kind is LateralModelKind.ZERO_SLIP else self.lateral_params
        return FilterConfig(
            lateral_kind=kind, lateral_params=params,
            imu_lever_x=v["imu_lever_x"], imu_lever_y=v["imu_lever_y"],
            sigma_vx=f["sigma_vx"], sigma_vy=f["sigma_vy"], sigma_vz=f["sigma_vz"],
            accel_noise=f["accel_noise"], gyro_noise=f["gyro_noise"],
            pos_noise=f["pos_noise"], init_sigma_v=f["init_sigma_v"],
            init_sigma_q=f["init_sigma_q"], init_sigma_p=f["init_sigma_p"],
            gate_chi2=f["gate_chi2"],
            init_velocity_from_measurements=f["init_velocity_from_measurements"])

    @property
    def sensor_noise(self) -> SensorNoise:
        n = self.resolved["noise"]
        return SensorNoise(gyro_bias=n["gyro_bias"], gyro_sigma=n["gyro_sigma"],
                           accel_bias=n["accel_bias"], accel_sigma=n["accel_sigma"],
                           encoder_step=n["encoder_step"],
                           steering_offset=n["steering_offset"], seed=n["seed"])

    @property
    def scenario_source(self) -> str:
        return self.resolved["scenario"]["source"]

    @property
    def out_dir(self) -> Path:
        return Path(self.resolved["paths"]["out_dir"])

    def with_seed(self, seed: int) -> "RunConfig":
        resolved = {k: dict(v) for k, v in self.resolved.items()}
        resolved["noise"]["seed"] = int(seed)
        return RunConfig(resolved=resolved)

    def with_out_dir(self, out_dir: Union[str, Path]) -> "RunConfig":
        resolved = {k: dict(v) for k, v in self.resolved.items()}
        resolved["paths"]["out_dir"] = str(out_dir)
        return RunConfig(resolved=resolved)


def validate_config(doc: Mapping[str, Any]) -> RunConfig:
    """Validate a raw nested mapping against the schema and resolve defaults."""
    unknown = set(doc) - set(SCHEMA)
    if unknown:
        raise SchemaError(f"unknown section(s) {sorted(unknown)}")
    resolved: Dict[str, Dict[str, Any]] = {}
    for section, schema in SCHEMA.items():
        raw = doc.get(section, {})
        if not isinstance(raw, Mapping):
            raise SchemaError(f"{section}: expected a table")
        resolved[section] = _validate_section(section, schema, raw)
    config = RunConfig(resolved=resolved)
    # construction of the typed views performs the physical-consistency checks
    _ = config.vehicle, config.tire, config.lateral_params, config.sensor_noise
    _ = config.filter_config()
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    return validate_config(doc)


def default_config() -> RunConfig:
    """Resolved defaults with a generic mid-size test vehicle."""
    return validate_config({
        "vehicle": {
            "mass": 1820.0, "yaw_inertia": 3500.0,
            "lever_front": 1.42, "lever_rear": 1.48, "track_front": 1.60,
            "stiffness_front": 130000.0, "stiffness_rear": 120000.0,
            "imu_lever_x": 1.50, "imu_lever_y": 0.0,
            "ackermann_deviation": -0.10,
        },
    })
