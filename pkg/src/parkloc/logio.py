"""CSV persistence for maneuver logs and ground-truth tracks.

Sensor log columns (exactly, SI units):
    t,ax,ay,az,wx,wy,wz,ws_fl,ws_fr,ws_rl,ws_rr,delta_f,gear
Ground truth columns (sibling file):
    t,X,Y,psi,vx,vy,wz
Floats are written with 12 significant digits.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Optional, Sequence, Union

from .core import GroundTruthSample, ManeuverLog, SensorSample, GEAR_SIGNS
from .errors import ValidationError

SENSOR_COLUMNS = ["t", "ax", "ay", "az", "wx", "wy", "wz",
                  "ws_fl", "ws_fr", "ws_rl", "ws_rr", "delta_f", "gear"]
TRUTH_COLUMNS = ["t", "X", "Y", "psi", "vx", "vy", "wz"]


def _fmt(value: float) -> str:
    return format(value, ".12g")


def write_sensor_csv(path: Union[str, Path], samples: Sequence[SensorSample]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SENSOR_COLUMNS)
        for s in samples:
            writer.writerow([_fmt(s.t),
                             _fmt(s.accel[0]), _fmt(s.accel[1]), _fmt(s.accel[2]),
                             _fmt(s.gyro[0]), _fmt(s.gyro[1]), _fmt(s.gyro[2]),
                             _fmt(s.wheel_speeds[0]), _fmt(s.wheel_speeds[1]),
                             _fmt(s.wheel_speeds[2]), _fmt(s.wheel_speeds[3]),
                             _fmt(s.steering_front), s.gear])


def write_truth_csv(path: Union[str, Path], truth: Sequence[GroundTruthSample]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_COLUMNS)
        for s in truth:
            writer.writerow([_fmt(s.t), _fmt(s.x), _fmt(s.y), _fmt(s.psi),
                             _fmt(s.v_x), _fmt(s.v_y), _fmt(s.omega_z)])


def _read_rows(path: Path, expected_header: List[str]) -> List[List[str]]:
    with path.open("r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty CSV") from None
        if header != expected_header:
            raise ValidationError(
                f"{path}: unexpected header {header!r}, expected {expected_header!r}")
        return [row for row in reader if row]


def read_sensor_csv(path: Union[str, Path]) -> List[SensorSample]:
    path = Path(path)
    samples = []
    for i, row in enumerate(_read_rows(path, SENSOR_COLUMNS)):
        if len(row) != len(SENSOR_COLUMNS):
            raise ValidationError(f"{path}: row {i + 2} has {len(row)} fields")
        gear = row[12].strip()
        if gear not in GEAR_SIGNS:
            raise ValidationError(f"{path}: row {i + 2}: bad gear {gear!r}")
        try:
            vals = [float(v) for v in row[:12]]
        except ValueError as exc:
            raise ValidationError(f"{path}: row {i + 2}: {exc}") from None
        samples.append(SensorSample(
            t=vals[0], accel=(vals[1], vals[2], vals[3]),
            gyro=(vals[4], vals[5], vals[6]),
            wheel_speeds=(vals[7], vals[8], vals[9], vals[10]),
            steering_front=vals[11], gear=gear))
    return samples


def read_truth_csv(path: Union[str, Path]) -> List[GroundTruthSample]:
    path = Path(path)
    truth = []
    for i, row in enumerate(_read_rows(path, TRUTH_COLUMNS)):
        if len(row) != len(TRUTH_COLUMNS):
            raise ValidationError(f"{path}: row {i + 2} has {len(row)} fields")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise ValidationError(f"{path}: row {i + 2}: {exc}") from None
        truth.append(GroundTruthSample(t=vals[0], x=vals[1], y=vals[2], psi=vals[3],
                                       v_x=vals[4], v_y=vals[5], omega_z=vals[6]))
    return truth


def write_log(log: ManeuverLog, sensor_path: Union[str, Path],
              truth_path: Optional[Union[str, Path]] = None) -> None:
    """Write a maneuver log (and its truth, when present) to CSV files."""
    write_sensor_csv(sensor_path, log.samples)
    if truth_path is not None and log.truth is not None:
        write_truth_csv(truth_path, log.truth)


def read_log(sensor_path: Union[str, Path],
             truth_path: Optional[Union[str, Path]] = None,
             maneuver_id: str = "") -> ManeuverLog:
    """Load a maneuver log, attaching ground truth when a path is given."""
    sensor_path = Path(sensor_path)
    samples = read_sensor_csv(sensor_path)
    truth = read_truth_csv(truth_path) if truth_path is not None else None
    return ManeuverLog(samples=tuple(samples),
                       truth=tuple(truth) if truth is not None else None,
                       maneuver_id=maneuver_id or sensor_path.stem)
