"""Trajectory-error metrics and model-comparison reports.

The error measure is the per-sample planar Euclidean distance between the
estimated and reference positions after aligning the start poses (dead
reckoning is evaluated relative to where it began). Summaries use
nearest-rank percentiles, i.e. "63% of samples have an error less than or
equal to the reported value".

Report rendering (text tables and SVG charts) is deliberately free of
external plotting dependencies and byte-deterministic for fixed inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import quat
from .core import GroundTruthSample, ManeuverLog
from .ekf import FilterConfig, FilterOutput, run_filter
from .errors import ValidationError

REDUCTIONS = ("max", "final", "mean")


@dataclass(frozen=True)
class TrajectoryErrorReport:
    """Per-sample planar error series with nearest-rank summaries."""

    t: np.ndarray
    error: np.ndarray
    maneuver_id: str = ""

    @property
    def summary(self) -> Dict[str, float]:
        return summarize(self.error)

    def reduce(self, reduction: str = "max") -> float:
        if reduction == "max":
            return float(np.max(self.error))
        if reduction == "final":
            return float(self.error[-1])
        if reduction == "mean":
            return float(np.mean(self.error))
        raise ValidationError(f"unknown reduction {reduction!r}; use one of {REDUCTIONS}")


def _align_to_reference(est_xy: np.ndarray, est_psi0: float,
                        ref_xy0: np.ndarray, ref_psi0: float) -> np.ndarray:
    """Rigidly move the estimate so its start pose matches the reference's."""
    dpsi = ref_psi0 - est_psi0
    c, s = math.cos(dpsi), math.sin(dpsi)
    rot = np.array([[c, -s], [s, c]])
    return (est_xy - est_xy[0]) @ rot.T + ref_xy0


def trajectory_error(estimate: FilterOutput,
                     reference: Sequence[GroundTruthSample],
                     maneuver_id: str = "",
                     align_start: bool = False) -> TrajectoryErrorReport:
    """Planar error of a filter trajectory against ground truth.

    The reference is linearly interpolated to the estimate timestamps;
    both tracks must overlap in time. Estimates are expected to start at
    the reference start pose (run_filter initializes from truth); pass
    ``align_start=True`` to rigidly move an externally produced estimate
    onto the reference start pose first.
    """
    reference = tuple(reference)
    if not reference:
        raise ValidationError("trajectory_error: empty reference")
    t_ref = np.array([s.t for s in reference])
    if estimate.t[-1] < t_ref[0] or estimate.t[0] > t_ref[-1]:
        raise ValidationError("trajectory_error: no temporal overlap")
    mask = (estimate.t >= t_ref[0]) & (estimate.t <= t_ref[-1])
    t_eval = estimate.t[mask]
    ref_x = np.interp(t_eval, t_ref, np.array([s.x for s in reference]))
    ref_y = np.interp(t_eval, t_ref, np.array([s.y for s in reference]))

    est_xy = estimate.p[mask][:, :2]
    if align_start:
        ref_psi0 = float(np.interp(t_eval[0], t_ref,
                                   np.array([s.psi for s in reference])))
        est_psi0 = quat.yaw(estimate.q[mask][0])
        est_xy = _align_to_reference(est_xy, est_psi0,
                                     np.array([ref_x[0], ref_y[0]]), ref_psi0)
    err = np.hypot(est_xy[:, 0] - ref_x, est_xy[:, 1] - ref_y)
    return TrajectoryErrorReport(t=t_eval, error=err, maneuver_id=maneuver_id)


def summarize(errors: Union[np.ndarray, Sequence[float]]) -> Dict[str, float]:
    """Nearest-rank p63/p95 plus the maximum of an error sample set."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValidationError("summarize: empty error set")
    ordered = np.sort(errors)
    n = ordered.size

    def nearest_rank(p: float) -> float:
        rank = math.ceil(p * n)
        return float(ordered[max(rank, 1) - 1])

    return {"p63": nearest_rank(0.63), "p95": nearest_rank(0.95),
            "max": float(ordered[-1])}


@dataclass(frozen=True)
class ModelComparison:
    """Per-maneuver error scalars for several filter configurations."""

    maneuvers: Tuple[str, ...]
    labels: Tuple[str, ...]
    errors: np.ndarray          # shape (n_maneuvers, n_labels)
    reduction: str = "max"

    def column(self, label: str) -> np.ndarray:
        try:
            j = self.labels.index(label)
        except ValueError:
            raise ValidationError(f"no model labelled {label!r}") from None
        return self.errors[:, j]

    def improved(self, candidate: str, baseline: str) -> List[bool]:
        cand = self.column(candidate)
        base = self.column(baseline)
        return [bool(c < b) for c, b in zip(cand, base)]

    def to_json_dict(self) -> dict:
        return {"reduction": self.reduction,
                "labels": list(self.labels),
                "maneuvers": list(self.maneuvers),
                "errors": [[float(e) for e in row] for row in self.errors]}


def compare_models(logs: Sequence[ManeuverLog],
                   configs: Mapping[str, FilterConfig],
                   reduction: str = "max") -> ModelComparison:
    """Run every filter configuration over every log and tabulate errors."""
    if reduction not in REDUCTIONS:
        raise ValidationError(f"unknown reduction {reduction!r}; use one of {REDUCTIONS}")
    labels = tuple(configs.keys())
    maneuvers = []
    rows = []
    for log in logs:
        if not log.truth:
            raise ValidationError(f"compare_models: log {log.maneuver_id!r} has no truth")
        maneuvers.append(log.maneuver_id)
        row = []
        for label in labels:
            output = run_filter(log, configs[label])
            report = trajectory_error(output, log.truth, maneuver_id=log.maneuver_id)
            row.append(report.reduce(reduction))
        rows.append(row)
    return ModelComparison(maneuvers=tuple(maneuvers), labels=labels,
                           errors=np.array(rows), reduction=reduction)


# ---------------------------------------------------------------------------
# report rendering


def render_comparison_table(comparison: ModelComparison,
                            candidate: Optional[str] = None,
                            baseline: Optional[str] = None) -> str:
    """Fixed-width text table; optionally marks candidate-vs-baseline wins."""
    labels = comparison.labels
    mark = candidate is not None and baseline is not None
    header = ["maneuver"] + [f"{label} [m]" for label in labels]
    if mark:
        header.append("improved")
    rows = [header]
    improved = comparison.improved(candidate, baseline) if mark else None
    for i, maneuver in enumerate(comparison.maneuvers):
        row = [maneuver] + [f"{comparison.errors[i, j]:.3f}" for j in range(len(labels))]
        if mark:
            row.append("yes" if improved[i] else "no")
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n"


def render_quantile_table(stats: Mapping[str, Mapping[str, float]]) -> str:
    """Percentile summary table, one row per method.

    ``stats`` maps method label to a {p63, p95, max} dict.
    """
    header = ["method", "63rd percentile", "95th percentile", "maximum"]
    rows = [header]
    for label, summary in stats.items():
        rows.append([label, f"{summary['p63']:.2f} m", f"{summary['p95']:.2f} m",
                     f"{summary['max']:.2f} m"])
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n"


_SVG_COLORS = ("#3465a4", "#888a85", "#cc0000", "#4e9a06", "#f57900")


def render_bar_chart_svg(maneuvers: Sequence[str],
                         series: Mapping[str, Sequence[float]],
                         ylabel: str = "trajectory error [m]",
                         width: int = 640, height: int = 320) -> str:
    """Grouped bar chart as a standalone SVG string (no plotting deps)."""
    labels = list(series.keys())
    if not labels or not maneuvers:
        raise ValidationError("render_bar_chart_svg: empty input")
    values = np.array([list(series[label]) for label in labels], dtype=float)
    if values.shape[1] != len(maneuvers):
        raise ValidationError("render_bar_chart_svg: series lengths mismatch")
    top = float(values.max()) or 1.0
    margin_l, margin_b, margin_t = 56, 36, 30
    plot_w = width - margin_l - 12
    plot_h = height - margin_b - margin_t
    group_w = plot_w / len(maneuvers)
    bar_w = 0.8 * group_w / len(labels)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="14" y="{margin_t + plot_h / 2:.1f}" font-size="12" '
             f'transform="rotate(-90 14 {margin_t + plot_h / 2:.1f})" '
             f'text-anchor="middle">{ylabel}</text>']
    # y axis with four gridlines
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = margin_t + plot_h * (1.0 - frac)
        parts.append(f'<line x1="{margin_l}" y1="{y:.1f}" x2="{width - 12}" y2="{y:.1f}" '
                     f'stroke="#dddddd"/>')
        parts.append(f'<text x="{margin_l - 6}" y="{y + 4:.1f}" font-size="10" '
                     f'text-anchor="end">{frac * top:.2f}</text>')
    for i, maneuver in enumerate(maneuvers):
        x_group = margin_l + i * group_w + 0.1 * group_w
        for j, label in enumerate(labels):
            value = values[j, i]
            bar_h = plot_h * value / top
            x = x_group + j * bar_w
            y = margin_t + plot_h - bar_h
            color = _SVG_COLORS[j % len(_SVG_COLORS)]
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                         f'height="{bar_h:.1f}" fill="{color}"/>')
        parts.append(f'<text x="{margin_l + (i + 0.5) * group_w:.1f}" '
                     f'y="{height - margin_b + 14}" font-size="10" '
                     f'text-anchor="middle">{maneuver}</text>')
    for j, label in enumerate(labels):
        color = _SVG_COLORS[j % len(_SVG_COLORS)]
        x = margin_l + 8 + j * 150
        parts.append(f'<rect x="{x}" y="8" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{x + 14}" y="17" font-size="11">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_error_plot_svg(t: Sequence[float], error: Sequence[float],
                          title: str = "trajectory error",
                          width: int = 640, height: int = 240) -> str:
    """Error-over-time polyline as a standalone SVG string."""
    t = np.asarray(t, dtype=float)
    error = np.asarray(error, dtype=float)
    if t.size == 0 or t.size != error.size:
        raise ValidationError("render_error_plot_svg: bad series")
    top = float(error.max()) or 1.0
    span = float(t[-1] - t[0]) or 1.0
    margin_l, margin_b, margin_t = 56, 30, 24
    plot_w = width - margin_l - 12
    plot_h = height - margin_b - margin_t
    points = " ".join(
        f"{margin_l + plot_w * (ti - t[0]) / span:.1f},"
        f"{margin_t + plot_h * (1.0 - ei / top):.1f}"
        for ti, ei in zip(t, error))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
            f'<text x="{width / 2:.0f}" y="16" font-size="12" text-anchor="middle">'
            f'{title}</text>\n'
            f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{width - 12}" '
            f'y2="{margin_t + plot_h}" stroke="#000000"/>\n'
            f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
            f'y2="{margin_t + plot_h}" stroke="#000000"/>\n'
            f'<text x="{margin_l - 6}" y="{margin_t + 4}" font-size="10" '
            f'text-anchor="end">{top:.3f}</text>\n'
            f'<text x="{margin_l - 6}" y="{margin_t + plot_h + 4}" font-size="10" '
            f'text-anchor="end">0</text>\n'
            f'<polyline fill="none" stroke="#3465a4" stroke-width="1.5" '
            f'points="{points}"/>\n</svg>\n')


def write_error_report(path, report: TrajectoryErrorReport) -> None:
    """JSON with the summary plus a sibling CSV-ready error series."""
    payload = {"maneuver": report.maneuver_id, "summary": report.summary,
               "n": int(report.error.size)}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_error_csv(path, report: TrajectoryErrorReport) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,error\n")
        for ti, ei in zip(report.t, report.error):
            fh.write(f"{ti:.12g},{ei:.12g}\n")
