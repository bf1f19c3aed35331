"""Command-line entry point.

Subcommands wire configs, scenarios, logs, and reports into reproducible
end-to-end runs:

    simulate    scenario -> sensor log + ground truth CSVs
    calibrate   log + truth -> per-direction parameter estimates (JSON)
    filter      log -> navigation output CSV + innovation logs
    disturb     closed-form circle perturbation CSV
    evaluate    navigation output + truth -> trajectory-error report
    report      stored evaluation outputs -> comparison tables + charts

Every command writes a manifest (resolved config echo plus SHA-256 hashes
of inputs and outputs), so re-running with identical inputs reproduces
identical files. Exit codes: 0 success, 2 validation/config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import calibration as calib
from . import disturbance, evaluation, logio
from .config import RunConfig, load_config
from .ekf import read_output_csv, run_filter
from .errors import NumericalError, ValidationError
from .lateral import LateralModelKind
from .scenario import load_scenario, simulate_scenario
from .sensors import synthesize_sensors

MODEL_CHOICES = tuple(kind.value for kind in LateralModelKind)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, name: str, command: str, config: Optional[RunConfig],
                    inputs: Sequence[Path], outputs: Sequence[Path],
                    extra: Optional[dict] = None) -> Path:
    manifest = {
        "command": command,
        "config": config.resolved if config is not None else None,
        "inputs": {str(p): _sha256(p) for p in sorted(inputs)},
        "outputs": {p.name: _sha256(p) for p in sorted(outputs)},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / name
    with path.open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    if getattr(args, "out", None):
        config = config.with_out_dir(args.out)
    return config


def cmd_simulate(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out(args)
    scenario = load_scenario(args.scenario or config.scenario_source)
    truth = simulate_scenario(scenario, config.vehicle, config.tire, config.deviation,
                              lateral=config.lateral_params)
    log = synthesize_sensors(truth, config.vehicle, config.sensor_noise,
                             deviation=config.deviation,
                             maneuver_id=scenario.scenario_id)
    log_path = out / f"{scenario.scenario_id}_log.csv"
    truth_path = out / f"{scenario.scenario_id}_truth.csv"
    logio.write_log(log, log_path, truth_path)
    _write_manifest(out, f"{scenario.scenario_id}_manifest.json", "simulate", config,
                    inputs=[], outputs=[log_path, truth_path],
                    extra={"scenario": scenario.scenario_id,
                           "seed": config.sensor_noise.seed})
    print(f"simulate: wrote {log_path} ({len(log.samples)} samples)")
    return 0


def cmd_calibrate(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out(args)
    log = logio.read_log(args.log, args.truth)
    results = calib.calibrate_log(log, config.vehicle.wheelbase)
    report_path = out / "calibration.json"
    calib.write_report_json(report_path, results)
    outputs = [report_path]
    segments = calib.segment_by_direction(log)
    for variant in (calib.VARIANT_OMEGA_VY, calib.VARIANT_DELTA_BETA):
        samples = []
        for segment in segments:
            kept, _ = calib.gate_samples(log, segment, variant)
            samples.extend(kept)
        scatter = out / f"scatter_{variant.replace('-', '_')}.csv"
        calib.write_scatter_csv(scatter, samples)
        outputs.append(scatter)
    _write_manifest(out, "calibration_manifest.json", "calibrate", config,
                    inputs=[Path(args.log), Path(args.truth)], outputs=outputs)
    for variant, result in results.items():
        for name, est in (("forward", result.forward), ("reverse", result.reverse)):
            if est is not None:
                print(f"calibrate[{variant}] {name}: x_rho={est.x_rho:+.4f} m "
                      f"k_rho={est.k_rho:+.5f} (n={est.n})")
    return 0


def _filter_one(log_path: Path, truth_path: Optional[Path], config: RunConfig,
                kind: Optional[LateralModelKind], out: Path) -> List[Path]:
    log = logio.read_log(log_path, truth_path)
    output = run_filter(log, config.filter_config(kind))
    nav_path = out / f"{log_path.stem.replace('_log', '')}_nav.csv"
    output.write_csv(nav_path)
    output.write_innovation_csv(out, stem=nav_path.stem.replace("_nav", "_innovations"))
    produced = [nav_path]
    produced += sorted(out.glob(f"{nav_path.stem.replace('_nav', '_innovations')}_*.csv"))
    return produced


def cmd_filter(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out(args)
    kind = LateralModelKind(args.model) if args.model else None
    log_arg = Path(args.log)
    outputs: List[Path] = []
    inputs: List[Path] = []
    if log_arg.is_dir():
        pairs: List[Tuple[Path, Optional[Path]]] = []
        for log_path in sorted(log_arg.glob("*_log.csv")):
            truth_path = log_path.with_name(log_path.name.replace("_log.csv", "_truth.csv"))
            pairs.append((log_path, truth_path if truth_path.exists() else None))
        if not pairs:
            raise ValidationError(f"{log_arg}: no *_log.csv files found")
        with ThreadPoolExecutor() as pool:
            futures = [pool.submit(_filter_one, lp, tp, config, kind, out)
                       for lp, tp in pairs]
            for (lp, tp), fut in zip(pairs, futures):
                outputs.extend(fut.result())
                inputs.append(lp)
                if tp is not None:
                    inputs.append(tp)
    else:
        truth = Path(args.truth) if args.truth else None
        outputs = _filter_one(log_arg, truth, config, kind, out)
        inputs = [log_arg] + ([truth] if truth else [])
    _write_manifest(out, "filter_manifest.json", "filter", config,
                    inputs=inputs, outputs=outputs,
                    extra={"model": (kind or config.lateral_kind).value})
    print(f"filter: wrote {len(outputs)} file(s) to {out}")
    return 0


def cmd_disturb(args) -> int:
    out = _prepare_out(args)
    config = load_config(args.config) if args.config else None
    spec = disturbance.CirclePerturbationSpec(
        v_x=args.vx, omega_z=args.omega, dx=args.dx,
        turn_angle=math.radians(args.turn_deg))
    report = disturbance.analyze(spec, n_points=args.points)
    csv_path = out / "disturb.csv"
    disturbance.write_report_csv(csv_path, report)
    _write_manifest(out, "disturb_manifest.json", "disturb", config,
                    inputs=[], outputs=[csv_path],
                    extra={"e_max": report.e_max, "e_90": report.e_90})
    print(f"disturb: e_90={report.e_90:.4f} m e_max={report.e_max:.4f} m -> {csv_path}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out(args)
    estimate = read_output_csv(args.estimate)
    truth = logio.read_truth_csv(args.truth)
    maneuver = args.maneuver or Path(args.estimate).stem.replace("_nav", "")
    label = args.model or config.lateral_kind.value
    report = evaluation.trajectory_error(estimate, truth, maneuver_id=maneuver)
    stem = f"{maneuver}_{label.replace('-', '_')}"
    csv_path = out / f"{stem}_error.csv"
    json_path = out / f"{stem}_error.json"
    svg_path = out / f"{stem}_error.svg"
    evaluation.write_error_csv(csv_path, report)
    payload = {"maneuver": maneuver, "model": label, "summary": report.summary,
               "series_csv": csv_path.name,
               "reduction": {r: report.reduce(r) for r in evaluation.REDUCTIONS}}
    with json_path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    svg_path.write_text(evaluation.render_error_plot_svg(
        report.t, report.error, title=f"{maneuver} ({label})"))
    _write_manifest(out, f"{stem}_evaluate_manifest.json", "evaluate", config,
                    inputs=[Path(args.estimate), Path(args.truth)],
                    outputs=[csv_path, json_path, svg_path])
    summary = report.summary
    print(f"evaluate[{maneuver}/{label}]: p63={summary['p63']:.3f} "
          f"p95={summary['p95']:.3f} max={summary['max']:.3f} m")
    return 0


def _load_evaluations(paths: Sequence[Path]) -> List[dict]:
    entries = []
    for path in paths:
        with path.open() as fh:
            payload = json.load(fh)
        for key in ("maneuver", "model", "summary", "series_csv", "reduction"):
            if key not in payload:
                raise ValidationError(f"{path}: not an evaluation JSON (missing {key!r})")
        payload["_dir"] = path.parent
        entries.append(payload)
    if not entries:
        raise ValidationError("report: no evaluation inputs")
    return entries


def cmd_report(args) -> int:
    out = _prepare_out(args)
    paths: List[Path] = []
    for item in args.inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*_error.json")))
        else:
            paths.append(p)
    entries = _load_evaluations(paths)
    models = sorted({e["model"] for e in entries})
    maneuvers = sorted({e["maneuver"] for e in entries})
    table = {}
    for e in entries:
        table[(e["maneuver"], e["model"])] = e["reduction"][args.reduction]
    errors = np.array([[table.get((mv, md), float("nan")) for md in models]
                       for mv in maneuvers])
    comparison = evaluation.ModelComparison(
        maneuvers=tuple(maneuvers), labels=tuple(models), errors=errors,
        reduction=args.reduction)
    candidate = "omega-vy" if "omega-vy" in models else None
    baseline = "zero-slip" if "zero-slip" in models else None
    text = evaluation.render_comparison_table(
        comparison, candidate=candidate if baseline else None,
        baseline=baseline if candidate else None)

    pooled: Dict[str, List[float]] = {m: [] for m in models}
    for e in entries:
        series = np.loadtxt(e["_dir"] / e["series_csv"], delimiter=",", skiprows=1,
                            ndmin=2)
        pooled[e["model"]].extend(series[:, 1].tolist())
    stats = {m: evaluation.summarize(v) for m, v in pooled.items() if v}
    text += "\n" + evaluation.render_quantile_table(stats)

    report_txt = out / "report.txt"
    report_txt.write_text(text)
    svg = evaluation.render_bar_chart_svg(
        maneuvers, {m: errors[:, j].tolist() for j, m in enumerate(models)},
        ylabel=f"trajectory error ({args.reduction}) [m]")
    report_svg = out / "report_bars.svg"
    report_svg.write_text(svg)
    _write_manifest(out, "report_manifest.json", "report", None,
                    inputs=paths, outputs=[report_txt, report_svg],
                    extra={"reduction": args.reduction})
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parkloc",
        description="Low-speed parking localization toolkit: simulation, "
                    "filtering, calibration, and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override noise.seed")

    p = sub.add_parser("simulate", help="generate a synthetic maneuver log")
    add_common(p)
    p.add_argument("--scenario", default=None,
                   help="scenario TOML path or bundled scenario name")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="estimate lateral-model parameters from a log")
    add_common(p)
    p.add_argument("--log", required=True, help="sensor CSV")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("filter", help="run the strapdown EKF over a log (or directory)")
    add_common(p)
    p.add_argument("--log", required=True, help="sensor CSV or directory of *_log.csv")
    p.add_argument("--truth", default=None, help="ground-truth CSV (single-log mode)")
    p.add_argument("--model", choices=MODEL_CHOICES, default=None,
                   help="override the configured lateral model")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("disturb", help="closed-form circle perturbation analysis")
    p.add_argument("--config", default=None, help="TOML run configuration (optional)")
    p.add_argument("--out", default="out")
    p.add_argument("--dx", type=float, required=True, help="parameter error [m]")
    p.add_argument("--vx", type=float, default=1.0, help="circle speed [m/s]")
    p.add_argument("--omega", type=float, default=0.5, help="yaw rate [rad/s]")
    p.add_argument("--turn-deg", type=float, default=360.0, help="turn angle [deg]")
    p.add_argument("--points", type=int, default=361)
    p.set_defaults(func=cmd_disturb)

    p = sub.add_parser("evaluate", help="trajectory error of a filter output vs truth")
    add_common(p)
    p.add_argument("--estimate", required=True, help="filter output CSV")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    p.add_argument("--maneuver", default=None, help="maneuver label")
    p.add_argument("--model", default=None, help="model label")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render comparison tables/charts from evaluations")
    p.add_argument("--out", default="out")
    p.add_argument("--reduction", choices=evaluation.REDUCTIONS, default="max")
    p.add_argument("inputs", nargs="+",
                   help="evaluation JSON files or directories containing them")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
