"""Command-line entry points: evaluate, synth-gen, heatmap, serve."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .config import ConfigError, Settings, load_settings
from .evaluation import (
    GroundTruthError,
    ablation_report,
    evaluate_sequence,
    grid_search,
    heatmap_accumulate,
    load_groundtruth,
    prepare_sequence,
    render_heatmap,
    write_heatmap_grid,
)
from .geometry import CameraModel, GeometryError, HomographySpec, homography_from_spec
from .pose import PoseFileError, parse_pose_file
from .proxemics import analyze_frame
from .synth import PersonModel, SceneConfig, generate, load_camera_sidecar, write_bundle


class CliError(Exception):
    pass


def _add_sequence_args(parser: argparse.ArgumentParser, need_gt: bool) -> None:
    parser.add_argument("--poses", required=True, help="pose sequence JSON file")
    parser.add_argument(
        "--gt",
        required=need_gt,
        help="groundtruth CSV (frame_id,person_a,person_b,distance_m)",
    )
    parser.add_argument(
        "--image-size",
        nargs=2,
        type=int,
        metavar=("W", "H"),
        help="image dimensions in pixels (or pass --camera)",
    )
    parser.add_argument(
        "--camera", help="camera sidecar JSON; supplies the image size"
    )
    parser.add_argument("--config", help="key-value settings file")


def _resolve_image_size(args) -> tuple[int, int]:
    if args.image_size:
        return tuple(args.image_size)
    if args.camera:
        return load_camera_sidecar(args.camera).image_size
    raise CliError("either --image-size or --camera is required")


def _resolve_settings(args) -> Settings:
    return load_settings(args.config) if args.config else Settings()


def _write_report(report: dict, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    text_path = out_dir / "report.txt"
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    with open(text_path, "w") as fh:
        fh.write(format_report_text(report))
    return json_path, text_path


def format_report_text(report: dict) -> str:
    lines = []
    params = report["params"]
    lines.append("sequence: %s" % report["sequence"]["poses"])
    lines.append(
        "part=%s  radius_m=%s  threshold_m=%s"
        % (params["part"], params["radius_m"], params["threshold_m"])
    )
    metrics = report.get("metrics")
    if metrics:
        lines.append(
            "rho_h=%.4f rho_v=%.4f  P=%.4f R=%.4f F1=%.4f  (TP=%d FP=%d FN=%d)"
            % (
                params["rho_h"],
                params["rho_v"],
                metrics["precision"],
                metrics["recall"],
                metrics["f1"],
                metrics["tp"],
                metrics["fp"],
                metrics["fn"],
            )
        )
    grid = report.get("grid_search")
    if grid:
        lines.append("")
        lines.append(
            "grid search best: rho_h=%.1f rho_v=%.1f F1=%.4f"
            % (grid["rho_h"], grid["rho_v"], grid["f1"])
        )
        values = grid["values"]
        header = "rho_h\\rho_v " + " ".join("%6.1f" % v for v in values)
        lines.append(header)
        for rh, row in zip(values, grid["f1_grid"]):
            lines.append("%11.1f " % rh + " ".join("%6.3f" % f1 for f1 in row))
    ablation = report.get("ablation")
    if ablation:
        lines.append("")
        lines.append("%-8s %10s %10s %10s" % ("part", "precision", "recall", "f1"))
        for part, m in ablation.items():
            lines.append(
                "%-8s %10.4f %10.4f %10.4f" % (part, m["precision"], m["recall"], m["f1"])
            )
    return "\n".join(lines) + "\n"


def cmd_evaluate(args) -> int:
    settings = _resolve_settings(args)
    image_size = _resolve_image_size(args)
    frames = parse_pose_file(args.poses)
    groundtruth = load_groundtruth(args.gt)
    prepared = prepare_sequence(frames, groundtruth, image_size, settings.c_min)
    ref = settings.reference(args.part)

    report: dict = {
        "sequence": {
            "poses": str(args.poses),
            "groundtruth": str(args.gt),
            "n_frames": prepared.n_frames,
            "n_detections": prepared.n_detections,
            "n_gt_pairs_matched": prepared.n_pairs,
        },
        "params": {
            "rho_h": args.rho_h,
            "rho_v": args.rho_v,
            "part": args.part,
            "radius_m": settings.radius_m,
            "threshold_m": settings.threshold_m,
            "margin_m": args.margin_m,
        },
    }

    if args.grid_search:
        result = grid_search(
            prepared,
            ref,
            radius_m=settings.radius_m,
            threshold_m=settings.threshold_m,
            margin_m=args.margin_m,
            step=settings.grid_step,
        )
        report["params"]["rho_h"] = result.rho_h
        report["params"]["rho_v"] = result.rho_v
        report["grid_search"] = {
            "rho_h": result.rho_h,
            "rho_v": result.rho_v,
            "f1": result.metrics.f1,
            "values": result.values,
            "f1_grid": result.f1_table(),
        }
        spec = HomographySpec(
            rho_h=result.rho_h, rho_v=result.rho_v, image_size=image_size
        )
    else:
        if args.rho_h is None or args.rho_v is None:
            raise CliError("pass --rho-h and --rho-v, or --grid-search")
        spec = HomographySpec(rho_h=args.rho_h, rho_v=args.rho_v, image_size=image_size)

    evaluation = evaluate_sequence(
        prepared,
        spec,
        ref,
        radius_m=settings.radius_m,
        threshold_m=settings.threshold_m,
        margin_m=args.margin_m,
    )
    report["metrics"] = {
        "precision": evaluation.metrics.precision,
        "recall": evaluation.metrics.recall,
        "f1": evaluation.metrics.f1,
        "tp": evaluation.tp,
        "fp": evaluation.fp,
        "fn": evaluation.fn,
        "n_pairs_evaluated": evaluation.n_pairs_evaluated,
    }

    if args.ablation:
        parts = [settings.reference(p.strip()) for p in args.ablation.split(",")]
        table = ablation_report(
            prepared,
            parts,
            spec,
            radius_m=settings.radius_m,
            threshold_m=settings.threshold_m,
            margin_m=args.margin_m,
        )
        report["ablation"] = {
            part: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
            for part, m in table.items()
        }

    json_path, _ = _write_report(report, Path(args.out_dir))
    print(format_report_text(report), end="")
    print(f"report written to {json_path}")
    return 0


def cmd_synth_gen(args) -> int:
    camera = CameraModel(
        focal_px=args.focal_px,
        principal_point=(args.image_size[0] / 2.0, args.image_size[1] / 2.0),
        height_m=args.height_m,
        tilt_rad=math.radians(args.tilt_deg),
        image_size=tuple(args.image_size),
    )
    config = SceneConfig(
        camera=camera,
        n_people=args.n_people,
        area=tuple(args.area),
        person=PersonModel(height_m=args.person_height),
        noise_sigma_px=args.noise_sigma,
        dropout_p=args.dropout,
        seed=args.seed,
    )
    bundle = generate(config, args.n_frames)
    paths = write_bundle(bundle, args.out_dir)
    print(
        "wrote %d frames, %d people each, exact ratios (%.4f, %.4f)"
        % (args.n_frames, args.n_people, bundle.rho_h, bundle.rho_v)
    )
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0


def cmd_heatmap(args) -> int:
    settings = _resolve_settings(args)
    image_size = _resolve_image_size(args)
    frames = parse_pose_file(args.poses)
    spec = HomographySpec(rho_h=args.rho_h, rho_v=args.rho_v, image_size=image_size)
    homography = homography_from_spec(spec)
    ref = settings.reference(args.part)
    records = []
    for frame in frames:
        analysis = analyze_frame(
            frame,
            homography,
            ref,
            radius_m=settings.radius_m,
            c_min=settings.c_min,
            image_size=image_size,
        )
        records.extend(analysis.records)
    result = heatmap_accumulate(
        records,
        image_size,
        cell_px=settings.heatmap_cell_px,
        sigma_cells=settings.heatmap_sigma_cells,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    background = None
    if args.background:
        from PIL import Image

        background = Image.open(args.background)
    image = render_heatmap(result, background=background)
    png_path = out_dir / "heatmap.png"
    csv_path = out_dir / "heatmap_grid.csv"
    image.save(png_path)
    write_heatmap_grid(result, csv_path)
    print(f"{result.n_events} violating pairs accumulated")
    print(f"  heatmap: {png_path}")
    print(f"  grid: {csv_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_session

    settings = _resolve_settings(args)
    image_size = _resolve_image_size(args)
    session = load_session(
        args.poses,
        image_size,
        groundtruth_path=args.gt,
        frames_dir=args.frames,
        settings=settings,
    )
    app = create_app(session, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safedist",
        description="Ground-plane distancing analysis from single-camera pose detections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score a sequence against groundtruth")
    _add_sequence_args(p_eval, need_gt=True)
    p_eval.add_argument("--rho-h", type=float, help="horizontal trapezoid ratio")
    p_eval.add_argument("--rho-v", type=float, help="vertical trapezoid ratio")
    p_eval.add_argument(
        "--grid-search", action="store_true", help="search the full ratio grid"
    )
    p_eval.add_argument("--part", default="torso", help="metric reference part")
    p_eval.add_argument(
        "--ablation", help="comma-separated parts to compare at the chosen ratios"
    )
    p_eval.add_argument(
        "--margin-m",
        type=float,
        default=0.0,
        help="exclude groundtruth pairs within this margin of the threshold",
    )
    p_eval.add_argument("--out-dir", default="reports", help="report output directory")
    p_eval.set_defaults(func=cmd_evaluate)

    p_synth = sub.add_parser("synth-gen", help="generate a synthetic dataset bundle")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--n-frames", type=int, default=500)
    p_synth.add_argument("--n-people", type=int, default=8)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--focal-px", type=float, default=1100.0)
    p_synth.add_argument("--tilt-deg", type=float, default=15.0)
    p_synth.add_argument("--height-m", type=float, default=8.0)
    p_synth.add_argument("--image-size", nargs=2, type=int, default=[640, 480])
    p_synth.add_argument(
        "--area",
        nargs=4,
        type=float,
        default=[-4.5, 4.5, -4.0, 6.0],
        metavar=("X_MIN", "X_MAX", "Y_MIN", "Y_MAX"),
        help="ground placement bounds in meters",
    )
    p_synth.add_argument("--person-height", type=float, default=1.70)
    p_synth.add_argument("--noise-sigma", type=float, default=0.0)
    p_synth.add_argument("--dropout", type=float, default=0.0)
    p_synth.set_defaults(func=cmd_synth_gen)

    p_heat = sub.add_parser("heatmap", help="accumulate a violation heatmap")
    _add_sequence_args(p_heat, need_gt=False)
    p_heat.add_argument("--rho-h", type=float, required=True)
    p_heat.add_argument("--rho-v", type=float, required=True)
    p_heat.add_argument("--part", default="torso")
    p_heat.add_argument("--background", help="frame image to composite the heat over")
    p_heat.add_argument("--out-dir", default="heatmap")
    p_heat.set_defaults(func=cmd_heatmap)

    p_serve = sub.add_parser("serve", help="run the interactive tuning service")
    _add_sequence_args(p_serve, need_gt=False)
    p_serve.add_argument("--frames", help="directory of frame images named by frame id")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.add_argument("--ui-dir", help="directory with the built tuner frontend")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        CliError,
        ConfigError,
        GeometryError,
        GroundTruthError,
        PoseFileError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
