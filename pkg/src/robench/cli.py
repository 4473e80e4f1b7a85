"""Command-line surface: synth | distort | detect | eval | stability | report.

Exit codes: 0 success, 2 usage/configuration errors, 3 data errors.
Diagnostics go to stderr with an "error:" prefix.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .distortions import KINDS, LadderConfig
from .detector import DetectorModel, build_model, detect
from .deteval import (
    GroundTruthFrame,
    evaluate,
    read_detections_csv,
    read_ground_truth_csv,
    write_curve_csv,
    write_detections_csv,
)
from .errors import DataError, FormatError
from .ladder import DEFAULT_SEED, build_all_ladders, ladder_stats, write_stats_csv
from .manifest import load_manifest
from .pipeline import eval_result_json, ground_truth_for, write_eval_json
from .quadrangle import (
    DEFAULT_LAMBDA,
    ChartConfig,
    quadrangle,
    rank_by_stability,
    render_chart,
    write_ranking_csv,
)
from .report import build_run_report, load_report, write_report
from .scene import SceneConfig, synth_scene
from .stability import DEFAULT_OMEGA, StabilityVector, order_ladder


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in [0,1]")
    return value


def _nonnegative(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{value} is negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robench",
        description="Benchmark detector robustness to video-quality degradation.",
    )
    parser.add_argument("--version", action="version", version=f"robench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("config", help="scene config JSON")
    p.add_argument("out_dir", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("distort", help="build distortion ladders from a reference")
    p.add_argument("ref_manifest", help="reference sequence manifest JSON")
    p.add_argument("out_dir", help="output directory")
    p.add_argument("--kinds", default="all", help="comma list of qp,res,wn,bv (default all)")
    p.add_argument("--config", help="ladder level-grid config JSON")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="noise seed base")
    p.add_argument("--jobs", type=int, default=1, help="frame-level worker threads")
    p.add_argument("--no-stats", action="store_true", help="skip the stats CSV")
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("detect", help="run the reference detector over a sequence")
    p.add_argument("manifest", help="sequence manifest JSON")
    p.add_argument("out_csv", help="detections CSV to write")
    p.add_argument("--model", help="detector model JSON")
    p.add_argument("--build-model", metavar="GT_CSV",
                   help="build the model from this sequence + ground truth")
    p.add_argument("--model-out", help="where to save a freshly built model")
    p.add_argument("--threshold", type=float, default=0.8, help="window score threshold")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("detections_csv")
    p.add_argument("gt_csv")
    p.add_argument("--manifest", help="sequence manifest (annotates output, scales res gt)")
    p.add_argument("--curve-out", help="write the threshold sweep as CSV")
    p.add_argument("--out", help="write the accuracy JSON here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stability", help="stability vector + quadrangle from eval results")
    p.add_argument("inputs", nargs="+",
                   help="a run directory or a list of eval-result JSON files")
    p.add_argument("--omega", type=_unit_interval, default=DEFAULT_OMEGA,
                   help="degradation-vs-monotonicity weight (default 0.8)")
    p.add_argument("--lambda", dest="lam", type=_nonnegative, default=DEFAULT_LAMBDA,
                   help="x-axis scale of the reference accuracy (default 5)")
    p.add_argument("--detector-id", default="detector")
    p.add_argument("--svg-out", help="quadrangle chart path (default report dir)")
    p.add_argument("--out", help="run-report path (default <run>/report/run_report.json)")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("report", help="rank several run reports and chart them together")
    p.add_argument("reports", nargs="+", help="run-report JSON files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--lambda", dest="lam", type=_nonnegative, default=None,
                   help="override the charts' x scale (default: first report's)")
    p.set_defaults(func=cmd_report)
    return parser


def cmd_synth(args) -> int:
    cfg = SceneConfig.from_json_file(args.config)
    manifest, gt = synth_scene(cfg, args.out_dir)
    print(f"wrote {len(manifest.frame_paths)} frames and {sum(len(g.boxes) for g in gt)} "
          f"ground-truth boxes under {args.out_dir}")
    return 0


def cmd_distort(args) -> int:
    ref = load_manifest(args.ref_manifest)
    if args.kinds == "all":
        kinds = KINDS
    else:
        kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
        unknown = set(kinds) - set(KINDS)
        if unknown:
            raise ValueError(f"unknown kinds: {sorted(unknown)}")
    config = LadderConfig()
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        known = {"qp_levels", "res_scales", "wn_sigmas", "bv_offsets"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown ladder config keys: {sorted(unknown)}")
        config = LadderConfig(**doc)
    ladders = build_all_ladders(
        ref, config, args.out_dir, kinds=kinds, seed_base=args.seed, jobs=args.jobs
    )
    total = sum(len(v) for v in ladders.values())
    if not args.no_stats:
        rows = ladder_stats(ref, ladders)
        write_stats_csv(rows, Path(args.out_dir) / "stats.csv")
    print(f"built {total} distorted versions under {args.out_dir}")
    return 0


def cmd_detect(args) -> int:
    manifest = load_manifest(args.manifest)
    frames = manifest.load_frames()
    if args.model:
        model = DetectorModel.load(args.model)
    elif args.build_model:
        gt = read_ground_truth_csv(args.build_model)
        model = build_model(frames, gt, score_threshold=args.threshold)
        if args.model_out:
            model.save(args.model_out)
    else:
        raise ValueError("pass --model MODEL.json or --build-model GT.csv")
    detections = detect(frames, model, skip_undersized=True)
    write_detections_csv(detections, args.out_csv)
    print(f"wrote {len(detections)} detections to {args.out_csv}")
    return 0


def cmd_eval(args) -> int:
    detections = read_detections_csv(args.detections_csv)
    gt_frames = read_ground_truth_csv(args.gt_csv)
    manifest = load_manifest(args.manifest) if args.manifest else None
    if manifest is not None:
        gt_frames = ground_truth_for(manifest, gt_frames)
        n_frames = len(manifest.frame_paths)
        gt_frames = _pad_gt_universe(gt_frames, n_frames)
    result = evaluate(detections, gt_frames)
    doc = eval_result_json(result, manifest, gt_frames)
    if args.curve_out:
        write_curve_csv(result.curve, args.curve_out)
    if args.out:
        write_eval_json(doc, args.out)
        print(f"accuracy {result.accuracy:.4f} (miss rate {result.mr:.4f}) -> {args.out}")
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _pad_gt_universe(gt_frames: list, n_frames: int) -> list:
    """Frames without labeled boxes still count toward FPPI."""
    have = {gt.frame_id for gt in gt_frames}
    padded = list(gt_frames)
    for frame_id in range(n_frames):
        if frame_id not in have:
            padded.append(GroundTruthFrame(frame_id=frame_id, boxes=()))
    return sorted(padded, key=lambda gt: gt.frame_id)


def _collect_eval_docs(inputs: list) -> list:
    paths = []
    if len(inputs) == 1 and Path(inputs[0]).is_dir():
        run_dir = Path(inputs[0])
        eval_dir = run_dir / "eval"
        if not eval_dir.is_dir():
            raise ValueError(f"{run_dir} has no eval/ directory")
        paths = sorted(eval_dir.glob("*.json"))
    else:
        paths = [Path(p) for p in inputs]
    if not paths:
        raise ValueError("no eval results found")
    docs = []
    for path in paths:
        try:
            docs.append((path, json.loads(path.read_text(encoding="utf-8"))))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return docs


def cmd_stability(args) -> int:
    docs = _collect_eval_docs(args.inputs)
    refs = [(p, d) for p, d in docs if d.get("role") == "reference"]
    if len(refs) != 1:
        raise DataError(f"need exactly one reference eval result, found {len(refs)}")
    ref_doc = refs[0][1]
    a_ref = float(ref_doc["accuracy"])
    entries = {kind: [] for kind in KINDS}
    for path, doc in docs:
        if doc.get("role") != "distorted":
            continue
        distortion = doc.get("distortion")
        if not distortion:
            raise DataError(f"{path}: distorted eval result without distortion info")
        entries[distortion["type"]].append((float(distortion["param"]), float(doc["accuracy"])))
    missing = [kind for kind in KINDS if not entries[kind]]
    if missing:
        raise DataError(f"no eval results for kinds: {missing}")
    ladders = {kind: order_ladder(kind, entries[kind], a_ref) for kind in KINDS}

    stats_rows = None
    if len(args.inputs) == 1 and Path(args.inputs[0]).is_dir():
        stats_csv = Path(args.inputs[0]) / "ladders" / "stats.csv"
        if stats_csv.exists():
            stats_rows = _read_stats_csv(stats_csv)

    report = build_run_report(
        detector_id=args.detector_id,
        reference_id=ref_doc.get("sequence_id") or "reference",
        ladders=ladders,
        omega=args.omega,
        lam=args.lam,
        stats_rows=stats_rows,
    )
    if args.out:
        report_path = Path(args.out)
    elif Path(args.inputs[0]).is_dir():
        report_path = Path(args.inputs[0]) / "report" / "run_report.json"
    else:
        report_path = Path("run_report.json")
    write_report(report, report_path)

    vector = StabilityVector(*(report["stability"][kind] for kind in KINDS))
    svg_path = Path(args.svg_out) if args.svg_out else report_path.parent / "quadrangle.svg"
    quad = quadrangle(args.detector_id, a_ref, vector, args.lam)
    render_chart([quad], ChartConfig(lam=args.lam), svg_path)
    print(f"stability {json.dumps(report['stability'])} -> {report_path}")
    return 0


def _read_stats_csv(path: Path) -> list:
    import csv as _csv

    rows = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        for row in _csv.DictReader(fh):
            rows.append(
                {
                    "kind": row["kind"],
                    "level": int(row["level"]),
                    "param": float(row["param"]),
                    "psnr_db": float(row["psnr_db"]),
                    "mean_luma": float(row["mean_luma"]),
                    "original_bytes": int(row["original_bytes"]),
                    "encoded_bytes": int(row["encoded_bytes"]),
                    "compression_ratio": float(row["compression_ratio"]),
                }
            )
    return rows


def cmd_report(args) -> int:
    reports = [load_report(p) for p in args.reports]
    ids = [r["detector_id"] for r in reports]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"conflicting detector_ids across reports: {dupes}")
    lam = args.lam if args.lam is not None else float(reports[0]["lambda"])
    out_dir = Path(args.out_dir)
    results = []
    quads = []
    for rep in reports:
        vector = StabilityVector(*(rep["stability"][kind] for kind in KINDS))
        results.append((rep["detector_id"], vector))
        quads.append(quadrangle(rep["detector_id"], float(rep["a_ref"]), vector, lam))
    rows = rank_by_stability(results)
    write_ranking_csv(rows, out_dir / "rankings.csv")
    render_chart(quads, ChartConfig(lam=lam), out_dir / "combined.svg")
    print(f"ranked {len(reports)} detectors -> {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (DataError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
