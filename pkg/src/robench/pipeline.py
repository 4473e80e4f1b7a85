"""End-to-end orchestration: scene -> ladders -> detections -> stability.

This is the library face of the CLI; tests and the command line drive the
same functions. A run directory is laid out as:

    scene/       frames, manifest.json, gt.csv
    ladders/     52 distorted sequences + manifests + stats.csv
    model.json   the reference detector's template model
    detections/  one CSV per sequence
    eval/        one accuracy JSON per sequence
    report/      run_report.json + quadrangle.svg
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .deteval import (
    AccuracyResult,
    BoundingBox,
    GroundTruthFrame,
    evaluate,
    height_stats,
    write_detections_csv,
)
from .detector import DetectorModel, build_model, detect
from .distortions import KINDS, LadderConfig
from .ladder import DEFAULT_SEED, build_all_ladders, ladder_stats, write_stats_csv
from .manifest import SequenceManifest
from .quadrangle import DEFAULT_LAMBDA, ChartConfig, quadrangle, render_chart
from .report import build_run_report, write_report
from .scene import SceneConfig, synth_scene
from .stability import DEFAULT_OMEGA, StabilityVector, order_ladder


def scale_ground_truth(gt_frames: list, scale: float) -> list:
    """Ground truth in the coordinate frame of a downscaled sequence."""
    return [
        GroundTruthFrame(
            frame_id=gt.frame_id,
            boxes=tuple(
                BoundingBox(b.x * scale, b.y * scale, b.w * scale, b.h * scale)
                for b in gt.boxes
            ),
        )
        for gt in gt_frames
    ]


def ground_truth_for(manifest: SequenceManifest, reference_gt: list) -> list:
    """The ground truth that applies to one (possibly distorted) sequence."""
    if manifest.distortion is not None and manifest.distortion.kind == "res":
        return scale_ground_truth(reference_gt, manifest.distortion.param)
    return reference_gt


def evaluate_sequence(
    manifest: SequenceManifest, gt_frames: list, model: DetectorModel
) -> tuple:
    """Detect on all frames of a sequence and score the result.

    Returns (AccuracyResult, detections). Frames smaller than the model
    window contribute no detections instead of failing, so deep resolution
    levels evaluate to zero accuracy rather than erroring out.
    """
    frames = manifest.load_frames()
    detections = detect(frames, model, skip_undersized=True)
    return evaluate(detections, gt_frames), detections


def eval_result_json(
    result: AccuracyResult,
    manifest: SequenceManifest | None = None,
    gt_frames: list | None = None,
) -> dict:
    doc = {
        "schema": 1,
        "sequence_id": manifest.sequence_id if manifest else None,
        "role": manifest.role if manifest else None,
        "parent_id": manifest.parent_id if manifest else None,
        "distortion": (
            manifest.distortion.to_json() if manifest and manifest.distortion else None
        ),
        "n_frames": result.curve.n_frames,
        "n_gt": result.curve.n_gt,
        "mr": result.mr,
        "accuracy": result.accuracy,
        "curve": [
            {
                "threshold": "inf" if point.threshold == float("inf") else point.threshold,
                "fppi": point.fppi,
                "miss_rate": point.miss_rate,
                "tp": point.tp,
                "fp": point.fp,
                "fn": point.fn,
            }
            for point in result.curve.points
        ],
    }
    if gt_frames is not None:
        hs = height_stats(gt_frames)
        doc["height_stats"] = {"mu_h": hs.mu_h, "sigma_h": hs.sigma_h, "h_vc": hs.h_vc}
    return doc


def write_eval_json(doc: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass
class RunPaths:
    root: Path

    @property
    def scene_dir(self) -> Path:
        return self.root / "scene"

    @property
    def ladders_dir(self) -> Path:
        return self.root / "ladders"

    @property
    def model_path(self) -> Path:
        return self.root / "model.json"

    @property
    def detections_dir(self) -> Path:
        return self.root / "detections"

    @property
    def eval_dir(self) -> Path:
        return self.root / "eval"

    @property
    def report_path(self) -> Path:
        return self.root / "report" / "run_report.json"

    @property
    def chart_path(self) -> Path:
        return self.root / "report" / "quadrangle.svg"


def run_benchmark(
    scene_cfg: SceneConfig,
    out_dir,
    ladder_cfg: LadderConfig | None = None,
    omega: float = DEFAULT_OMEGA,
    lam: float = DEFAULT_LAMBDA,
    seed: int = DEFAULT_SEED,
    detector_id: str = "hog-template",
    score_threshold: float = 0.8,
    jobs: int = 1,
    created_utc: str | None = None,
) -> RunPaths:
    """Full robustness run against the built-in reference detector."""
    if ladder_cfg is None:
        ladder_cfg = LadderConfig()
    paths = RunPaths(root=Path(out_dir))
    ref, gt_frames = synth_scene(scene_cfg, paths.scene_dir)
    ladders = build_all_ladders(ref, ladder_cfg, paths.ladders_dir, seed_base=seed, jobs=jobs)
    stats_rows = ladder_stats(ref, ladders)
    write_stats_csv(stats_rows, paths.ladders_dir / "stats.csv")

    frames = ref.load_frames()
    model = build_model(frames, gt_frames, score_threshold=score_threshold)
    model.save(paths.model_path)

    sequences = [ref] + [m for kind in KINDS for m in ladders[kind]]
    accuracies = {}
    for manifest in sequences:
        seq_gt = ground_truth_for(manifest, gt_frames)
        result, detections = evaluate_sequence(manifest, seq_gt, model)
        write_detections_csv(detections, paths.detections_dir / f"{manifest.sequence_id}.csv")
        write_eval_json(
            eval_result_json(result, manifest, seq_gt),
            paths.eval_dir / f"{manifest.sequence_id}.json",
        )
        accuracies[manifest.sequence_id] = result.accuracy

    a_ref = accuracies[ref.sequence_id]
    ladder_accs = {}
    for kind in KINDS:
        entries = [
            (m.distortion.param, accuracies[m.sequence_id]) for m in ladders[kind]
        ]
        ladder_accs[kind] = order_ladder(kind, entries, a_ref)

    stats_dicts = [
        {
            "kind": row.kind,
            "level": row.level,
            "param": row.param,
            "psnr_db": row.stats.psnr_db,
            "mean_luma": row.stats.mean_luma,
            "original_bytes": row.stats.original_bytes,
            "encoded_bytes": row.stats.encoded_bytes,
            "compression_ratio": row.stats.compression_ratio,
        }
        for row in stats_rows
    ]
    report = build_run_report(
        detector_id=detector_id,
        reference_id=ref.sequence_id,
        ladders=ladder_accs,
        omega=omega,
        lam=lam,
        stats_rows=stats_dicts,
        created_utc=created_utc,
    )
    write_report(report, paths.report_path)

    vector = StabilityVector(
        s_qp=report["stability"]["qp"],
        s_res=report["stability"]["res"],
        s_wn=report["stability"]["wn"],
        s_bv=report["stability"]["bv"],
    )
    quad = quadrangle(detector_id, a_ref, vector, lam)
    render_chart([quad], ChartConfig(lam=lam), paths.chart_path)
    return paths
