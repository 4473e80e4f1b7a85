"""Detection evaluation: greedy box matching, miss-rate/FPPI sweeps and the
log-average miss rate that the accuracy score is built on.

Matching follows the usual benchmark convention: detections are processed
in descending score order and each grabs the still-unmatched ground truth
with the highest overlap, provided the overlap strictly exceeds the
threshold. A detection set restricted to scores >= t therefore matches
exactly like a prefix of the full sweep, which lets the curve be assembled
from a single matching pass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left corner plus size, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box needs positive size, got {self.w}x{self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    frame_id: int
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"detection score must be finite, got {self.score}")


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_id: int
    boxes: tuple

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the boxes are disjoint."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass
class MatchResult:
    """Outcome of matching one frame: index pairs refer to the input lists."""

    pairs: list  # (detection_index, gt_index), detection processed order
    fp_indices: list
    fn_indices: list

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.fp_indices)

    @property
    def fn(self) -> int:
        return len(self.fn_indices)


def match_frame(dts: list, gts: list, thresh: float = 0.5) -> MatchResult:
    """Greedily match one frame's detections against its ground truths.

    Detections are visited in descending score order (ties keep input
    order); each takes the unmatched ground truth with the highest IoU if
    that IoU strictly exceeds ``thresh``.
    """
    order = sorted(range(len(dts)), key=lambda i: (-dts[i].score, i))
    gt_taken = [False] * len(gts)
    pairs = []
    fp_indices = []
    for di in order:
        best_iou = 0.0
        best_gt = -1
        for gi, gt_box in enumerate(gts):
            if gt_taken[gi]:
                continue
            overlap = iou(dts[di].box, gt_box)
            if overlap > best_iou:
                best_iou = overlap
                best_gt = gi
        if best_gt >= 0 and best_iou > thresh:
            gt_taken[best_gt] = True
            pairs.append((di, best_gt))
        else:
            fp_indices.append(di)
    fn_indices = [gi for gi, taken in enumerate(gt_taken) if not taken]
    return MatchResult(pairs=pairs, fp_indices=fp_indices, fn_indices=fn_indices)


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    fppi: float
    miss_rate: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class MrFppiCurve:
    """Threshold sweep, ordered by descending threshold, starting at the
    implicit (fppi 0, miss 1) point at threshold +inf."""

    points: tuple
    n_frames: int
    n_gt: int

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))


def mr_fppi_curve(dts: list, gt_frames: list) -> MrFppiCurve:
    """Sweep the score threshold over all distinct detection scores.

    ``gt_frames`` defines the frame universe (frames with no boxes are
    legal entries); every detection must sit on one of those frames.
    """
    if not gt_frames:
        raise DataError("no frames to evaluate")
    by_frame = {}
    for gt in gt_frames:
        if gt.frame_id in by_frame:
            raise DataError(f"duplicate ground-truth frame_id {gt.frame_id}")
        by_frame[gt.frame_id] = []
    n_gt = sum(len(gt.boxes) for gt in gt_frames)
    if n_gt == 0:
        raise DataError("ground truth contains zero boxes; accuracy is undefined")
    for det in dts:
        if det.frame_id not in by_frame:
            raise DataError(f"detection on unknown frame_id {det.frame_id}")
        by_frame[det.frame_id].append(det)

    # One full greedy match per frame; thresholded matchings are prefixes.
    gt_boxes = {gt.frame_id: list(gt.boxes) for gt in gt_frames}
    scores = []
    matched = []
    for frame_id, frame_dts in by_frame.items():
        result = match_frame(frame_dts, gt_boxes[frame_id])
        matched_dets = {di for di, _ in result.pairs}
        for di, det in enumerate(frame_dts):
            scores.append(det.score)
            matched.append(di in matched_dets)

    n_frames = len(gt_frames)
    points = [CurvePoint(float("inf"), 0.0, 1.0, 0, 0, n_gt)]
    if scores:
        scores_arr = np.asarray(scores, dtype=np.float64)
        matched_arr = np.asarray(matched, dtype=bool)
        order = np.argsort(-scores_arr, kind="stable")
        scores_arr = scores_arr[order]
        matched_arr = matched_arr[order]
        cum_tp = np.cumsum(matched_arr)
        cum_fp = np.cumsum(~matched_arr)
        # Last position of each distinct score is the point where every
        # detection with that score has been admitted.
        boundaries = np.nonzero(np.diff(scores_arr, append=-np.inf))[0]
        for idx in boundaries:
            tp = int(cum_tp[idx])
            fp = int(cum_fp[idx])
            points.append(
                CurvePoint(
                    threshold=float(scores_arr[idx]),
                    fppi=fp / n_frames,
                    miss_rate=(n_gt - tp) / n_gt,
                    tp=tp,
                    fp=fp,
                    fn=n_gt - tp,
                )
            )
    return MrFppiCurve(points=tuple(points), n_frames=n_frames, n_gt=n_gt)


# Nine reference FPPI rates, evenly spaced in log scale over [1e-2, 1].
FPPI_SAMPLES = tuple(10.0 ** (-2.0 + k / 4.0) for k in range(9))


def log_avg_miss_rate(curve: MrFppiCurve) -> float:
    """Mean miss rate over the nine reference FPPI samples.

    Each sample reads the curve as a step function: the miss rate of the
    sweep point with the largest fppi not exceeding the sample (the
    threshold +inf point guarantees one exists).
    """
    samples = []
    for f in FPPI_SAMPLES:
        value = None
        for point in curve.points:
            if point.fppi <= f:
                value = point.miss_rate
            else:
                break
        samples.append(value)
    return float(sum(samples) / len(samples))


def accuracy(mr: float) -> float:
    """Accuracy score: one minus the log-average miss rate."""
    if not 0.0 <= mr <= 1.0:
        raise ValueError(f"miss rate must be in [0,1], got {mr}")
    return 1.0 - mr


@dataclass(frozen=True)
class AccuracyResult:
    mr: float
    accuracy: float
    curve: MrFppiCurve


def evaluate(dts: list, gt_frames: list) -> AccuracyResult:
    curve = mr_fppi_curve(dts, gt_frames)
    mr = log_avg_miss_rate(curve)
    return AccuracyResult(mr=mr, accuracy=accuracy(mr), curve=curve)


@dataclass(frozen=True)
class HeightStats:
    """Spread of ground-truth box heights: mean, population std, ratio."""

    mu_h: float
    sigma_h: float

    @property
    def h_vc(self) -> float:
        return self.sigma_h / self.mu_h


def height_stats(gt_frames: list) -> HeightStats:
    heights = [box.h for gt in gt_frames for box in gt.boxes]
    if not heights:
        raise DataError("no ground-truth boxes; height statistics undefined")
    arr = np.asarray(heights, dtype=np.float64)
    return HeightStats(mu_h=float(arr.mean()), sigma_h=float(arr.std(ddof=0)))


# ---------------------------------------------------------------------------
# CSV interfaces


def read_ground_truth_csv(path) -> list:
    """Read frame_id,x,y,w,h rows (header required) into GroundTruthFrame list."""
    rows = _read_csv(path, ("frame_id", "x", "y", "w", "h"))
    frames = {}
    for row in rows:
        fid = int(row["frame_id"])
        frames.setdefault(fid, []).append(
            BoundingBox(float(row["x"]), float(row["y"]), float(row["w"]), float(row["h"]))
        )
    return [GroundTruthFrame(fid, tuple(frames[fid])) for fid in sorted(frames)]


def read_detections_csv(path) -> list:
    """Read frame_id,x,y,w,h,score rows (header required) into Detection list."""
    rows = _read_csv(path, ("frame_id", "x", "y", "w", "h", "score"))
    return [
        Detection(
            frame_id=int(row["frame_id"]),
            box=BoundingBox(float(row["x"]), float(row["y"]), float(row["w"]), float(row["h"])),
            score=float(row["score"]),
        )
        for row in rows
    ]


def write_detections_csv(dts: list, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "x", "y", "w", "h", "score"])
        for det in dts:
            writer.writerow(
                [det.frame_id, repr(det.box.x), repr(det.box.y), repr(det.box.w),
                 repr(det.box.h), repr(det.score)]
            )
    return path


def write_ground_truth_csv(gt_frames: list, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "x", "y", "w", "h"])
        for gt in gt_frames:
            for box in gt.boxes:
                writer.writerow([gt.frame_id, repr(box.x), repr(box.y), repr(box.w), repr(box.h)])
    return path


def write_curve_csv(curve: MrFppiCurve, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fppi", "miss_rate"])
        for point in curve.points:
            thresh = "inf" if point.threshold == float("inf") else repr(point.threshold)
            writer.writerow([thresh, repr(point.fppi), repr(point.miss_rate)])
    return path


def _read_csv(path, required_columns) -> list:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty file, expected a header row")
        missing = set(required_columns) - set(reader.fieldnames)
        if missing:
            raise FormatError(f"{path}: missing columns {sorted(missing)}")
        try:
            return list(reader)
        except csv.Error as exc:
            raise FormatError(f"{path}: {exc}") from exc
