"""Reference detector: HOG templates scored over a sliding-window pyramid.

The model stores one or more HOG descriptors cropped from exemplar frames;
a window's score is the best cosine similarity against those templates.
No training is involved, which keeps the detector fully deterministic
while still exercising a real gradient-feature pipeline: 8x8-pixel cells,
9 unsigned orientation bins with bilinear votes, 2x2-cell blocks with
L2-Hys normalization (clip 0.2, renormalize).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .deteval import BoundingBox, Detection, iou
from .distortions import downscale
from .frames import Image

CELL = 8
BINS = 9
BLOCK_CELLS = 2
CLIP = 0.2
_EPS = 1e-12


def _gradients(luma: np.ndarray) -> tuple:
    """Centered-difference gradients with replicated borders."""
    padded = np.pad(np.asarray(luma, dtype=np.float32), 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) * np.float32(0.5)
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) * np.float32(0.5)
    return gx, gy


@lru_cache(maxsize=64)
def _cell_vote_index(cy: int, cx: int) -> np.ndarray:
    """Flat (cell * BINS) base index per pixel of a (cy*8, cx*8) region."""
    rows = np.repeat(np.arange(cy, dtype=np.int64), CELL)[:, None]
    cols = np.repeat(np.arange(cx, dtype=np.int64), CELL)[None, :]
    index = ((rows * cx + cols) * BINS).ravel()
    index.setflags(write=False)
    return index


def cell_histograms(luma: np.ndarray) -> np.ndarray:
    """(cells_y, cells_x, BINS) orientation histograms of an image region.

    The region is truncated to whole 8x8 cells. Each pixel's magnitude is
    split linearly between the two nearest unsigned-orientation bin
    centers.
    """
    gx, gy = _gradients(luma)
    return _histograms_from_gradients(gx, gy)


def block_features(cells: np.ndarray) -> np.ndarray:
    """(cy-1, cx-1, 36) L2-Hys-normalized 2x2-cell block descriptors."""
    cells = np.asarray(cells, dtype=np.float32)
    stacked = np.concatenate(
        [cells[:-1, :-1], cells[:-1, 1:], cells[1:, :-1], cells[1:, 1:]], axis=2
    )
    norms = np.sqrt((stacked**2).sum(axis=2, keepdims=True))
    normed = stacked / np.maximum(norms, np.float32(_EPS))
    clipped = np.minimum(normed, np.float32(CLIP))
    norms2 = np.sqrt((clipped**2).sum(axis=2, keepdims=True))
    return clipped / np.maximum(norms2, np.float32(_EPS))


@dataclass(frozen=True)
class HogDescriptor:
    """Concatenated block features of one window; every component in [0,1]."""

    vector: np.ndarray
    blocks_y: int
    blocks_x: int

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)


@dataclass
class DetectorModel:
    """Sliding-window template model.

    ``window`` is (width, height) in pixels, both multiples of the cell
    size; pyramid resize ratios run over powers of ``scale_factor``
    between ``min_scale`` and ``max_scale``.
    """

    window: tuple
    templates: np.ndarray  # (n_templates, dim), rows unit-normalized
    scale_factor: float = 2.0 ** (1.0 / 8.0)
    min_scale: float = 0.8
    max_scale: float = 2.0
    stride: int = CELL
    score_threshold: float = 0.8
    nms_iou: float = 0.5

    def __post_init__(self):
        w, h = self.window
        if w % CELL or h % CELL:
            raise ValueError(f"window {w}x{h} must be a multiple of the {CELL}px cell")
        if len(self.templates) < 1:
            raise ValueError("model needs at least one template")
        self.window = (int(w), int(h))
        self.templates = np.asarray(self.templates, dtype=np.float32)

    @property
    def window_cells(self) -> tuple:
        return self.window[0] // CELL, self.window[1] // CELL

    def descriptor_dim(self) -> int:
        cw, ch = self.window_cells
        return (ch - 1) * (cw - 1) * 4 * BINS

    def save(self, path) -> Path:
        doc = {
            "window": list(self.window),
            "scale_factor": self.scale_factor,
            "min_scale": self.min_scale,
            "max_scale": self.max_scale,
            "stride": self.stride,
            "score_threshold": self.score_threshold,
            "nms_iou": self.nms_iou,
            "templates": [[float(v) for v in row] for row in self.templates],
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "DetectorModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            window=tuple(doc["window"]),
            templates=np.asarray(doc["templates"], dtype=np.float64),
            scale_factor=float(doc["scale_factor"]),
            min_scale=float(doc["min_scale"]),
            max_scale=float(doc["max_scale"]),
            stride=int(doc["stride"]),
            score_threshold=float(doc["score_threshold"]),
            nms_iou=float(doc["nms_iou"]),
        )


def hog(img: Image, origin: tuple, model: DetectorModel) -> HogDescriptor:
    """Descriptor of the model-sized window of ``img`` at ``origin`` (x, y).

    Gradients use the surrounding image context; only true image borders
    fall back to replication.
    """
    x, y = origin
    win_w, win_h = model.window
    if x < 0 or y < 0 or x + win_w > img.width or y + win_h > img.height:
        raise ValueError(
            f"window {win_w}x{win_h} at ({x},{y}) exceeds {img.width}x{img.height} image"
        )
    gx_full, gy_full = _gradients(img.luma())
    gx = gx_full[y : y + win_h, x : x + win_w]
    gy = gy_full[y : y + win_h, x : x + win_w]
    cells = _histograms_from_gradients(gx, gy)
    blocks = block_features(cells)
    return HogDescriptor(
        vector=blocks.ravel(), blocks_y=blocks.shape[0], blocks_x=blocks.shape[1]
    )


def _histograms_from_gradients(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    cy = gx.shape[0] // CELL
    cx = gx.shape[1] // CELL
    gx = gx[: cy * CELL, : cx * CELL]
    gy = gy[: cy * CELL, : cx * CELL]
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), np.float32(np.pi))  # unsigned, in [0, pi)

    # Continuous bin coordinate: bin centers at (k + 0.5) * pi/BINS.
    t = ang * np.float32(BINS / np.pi) - np.float32(0.5)
    k0 = np.floor(t)
    w1 = t - k0
    bin0 = k0.astype(np.int64)
    bin0[bin0 < 0] = BINS - 1  # wrap of angles below the first bin center
    bin1 = bin0 + 1
    bin1[bin1 == BINS] = 0

    base = _cell_vote_index(cy, cx)
    n_votes = cy * cx * BINS
    hist = np.bincount(base + bin0.ravel(), weights=(mag * (1.0 - w1)).ravel(),
                       minlength=n_votes)
    hist += np.bincount(base + bin1.ravel(), weights=(mag * w1).ravel(),
                        minlength=n_votes)
    return hist.reshape(cy, cx, BINS).astype(np.float32)


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a 2-D float array (used for pyramid upscaling)."""
    arr = np.asarray(arr, dtype=np.float32)
    in_h, in_w = arr.shape
    ys = (np.arange(out_h, dtype=np.float32) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float32) + 0.5) * (in_w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0).astype(np.float32)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0).astype(np.float32)[None, :]
    rows = arr[y0] * (1 - fy) + arr[y1] * fy  # (out_h, in_w)
    return rows[:, x0] * (1 - fx) + rows[:, x1] * fx


def _pyramid_ratios(model: DetectorModel) -> list:
    ratios = []
    k = math.ceil(math.log(model.min_scale, model.scale_factor) - 1e-9)
    while model.scale_factor**k <= model.max_scale + 1e-9:
        ratios.append(model.scale_factor**k)
        k += 1
    return ratios


def _window_norms(blocks: np.ndarray, wh: int, ww: int) -> np.ndarray:
    """Euclidean descriptor norm of every (wh, ww)-block window, via a
    summed-area table of per-block squared norms."""
    block_sq = (blocks**2).sum(axis=2, dtype=np.float64)
    table = np.zeros((block_sq.shape[0] + 1, block_sq.shape[1] + 1))
    np.cumsum(np.cumsum(block_sq, axis=0), axis=1, out=table[1:, 1:])
    sums = table[wh:, ww:] - table[:-wh, ww:] - table[wh:, :-ww] + table[:-wh, :-ww]
    return np.sqrt(np.maximum(sums, 0.0))


def _detect_single(luma: np.ndarray, model: DetectorModel) -> list:
    """Scan one already-resized luma plane; returns (x, y, score) in its coords."""
    cells = cell_histograms(luma)
    blocks = block_features(cells)
    cw, ch = model.window_cells
    wh, ww = ch - 1, cw - 1
    by = blocks.shape[0] - wh + 1
    bx = blocks.shape[1] - ww + 1
    if by <= 0 or bx <= 0:
        return []
    view = np.lib.stride_tricks.sliding_window_view(blocks, (wh, ww, 4 * BINS))
    windows = view.reshape(by, bx, -1)
    norms = _window_norms(blocks, wh, ww)
    scores = windows @ model.templates.T  # (by, bx, n_templates)
    scores = scores.max(axis=2) / np.maximum(norms, _EPS)
    keep = np.argwhere(scores >= model.score_threshold)
    return [
        (float(x * CELL), float(y * CELL), float(scores[y, x]))
        for y, x in keep
    ]


def nms(dts: list, iou_thresh: float) -> list:
    """Greedy non-maximum suppression after a deterministic sort
    (score descending, then x, then y)."""
    if not dts:
        return []
    ordered = sorted(dts, key=lambda d: (-d.score, d.box.x, d.box.y))
    x0 = np.array([d.box.x for d in ordered])
    y0 = np.array([d.box.y for d in ordered])
    x1 = np.array([d.box.x + d.box.w for d in ordered])
    y1 = np.array([d.box.y + d.box.h for d in ordered])
    areas = (x1 - x0) * (y1 - y0)
    alive = np.ones(len(ordered), dtype=bool)
    kept = []
    for i in range(len(ordered)):
        if not alive[i]:
            continue
        kept.append(ordered[i])
        rest = alive.copy()
        rest[: i + 1] = False
        if not rest.any():
            break
        iw = np.minimum(x1[i], x1[rest]) - np.maximum(x0[i], x0[rest])
        ih = np.minimum(y1[i], y1[rest]) - np.maximum(y0[i], y0[rest])
        inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
        overlap = inter / (areas[i] + areas[rest] - inter)
        doomed = np.nonzero(rest)[0][overlap > iou_thresh]
        alive[doomed] = False
    return kept


def detect_frame(
    img: Image, model: DetectorModel, frame_id: int = 0, skip_undersized: bool = False
) -> list:
    """Multi-scale sliding-window detection on one frame.

    Frames smaller than the window at the base scale raise ValueError
    unless ``skip_undersized`` turns them into an empty detection list
    (deep resolution ladders shrink frames below any fixed window).
    """
    win_w, win_h = model.window
    if img.width < win_w or img.height < win_h:
        if skip_undersized:
            return []
        raise ValueError(
            f"frame {img.width}x{img.height} is smaller than the {win_w}x{win_h} window"
        )
    luma = img.luma()
    candidates = []
    for ratio in _pyramid_ratios(model):
        if abs(ratio - 1.0) < 1e-12:
            plane = luma
        else:
            out_h = max(1, int(np.floor(img.height * ratio + 0.5)))
            out_w = max(1, int(np.floor(img.width * ratio + 0.5)))
            if ratio < 1.0:
                plane = downscale(img, ratio).luma()
            else:
                plane = resize_bilinear(luma, out_h, out_w)
        if plane.shape[0] < win_h or plane.shape[1] < win_w:
            continue
        inv = img.width / (plane.shape[1])  # actual ratio back to frame coords
        inv_y = img.height / (plane.shape[0])
        for x, y, score in _detect_single(plane, model):
            bx = x * inv
            by = y * inv_y
            bw = win_w * inv
            bh = win_h * inv_y
            bx = min(max(bx, 0.0), img.width - bw)
            by = min(max(by, 0.0), img.height - bh)
            candidates.append(
                Detection(frame_id=frame_id, box=BoundingBox(bx, by, bw, bh), score=score)
            )
    return nms(candidates, model.nms_iou)


def detect(frames: list, model: DetectorModel, skip_undersized: bool = False) -> list:
    """Run the detector over a frame list; frame_id is the list index."""
    out = []
    for i, frame in enumerate(frames):
        out.extend(detect_frame(frame, model, frame_id=i, skip_undersized=skip_undersized))
    return out


def build_model(
    frames: list,
    gt_frames: list,
    score_threshold: float = 0.8,
    max_templates: int = 3,
) -> DetectorModel:
    """Build a template model from exemplar ground-truth crops.

    The window snaps the first ground-truth box up to whole cells; one
    template is taken per exemplar frame (first box), sampled evenly
    across the sequence.
    """
    with_boxes = [gt for gt in gt_frames if gt.boxes]
    if not with_boxes:
        raise ValueError("cannot build a model without ground-truth boxes")
    first_box = with_boxes[0].boxes[0]
    win_w = int(math.ceil(first_box.w / CELL) * CELL)
    win_h = int(math.ceil(first_box.h / CELL) * CELL)
    frame_lookup = {gt.frame_id: gt for gt in with_boxes}
    ids = sorted(frame_lookup)
    picks = [ids[(len(ids) - 1) * i // max(max_templates - 1, 1)] for i in range(max_templates)]
    probe = DetectorModel(
        window=(win_w, win_h),
        templates=np.ones((1, 1)),
        score_threshold=score_threshold,
    )
    templates = []
    for frame_id in dict.fromkeys(picks):
        img = frames[frame_id]
        box = frame_lookup[frame_id].boxes[0]
        x = int(np.floor(box.x + box.w / 2 - win_w / 2 + 0.5))
        y = int(np.floor(box.y + box.h / 2 - win_h / 2 + 0.5))
        x = min(max(x, 0), img.width - win_w)
        y = min(max(y, 0), img.height - win_h)
        desc = hog(img, (x, y), probe).vector
        norm = float(np.sqrt((desc.astype(np.float64) ** 2).sum()))
        if norm > _EPS:
            templates.append(desc / np.float32(norm))
    if not templates:
        raise ValueError("all exemplar crops produced empty descriptors")
    return DetectorModel(
        window=(win_w, win_h),
        templates=np.asarray(templates),
        score_threshold=score_threshold,
    )
