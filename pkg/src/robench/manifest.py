"""Sequence manifests: named, ordered frame lists plus distortion lineage.

A manifest is a small JSON file next to (or above) its frames; frame paths
are stored relative to the manifest's directory so trees stay portable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distortions import DistortionSpec
from .errors import DataError, FormatError
from .frames import Image, load_frame, mean_luma

ROLES = ("reference", "distorted")


@dataclass
class SequenceManifest:
    """One of the N versions of a scene: the reference or a distorted copy."""

    sequence_id: str
    role: str
    frame_paths: list
    distortion: DistortionSpec | None = None
    parent_id: str | None = None
    encoded_bytes: int | None = None  # coded-stream size, qp/res ladders only

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not self.frame_paths:
            raise ValueError("frame_paths must be non-empty")
        if self.role == "distorted" and (self.distortion is None or self.parent_id is None):
            raise ValueError("distorted manifests need distortion and parent_id")
        self.frame_paths = [Path(p) for p in self.frame_paths]

    def load_frames(self) -> list[Image]:
        frames = [load_frame(p) for p in self.frame_paths]
        first = frames[0]
        for i, frame in enumerate(frames[1:], start=1):
            if frame.samples.shape != first.samples.shape:
                raise DataError(
                    f"{self.sequence_id}: frame {i} is {frame.samples.shape}, "
                    f"frame 0 is {first.samples.shape}"
                )
        return frames

    def frame_bytes(self) -> int:
        return sum(os.path.getsize(p) for p in self.frame_paths)


def save_manifest(manifest: SequenceManifest, path) -> Path:
    path = Path(path)
    base = path.parent.resolve()
    rel_paths = []
    for p in manifest.frame_paths:
        p = Path(p).resolve()
        rel_paths.append(os.path.relpath(p, base))
    doc = {
        "sequence_id": manifest.sequence_id,
        "role": manifest.role,
        "frame_paths": rel_paths,
        "distortion": None if manifest.distortion is None else manifest.distortion.to_json(),
        "parent_id": manifest.parent_id,
    }
    if manifest.encoded_bytes is not None:
        doc["encoded_bytes"] = manifest.encoded_bytes
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path) -> SequenceManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    try:
        distortion = doc.get("distortion")
        return SequenceManifest(
            sequence_id=doc["sequence_id"],
            role=doc["role"],
            frame_paths=[path.parent / p for p in doc["frame_paths"]],
            distortion=None if distortion is None else DistortionSpec.from_json(distortion),
            parent_id=doc.get("parent_id"),
            encoded_bytes=doc.get("encoded_bytes"),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: missing or malformed manifest field ({exc})") from exc


@dataclass(frozen=True)
class QualityStats:
    """Sequence-level quality numbers for one distorted version."""

    psnr_db: float
    mean_luma: float
    original_bytes: int
    encoded_bytes: int

    @property
    def compression_ratio(self) -> float:
        if self.encoded_bytes <= 0:
            return 0.0
        return self.original_bytes / self.encoded_bytes


def sequence_psnr(ref: SequenceManifest, dist: SequenceManifest) -> QualityStats:
    """Pooled-MSE PSNR of ``dist`` against ``ref`` plus byte/luma aggregates.

    MSE is pooled across all frames before the log, so sequences where some
    frames are bit-identical still have a finite, well-defined PSNR.
    """
    if len(ref.frame_paths) != len(dist.frame_paths):
        raise DataError(
            f"frame count mismatch: {len(ref.frame_paths)} vs {len(dist.frame_paths)}"
        )
    sq_sum = 0.0
    sample_count = 0
    luma_sum = 0.0
    for ref_path, dist_path in zip(ref.frame_paths, dist.frame_paths):
        a = load_frame(ref_path)
        b = load_frame(dist_path)
        if a.samples.shape != b.samples.shape:
            raise DataError(
                f"dimension mismatch at {dist_path}: {a.samples.shape} vs {b.samples.shape}"
            )
        diff = a.samples.astype(float) - b.samples.astype(float)
        sq_sum += float((diff * diff).sum())
        sample_count += diff.size
        luma_sum += mean_luma(b)
    if sq_sum == 0.0:
        psnr_db = float("inf")
    else:
        psnr_db = float(10.0 * np.log10(255.0**2 / (sq_sum / sample_count)))
    return QualityStats(
        psnr_db=psnr_db,
        mean_luma=luma_sum / len(dist.frame_paths),
        original_bytes=ref.frame_bytes(),
        encoded_bytes=dist.frame_bytes(),
    )
