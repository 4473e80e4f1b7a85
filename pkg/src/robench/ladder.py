"""Build distortion ladders from a reference sequence and summarize them.

A ladder is the ordered set of distorted versions of one reference for one
distortion family. Defaults produce 11 (qp) + 11 (res) + 20 (wn) + 10 (bv)
= 52 versions. Frames land under ``out_dir/<sequence_id>/`` with one
manifest JSON per version next to them.

If the ROBENCH_ENCODER_CMD environment variable is set, the qp ladder is
produced by that external command instead of the built-in DCT surrogate.
The value is a template with {in}, {out} and {qp} placeholders, invoked
once per sequence: {in} expands to the directory holding the reference
frames (consumed in sorted filename order), {out} to the output directory,
and the command must write reconstructed frames (frame_*.pgm/.ppm) plus
the bitstream as stream.bin in {out}. encoded_bytes is then the size of
stream.bin.
"""

from __future__ import annotations

import csv
import logging
import os
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .dct_codec import compress_dct, dct_roundtrip
from .distortions import KINDS, DistortionSpec, LadderConfig, apply_distortion
from .errors import DataError
from .frames import Image, save_frame
from .manifest import QualityStats, SequenceManifest, save_manifest, sequence_psnr

log = logging.getLogger(__name__)

ENCODER_ENV = "ROBENCH_ENCODER_CMD"
DEFAULT_SEED = 1729

# Fine quantizer step used only to size the coded stream of downscaled
# frames, so res-ladder compression ratios are comparable to the qp ladder.
RES_CODER_STEP = 1.0

FRAME_NAME = "frame_{:05d}.pgm"


def _write_frames(frames: list[Image], seq_dir: Path) -> list[Path]:
    seq_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        name = FRAME_NAME.format(i)
        if frame.channels == 3:
            name = name.replace(".pgm", ".ppm")
        path = seq_dir / name
        save_frame(frame, path)
        paths.append(path)
    return paths


def _distort_frames(frames, spec, jobs):
    if jobs <= 1:
        return [apply_distortion(f, spec, i) for i, f in enumerate(frames)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(apply_distortion, f, spec, i) for i, f in enumerate(frames)]
        return [f.result() for f in futures]


def _run_external_encoder(template: str, ref: SequenceManifest, out_dir: Path, qp: int) -> int:
    if qp > 51:
        log.warning("external encoder requested with qp=%d (above the usual 51 maximum)", qp)
    in_dirs = {Path(p).parent for p in ref.frame_paths}
    if len(in_dirs) != 1:
        raise ValueError("the external-encoder hook needs all reference frames in one directory")
    in_dir = in_dirs.pop()
    out_dir.mkdir(parents=True, exist_ok=True)
    args = [
        tok.format(**{"in": str(in_dir), "out": str(out_dir), "qp": qp})
        for tok in shlex.split(template)
    ]
    subprocess.run(args, check=True)
    stream = out_dir / "stream.bin"
    if not stream.exists():
        raise DataError(f"external encoder did not produce {stream}")
    return os.path.getsize(stream)


def build_ladder(
    ref: SequenceManifest,
    kind: str,
    config: LadderConfig,
    out_dir,
    seed_base: int = DEFAULT_SEED,
    jobs: int = 1,
) -> list[SequenceManifest]:
    """Produce one distorted manifest per level of ``kind`` under ``out_dir``."""
    if ref.role != "reference":
        raise ValueError(f"ladders are built from a reference, got role {ref.role!r}")
    params = config.params_for(kind)
    if not params:
        raise ValueError(f"empty level grid for kind {kind!r}")
    out_dir = Path(out_dir)
    frames = ref.load_frames()
    encoder_template = os.environ.get(ENCODER_ENV) if kind == "qp" else None
    manifests = []
    for level, param in enumerate(params, start=1):
        seq_id = f"{ref.sequence_id}_{kind}{level:02d}"
        seq_dir = out_dir / seq_id
        spec = DistortionSpec(
            kind=kind,
            level=level,
            param=param,
            seed=seed_base if kind == "wn" else None,
        )
        encoded_bytes = None
        if kind == "qp" and encoder_template:
            encoded_bytes = _run_external_encoder(encoder_template, ref, seq_dir, int(param))
            paths = sorted(seq_dir.glob("frame_*.p?m"))
            if len(paths) != len(frames):
                raise DataError(
                    f"external encoder wrote {len(paths)} frames, expected {len(frames)}"
                )
        elif kind == "qp":
            outputs = []
            total = 0
            for frame in frames:
                recon, nbytes = compress_dct(frame, int(param))
                outputs.append(recon)
                total += nbytes
            encoded_bytes = total
            paths = _write_frames(outputs, seq_dir)
        else:
            outputs = _distort_frames(frames, spec, jobs)
            if kind == "res":
                encoded_bytes = sum(
                    dct_roundtrip(img, RES_CODER_STEP)[1] for img in outputs
                )
            paths = _write_frames(outputs, seq_dir)
        manifest = SequenceManifest(
            sequence_id=seq_id,
            role="distorted",
            frame_paths=paths,
            distortion=spec,
            parent_id=ref.sequence_id,
            encoded_bytes=encoded_bytes,
        )
        save_manifest(manifest, out_dir / f"{seq_id}.json")
        manifests.append(manifest)
    return manifests


def build_all_ladders(
    ref: SequenceManifest,
    config: LadderConfig,
    out_dir,
    kinds=KINDS,
    seed_base: int = DEFAULT_SEED,
    jobs: int = 1,
) -> dict:
    """Build the ladders for every requested kind; returns {kind: manifests}."""
    return {
        kind: build_ladder(ref, kind, config, out_dir, seed_base=seed_base, jobs=jobs)
        for kind in kinds
    }


@dataclass(frozen=True)
class LevelStats:
    """One stats row: a ladder level (or the level-0 reference) and its numbers."""

    kind: str
    level: int
    param: float
    stats: QualityStats


def ladder_stats(ref: SequenceManifest, ladders: dict) -> list[LevelStats]:
    """Per-level PSNR / mean luma / byte statistics for built ladders.

    ``ladders`` maps kind -> list of manifests from build_ladder. The first
    row is the reference itself (level 0, PSNR inf, ratio 1). For qp and
    res levels the coded-stream size recorded at build time replaces the
    on-disk frame bytes, so their ratios reflect actual coding cost.
    """
    ref_bytes = ref.frame_bytes()
    rows = [
        LevelStats(
            kind="ref",
            level=0,
            param=0.0,
            stats=QualityStats(
                psnr_db=float("inf"),
                mean_luma=_sequence_mean_luma(ref),
                original_bytes=ref_bytes,
                encoded_bytes=ref_bytes,
            ),
        )
    ]
    for kind in KINDS:
        for manifest in ladders.get(kind, []):
            if manifest.parent_id != ref.sequence_id:
                raise DataError(
                    f"{manifest.sequence_id} derives from {manifest.parent_id!r}, "
                    f"not {ref.sequence_id!r}"
                )
            stats = sequence_psnr(ref, manifest) if kind != "res" else _res_stats(ref, manifest)
            if manifest.encoded_bytes is not None:
                stats = QualityStats(
                    psnr_db=stats.psnr_db,
                    mean_luma=stats.mean_luma,
                    original_bytes=stats.original_bytes,
                    encoded_bytes=manifest.encoded_bytes,
                )
            rows.append(
                LevelStats(
                    kind=kind,
                    level=manifest.distortion.level,
                    param=manifest.distortion.param,
                    stats=stats,
                )
            )
    return rows


def _sequence_mean_luma(manifest: SequenceManifest) -> float:
    from .frames import mean_luma

    frames = manifest.load_frames()
    return sum(mean_luma(f) for f in frames) / len(frames)


def _res_stats(ref: SequenceManifest, dist: SequenceManifest) -> QualityStats:
    # Downscaled frames cannot be compared sample-by-sample with the
    # reference; PSNR is not defined for this ladder and is reported as nan.
    return QualityStats(
        psnr_db=float("nan"),
        mean_luma=_sequence_mean_luma(dist),
        original_bytes=ref.frame_bytes(),
        encoded_bytes=dist.frame_bytes(),
    )


STATS_COLUMNS = (
    "kind",
    "level",
    "param",
    "psnr_db",
    "mean_luma",
    "original_bytes",
    "encoded_bytes",
    "compression_ratio",
)


def write_stats_csv(rows: list[LevelStats], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.kind,
                    row.level,
                    repr(float(row.param)),
                    _format_db(row.stats.psnr_db),
                    repr(row.stats.mean_luma),
                    row.stats.original_bytes,
                    row.stats.encoded_bytes,
                    repr(row.stats.compression_ratio),
                ]
            )
    return path


def _format_db(value: float) -> str:
    if value == float("inf"):
        return "inf"
    return repr(value)
