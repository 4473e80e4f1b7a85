"""Deterministic synthetic surveillance scenes with exact ground truth.

A scene is a fixed-camera view: a static procedurally textured background
with a handful of upright walking figures of constant pixel height (the
fixed-height design keeps the height variation coefficient at zero, the
regime the benchmark targets). Identical configs produce bit-identical
frames, so end-to-end runs are reproducible without any external data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .deteval import BoundingBox, GroundTruthFrame, write_ground_truth_csv
from .frames import Image, quantize_unit, save_frame
from .ladder import FRAME_NAME
from .manifest import SequenceManifest, save_manifest

ACTOR_ASPECT = 0.4  # box width as a fraction of actor height


@dataclass(frozen=True)
class SceneConfig:
    width: int = 640
    height: int = 480
    frames: int = 60
    actor_count: int = 4
    actor_height: int = 64
    texture_seed: int = 7
    actor_speed: float = 2.0  # pixels per frame
    background_cell: int = 32
    background_level: float = 0.55
    background_contrast: float = 0.25
    background_noise: float = 0.02
    sequence_id: str = "scene"

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("scene must be at least 16x16")
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if self.actor_count < 0:
            raise ValueError("actor_count must be >= 0")
        if self.actor_height < 16:
            raise ValueError("actor_height must be >= 16")
        aw = actor_width(self.actor_height)
        if self.actor_count > 0 and (aw > self.width or self.actor_height > self.height):
            raise ValueError(
                f"{aw}x{self.actor_height} actors cannot fit in a "
                f"{self.width}x{self.height} frame"
            )

    @classmethod
    def from_json_file(cls, path) -> "SceneConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown scene config keys: {sorted(unknown)}")
        return cls(**doc)


def actor_width(actor_height: int) -> int:
    return max(8, int(np.floor(actor_height * ACTOR_ASPECT + 0.5)))


def _bilinear_grid(grid: np.ndarray, height: int, width: int, cell: int) -> np.ndarray:
    """Upsample a coarse value grid to (height, width) bilinearly."""
    gy = (np.arange(height) + 0.5) / cell
    gx = (np.arange(width) + 0.5) / cell
    y0 = np.clip(np.floor(gy - 0.5).astype(int), 0, grid.shape[0] - 2)
    x0 = np.clip(np.floor(gx - 0.5).astype(int), 0, grid.shape[1] - 2)
    fy = np.clip(gy - 0.5 - y0, 0.0, 1.0)[:, None]
    fx = np.clip(gx - 0.5 - x0, 0.0, 1.0)[None, :]
    a = grid[np.ix_(y0, x0)]
    b = grid[np.ix_(y0, x0 + 1)]
    c = grid[np.ix_(y0 + 1, x0)]
    d = grid[np.ix_(y0 + 1, x0 + 1)]
    return (a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + c * fy * (1 - fx) + d * fy * fx)


def _sprite_mask_values(h: int, w: int, texture: np.ndarray) -> tuple:
    """Body mask and shades for an h x w figure: head, torso, two legs."""
    v = (np.arange(h)[:, None] + 0.5) / h
    u = (np.arange(w)[None, :] + 0.5) / w
    head = ((u - 0.5) / 0.17) ** 2 + ((v - 0.14) / 0.11) ** 2 <= 1.0
    torso = (np.abs(u - 0.5) <= 0.24) & (v >= 0.24) & (v <= 0.58)
    legs = ((np.abs(u - 0.36) <= 0.08) | (np.abs(u - 0.64) <= 0.08)) & (v > 0.58) & (v <= 0.96)
    mask = head | torso | legs
    values = np.zeros((h, w))
    values[head] = 0.22
    values[torso] = 0.30
    values[legs] = 0.26
    values += texture
    return mask, np.clip(values, 0.0, 1.0)


def _fold(position: np.ndarray, limit: float) -> np.ndarray:
    """Reflect a free-running coordinate into [0, limit]."""
    if limit <= 0:
        return np.zeros_like(position)
    m = np.mod(position, 2.0 * limit)
    return np.where(m > limit, 2.0 * limit - m, m)


@dataclass
class SyntheticScene:
    config: SceneConfig
    frames: list
    ground_truth: list  # GroundTruthFrame per frame


def generate_scene(cfg: SceneConfig) -> SyntheticScene:
    """Render all frames and exact ground truth for ``cfg`` in memory."""
    rng = np.random.default_rng(cfg.texture_seed)
    cell = max(4, cfg.background_cell)
    grid_h = cfg.height // cell + 2
    grid_w = cfg.width // cell + 2
    lo = cfg.background_level - cfg.background_contrast / 2.0
    hi = cfg.background_level + cfg.background_contrast / 2.0
    coarse = rng.uniform(lo, hi, (grid_h, grid_w))
    background = _bilinear_grid(coarse, cfg.height, cfg.width, cell)
    background += rng.normal(0.0, cfg.background_noise, background.shape)
    background = np.clip(background, 0.0, 1.0)

    ah = cfg.actor_height
    aw = actor_width(ah)
    sprite_texture = rng.normal(0.0, 0.015, (ah, aw))
    mask, values = _sprite_mask_values(ah, aw, sprite_texture)

    x_limit = float(cfg.width - aw)
    y_limit = float(cfg.height - ah)
    starts_x = rng.uniform(0, max(x_limit, 1e-9), cfg.actor_count)
    starts_y = rng.uniform(0, max(y_limit, 1e-9), cfg.actor_count)
    angles = rng.uniform(0, 2 * np.pi, cfg.actor_count)
    vel_x = np.cos(angles) * cfg.actor_speed
    vel_y = np.sin(angles) * cfg.actor_speed

    frames = []
    ground_truth = []
    for t in range(cfg.frames):
        canvas = background.copy()
        boxes = []
        px = _fold(starts_x + vel_x * t, x_limit)
        py = _fold(starts_y + vel_y * t, y_limit)
        for i in range(cfg.actor_count):
            x0 = int(np.floor(px[i] + 0.5))
            y0 = int(np.floor(py[i] + 0.5))
            region = canvas[y0 : y0 + ah, x0 : x0 + aw]
            region[mask] = values[mask]
            boxes.append(BoundingBox(float(x0), float(y0), float(aw), float(ah)))
        frames.append(Image(quantize_unit(canvas)))
        ground_truth.append(GroundTruthFrame(frame_id=t, boxes=tuple(boxes)))
    return SyntheticScene(config=cfg, frames=frames, ground_truth=ground_truth)


def synth_scene(cfg: SceneConfig, out_dir) -> tuple:
    """Generate and persist a scene: frames, manifest and ground-truth CSV.

    Returns (SequenceManifest, list of GroundTruthFrame).
    """
    scene = generate_scene(cfg)
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(scene.frames):
        path = frames_dir / FRAME_NAME.format(i)
        save_frame(frame, path)
        paths.append(path)
    manifest = SequenceManifest(
        sequence_id=cfg.sequence_id,
        role="reference",
        frame_paths=paths,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    write_ground_truth_csv(scene.ground_truth, out_dir / "gt.csv")
    return manifest, scene.ground_truth
