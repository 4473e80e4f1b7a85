import hashlib
import json

import numpy as np
import pytest

from robench.deteval import height_stats
from robench.manifest import load_manifest
from robench.scene import SceneConfig, actor_width, generate_scene, synth_scene


def small_cfg(**kwargs):
    base = dict(width=96, height=72, frames=4, actor_count=2, actor_height=24,
                texture_seed=13, sequence_id="s")
    base.update(kwargs)
    return SceneConfig(**base)


def test_same_config_is_bit_identical():
    a = generate_scene(small_cfg())
    b = generate_scene(small_cfg())
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa.samples, fb.samples)
    assert a.ground_truth == b.ground_truth


def test_different_seed_differs():
    a = generate_scene(small_cfg())
    b = generate_scene(small_cfg(texture_seed=14))
    assert not np.array_equal(a.frames[0].samples, b.frames[0].samples)


def test_no_actors_means_background_only():
    scene = generate_scene(small_cfg(actor_count=0))
    assert all(len(gt.boxes) == 0 for gt in scene.ground_truth)
    # static background: every frame identical
    for frame in scene.frames[1:]:
        assert np.array_equal(frame.samples, scene.frames[0].samples)


def test_constant_actor_height_gives_zero_variation():
    scene = generate_scene(small_cfg(actor_count=3, frames=6))
    hs = height_stats(scene.ground_truth)
    assert hs.h_vc == 0.0
    assert hs.mu_h == 24.0


def test_actors_stay_inside_frame():
    cfg = small_cfg(frames=50, actor_count=3, actor_speed=7.0)
    scene = generate_scene(cfg)
    for gt in scene.ground_truth:
        for b in gt.boxes:
            assert b.x >= 0 and b.y >= 0
            assert b.x + b.w <= cfg.width
            assert b.y + b.h <= cfg.height


def test_actor_box_matches_design_size():
    scene = generate_scene(small_cfg())
    b = scene.ground_truth[0].boxes[0]
    assert b.h == 24 and b.w == actor_width(24)


def test_actors_must_fit():
    with pytest.raises(ValueError):
        SceneConfig(width=20, height=20, actor_count=1, actor_height=48)
    with pytest.raises(ValueError):
        SceneConfig(actor_height=8)


def test_config_json_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"width": 64, "height": 48, "actor_hgt": 3}))
    with pytest.raises(ValueError):
        SceneConfig.from_json_file(path)


def test_synth_scene_writes_tree(tmp_path):
    manifest, gt = synth_scene(small_cfg(), tmp_path)
    assert (tmp_path / "manifest.json").exists()
    assert (tmp_path / "gt.csv").exists()
    loaded = load_manifest(tmp_path / "manifest.json")
    assert loaded.role == "reference"
    assert len(loaded.frame_paths) == 4
    assert all(p.exists() for p in loaded.frame_paths)
    assert len(gt) == 4


def test_synth_scene_tree_checksums_stable(tmp_path):
    def tree_hash(root):
        digest = hashlib.sha256()
        for path in sorted(root.rglob("*")):
            if path.is_file():
                digest.update(path.name.encode())
                digest.update(path.read_bytes())
        return digest.hexdigest()

    synth_scene(small_cfg(), tmp_path / "a")
    synth_scene(small_cfg(), tmp_path / "b")
    assert tree_hash(tmp_path / "a") == tree_hash(tmp_path / "b")
