import logging
import os
import sys

import numpy as np
import pytest

from robench.distortions import KINDS, LadderConfig
from robench.errors import DataError
from robench.frames import load_frame
from robench.ladder import (
    ENCODER_ENV,
    build_all_ladders,
    build_ladder,
    ladder_stats,
    write_stats_csv,
)
from robench.manifest import load_manifest
from robench.scene import SceneConfig, synth_scene

SMALL_CONFIG = LadderConfig(
    qp_levels=(10, 40),
    res_scales=(0.5, 0.25),
    wn_sigmas=(0.02, 0.2),
    bv_offsets=(-0.2, 0.3),
)


@pytest.fixture(scope="module")
def small_scene(tmp_path_factory):
    out = tmp_path_factory.mktemp("scene")
    cfg = SceneConfig(width=64, height=48, frames=2, actor_count=1, actor_height=24,
                      texture_seed=9, sequence_id="tiny")
    manifest, gt = synth_scene(cfg, out)
    return manifest, gt


def test_default_ladder_counts(small_scene, tmp_path):
    manifest, _ = small_scene
    ladders = build_all_ladders(manifest, LadderConfig(), tmp_path)
    sizes = {kind: len(ladders[kind]) for kind in KINDS}
    assert sizes == {"qp": 11, "res": 11, "wn": 20, "bv": 10}
    assert sum(sizes.values()) == 52


def test_ladder_manifests_on_disk(small_scene, tmp_path):
    manifest, _ = small_scene
    ladders = build_all_ladders(manifest, SMALL_CONFIG, tmp_path)
    for kind in KINDS:
        for m in ladders[kind]:
            assert m.role == "distorted"
            assert m.parent_id == "tiny"
            loaded = load_manifest(tmp_path / f"{m.sequence_id}.json")
            assert loaded.distortion == m.distortion
            for p in loaded.frame_paths:
                assert p.exists()


def test_wn_ladder_reproducible(small_scene, tmp_path):
    manifest, _ = small_scene
    first = build_ladder(manifest, "wn", SMALL_CONFIG, tmp_path / "a", seed_base=5)
    second = build_ladder(manifest, "wn", SMALL_CONFIG, tmp_path / "b", seed_base=5)
    for m1, m2 in zip(first, second):
        assert m1.distortion.seed == 5
        for p1, p2 in zip(m1.frame_paths, m2.frame_paths):
            assert p1.read_bytes()[10:] == p2.read_bytes()[10:]  # identical payloads


def test_res_ladder_dimensions(small_scene, tmp_path):
    manifest, _ = small_scene
    ladder = build_ladder(manifest, "res", SMALL_CONFIG, tmp_path)
    half = load_frame(ladder[0].frame_paths[0])
    assert (half.width, half.height) == (32, 24)


def test_build_ladder_rejects_distorted_input(small_scene, tmp_path):
    manifest, _ = small_scene
    ladder = build_ladder(manifest, "bv", SMALL_CONFIG, tmp_path)
    with pytest.raises(ValueError):
        build_ladder(ladder[0], "bv", SMALL_CONFIG, tmp_path)


def test_ladder_stats_rows(small_scene, tmp_path):
    manifest, _ = small_scene
    ladders = build_all_ladders(manifest, SMALL_CONFIG, tmp_path)
    rows = ladder_stats(manifest, ladders)
    assert len(rows) == 1 + 8
    ref_row = rows[0]
    assert ref_row.kind == "ref" and ref_row.level == 0
    assert ref_row.stats.psnr_db == float("inf")
    assert ref_row.stats.compression_ratio == 1.0

    by_kind = {}
    for row in rows[1:]:
        by_kind.setdefault(row.kind, []).append(row)
    qp_psnrs = [r.stats.psnr_db for r in by_kind["qp"]]
    assert qp_psnrs == sorted(qp_psnrs, reverse=True)
    qp_bytes = [r.stats.encoded_bytes for r in by_kind["qp"]]
    assert qp_bytes == sorted(qp_bytes, reverse=True)
    bv_lumas = [r.stats.mean_luma for r in sorted(by_kind["bv"], key=lambda r: r.param)]
    assert bv_lumas == sorted(bv_lumas)
    assert all(l1 < l2 for l1, l2 in zip(bv_lumas, bv_lumas[1:]))
    # res rows carry no sample-wise PSNR (different geometry)
    assert all(np.isnan(r.stats.psnr_db) for r in by_kind["res"])


def test_stats_csv_roundtrip(small_scene, tmp_path):
    manifest, _ = small_scene
    ladders = {"qp": build_ladder(manifest, "qp", SMALL_CONFIG, tmp_path)}
    rows = ladder_stats(manifest, ladders)
    path = write_stats_csv(rows, tmp_path / "stats.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "kind,level,param,psnr_db,mean_luma,original_bytes,encoded_bytes,compression_ratio"
    assert lines[1].startswith("ref,0,") and ",inf," in lines[1]
    assert len(lines) == 1 + len(rows)


def test_mismatched_parentage_rejected(small_scene, tmp_path):
    manifest, _ = small_scene
    ladder = build_ladder(manifest, "bv", SMALL_CONFIG, tmp_path)
    stranger = load_manifest(tmp_path / f"{ladder[0].sequence_id}.json")
    stranger.parent_id = "someone-else"
    with pytest.raises(DataError):
        ladder_stats(manifest, {"bv": [stranger]})


FAKE_ENCODER = """\
import pathlib, shutil, sys
in_dir, out_dir, qp = pathlib.Path(sys.argv[1]), pathlib.Path(sys.argv[2]), int(sys.argv[3])
out_dir.mkdir(parents=True, exist_ok=True)
for src in sorted(in_dir.glob("frame_*.p?m")):
    shutil.copy(src, out_dir / src.name)
(out_dir / "stream.bin").write_bytes(b"x" * (1000 - 10 * qp))
"""


def test_external_encoder_hook(small_scene, tmp_path, monkeypatch, caplog):
    manifest, _ = small_scene
    script = tmp_path / "fake_encoder.py"
    script.write_text(FAKE_ENCODER)
    monkeypatch.setenv(ENCODER_ENV, f"{sys.executable} {script} {{in}} {{out}} {{qp}}")
    config = LadderConfig(qp_levels=(10, 58), res_scales=(0.5,), wn_sigmas=(0.1,),
                          bv_offsets=(-0.1, 0.1))
    with caplog.at_level(logging.WARNING):
        ladder = build_ladder(manifest, "qp", config, tmp_path / "hook")
    assert ladder[0].encoded_bytes == 1000 - 100
    assert ladder[1].encoded_bytes == 1000 - 580
    # frames passed through the hook are byte copies of the reference
    ref_payload = manifest.frame_paths[0].read_bytes()
    assert ladder[0].frame_paths[0].read_bytes() == ref_payload
    assert any("qp=58" in rec.getMessage() for rec in caplog.records)


def test_external_encoder_missing_stream(small_scene, tmp_path, monkeypatch):
    manifest, _ = small_scene
    script = tmp_path / "noop.py"
    script.write_text("import sys\n")
    monkeypatch.setenv(ENCODER_ENV, f"{sys.executable} {script} {{in}} {{out}} {{qp}}")
    config = LadderConfig(qp_levels=(10,), res_scales=(0.5,), wn_sigmas=(0.1,),
                          bv_offsets=(-0.1, 0.1))
    with pytest.raises(DataError):
        build_ladder(manifest, "qp", config, tmp_path / "hook2")
