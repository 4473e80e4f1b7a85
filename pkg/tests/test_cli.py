import hashlib
import json

import pytest

from robench.cli import main
from robench.deteval import read_detections_csv
from robench.quadrangle import parse_chart


SCENE_CFG = {
    "width": 96,
    "height": 72,
    "frames": 3,
    "actor_count": 2,
    "actor_height": 24,
    "texture_seed": 13,
    "sequence_id": "cliscene",
}

LADDER_CFG = {
    "qp_levels": [10, 50],
    "res_scales": [0.5],
    "wn_sigmas": [0.05],
    "bv_offsets": [-0.2, 0.2],
}


def _write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


def _tree_hash(root):
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


@pytest.fixture()
def scene_dir(tmp_path):
    cfg = _write_json(tmp_path / "scene.json", SCENE_CFG)
    out = tmp_path / "scene"
    assert main(["synth", str(cfg), str(out)]) == 0
    return out


def test_synth_ok_and_deterministic(tmp_path):
    cfg = _write_json(tmp_path / "scene.json", SCENE_CFG)
    assert main(["synth", str(cfg), str(tmp_path / "a")]) == 0
    assert main(["synth", str(cfg), str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "manifest.json").exists()
    assert _tree_hash(tmp_path / "a") == _tree_hash(tmp_path / "b")


def test_synth_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["synth", str(bad), str(tmp_path / "out")]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_synth_unknown_key(tmp_path):
    cfg = _write_json(tmp_path / "cfg.json", {"width": 64, "height": 48, "bogus": 1})
    assert main(["synth", str(cfg), str(tmp_path / "out")]) == 2


def test_distort_selected_kind(scene_dir, tmp_path):
    config = _write_json(tmp_path / "ladder.json", LADDER_CFG)
    out = tmp_path / "ladders"
    code = main(["distort", str(scene_dir / "manifest.json"), str(out),
                 "--kinds", "wn", "--config", str(config)])
    assert code == 0
    manifests = list(out.glob("*.json"))
    assert len(manifests) == 1
    assert (out / "stats.csv").exists()


def test_distort_missing_reference(tmp_path):
    assert main(["distort", str(tmp_path / "nope.json"), str(tmp_path / "out")]) == 2


def test_distort_unknown_kind(scene_dir, tmp_path):
    assert main(["distort", str(scene_dir / "manifest.json"), str(tmp_path / "o"),
                 "--kinds", "zz"]) == 2


def test_eval_perfect_and_empty(scene_dir, tmp_path, capsys):
    gt_csv = scene_dir / "gt.csv"
    # perfect detections: gt boxes at score 1
    lines = gt_csv.read_text().splitlines()
    det_csv = tmp_path / "perfect.csv"
    det_csv.write_text("\n".join(
        ["frame_id,x,y,w,h,score"] + [f"{row},1.0" for row in lines[1:]]) + "\n")
    out_json = tmp_path / "eval.json"
    assert main(["eval", str(det_csv), str(gt_csv), "--out", str(out_json),
                 "--manifest", str(scene_dir / "manifest.json")]) == 0
    doc = json.loads(out_json.read_text())
    assert doc["accuracy"] == 1.0 and doc["mr"] == 0.0
    assert doc["role"] == "reference"
    capsys.readouterr()  # drop the first command's status line

    empty_csv = tmp_path / "empty.csv"
    empty_csv.write_text("frame_id,x,y,w,h,score\n")
    assert main(["eval", str(empty_csv), str(gt_csv)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["accuracy"] == 0.0 and doc["mr"] == 1.0


def test_eval_zero_gt_is_data_error(scene_dir, tmp_path, capsys):
    det_csv = tmp_path / "d.csv"
    det_csv.write_text("frame_id,x,y,w,h,score\n0,1,1,5,5,0.9\n")
    gt_csv = tmp_path / "empty_gt.csv"
    gt_csv.write_text("frame_id,x,y,w,h\n")
    assert main(["eval", str(det_csv), str(gt_csv)]) == 3
    assert "error:" in capsys.readouterr().err


def test_eval_curve_out(scene_dir, tmp_path):
    gt_csv = scene_dir / "gt.csv"
    det_csv = tmp_path / "d.csv"
    det_csv.write_text("frame_id,x,y,w,h,score\n0,1,1,5,5,0.9\n")
    curve = tmp_path / "curve.csv"
    assert main(["eval", str(det_csv), str(gt_csv), "--curve-out", str(curve)]) == 0
    assert curve.read_text().splitlines()[0] == "threshold,fppi,miss_rate"


def _full_cli_run(scene_dir, tmp_path):
    ladders = tmp_path / "ladders"
    config = _write_json(tmp_path / "ladder.json", LADDER_CFG)
    assert main(["distort", str(scene_dir / "manifest.json"), str(ladders),
                 "--config", str(config)]) == 0
    model = tmp_path / "model.json"
    det_dir = tmp_path / "detections"
    eval_dir = tmp_path / "run" / "eval"
    assert main(["detect", str(scene_dir / "manifest.json"),
                 str(det_dir / "ref.csv"), "--build-model", str(scene_dir / "gt.csv"),
                 "--model-out", str(model)]) == 0
    assert main(["eval", str(det_dir / "ref.csv"), str(scene_dir / "gt.csv"),
                 "--manifest", str(scene_dir / "manifest.json"),
                 "--out", str(eval_dir / "ref.json")]) == 0
    for mpath in sorted(ladders.glob("*.json")):
        seq = mpath.stem
        assert main(["detect", str(mpath), str(det_dir / f"{seq}.csv"),
                     "--model", str(model)]) == 0
        assert main(["eval", str(det_dir / f"{seq}.csv"), str(scene_dir / "gt.csv"),
                     "--manifest", str(mpath),
                     "--out", str(eval_dir / f"{seq}.json")]) == 0
    return tmp_path / "run"


def test_stability_and_report_flow(scene_dir, tmp_path):
    run_dir = _full_cli_run(scene_dir, tmp_path)
    report_path = run_dir / "report" / "run_report.json"
    assert main(["stability", str(run_dir), "--detector-id", "cli-det",
                 "--lambda", "2", "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["schema"] == 1
    assert set(report["stability"]) == {"qp", "res", "wn", "bv"}
    assert all(0.0 <= v <= 1.0 for v in report["stability"].values())
    svg = report_path.parent / "quadrangle.svg"
    assert svg.exists()

    # second detector id for the ranking step
    other = tmp_path / "other_report.json"
    assert main(["stability", str(run_dir), "--detector-id", "cli-det-b",
                 "--lambda", "2", "--out", str(other)]) == 0
    out_dir = tmp_path / "combined"
    assert main(["report", str(report_path), str(other), "--out-dir", str(out_dir)]) == 0
    rankings = (out_dir / "rankings.csv").read_text().splitlines()
    assert rankings[0] == "kind,rank,detector_id,s_value"
    assert len(rankings) == 1 + 8  # two detectors x four kinds
    assert (out_dir / "combined.svg").exists()


def test_stability_lambda_zero_centers_at_origin(scene_dir, tmp_path):
    run_dir = _full_cli_run(scene_dir, tmp_path)
    report_path = run_dir / "report" / "run_report.json"
    svg = tmp_path / "zero.svg"
    assert main(["stability", str(run_dir), "--lambda", "0",
                 "--out", str(report_path), "--svg-out", str(svg)]) == 0
    parsed = parse_chart(svg)
    det = next(p for p in parsed if p.detector_id != "ideal")
    assert abs(det.cx) < 1e-9


def test_stability_rejects_bad_omega(tmp_path, capsys):
    assert main(["stability", str(tmp_path), "--omega", "1.5"]) == 2


def test_report_conflicting_ids(scene_dir, tmp_path):
    run_dir = _full_cli_run(scene_dir, tmp_path)
    report_path = run_dir / "report" / "run_report.json"
    assert main(["stability", str(run_dir), "--out", str(report_path)]) == 0
    assert main(["report", str(report_path), str(report_path),
                 "--out-dir", str(tmp_path / "c")]) == 2


def test_detect_needs_model_source(scene_dir, tmp_path):
    assert main(["detect", str(scene_dir / "manifest.json"),
                 str(tmp_path / "out.csv")]) == 2


def test_detect_writes_csv(scene_dir, tmp_path):
    out_csv = tmp_path / "dets.csv"
    assert main(["detect", str(scene_dir / "manifest.json"), str(out_csv),
                 "--build-model", str(scene_dir / "gt.csv")]) == 0
    detections = read_detections_csv(out_csv)
    assert len(detections) > 0
