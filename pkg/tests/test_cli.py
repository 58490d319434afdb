import csv
import hashlib
import json

import numpy as np
import pytest

from binseg import itq, synth, tensor_io
from binseg.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def scene_dir(tmp_path):
    d = tmp_path / "data"
    for seed in range(2):
        synth.write_scene(synth.make_scene(8, 12, scale=8, d=16, regions=3, seed=seed), d)
    return d


def _feature_file(tmp_path, arr, name="f.btsr"):
    path = tmp_path / name
    tensor_io.write_tensor(np.asarray(arr, np.float32), path)
    return path


def test_train_hash_minimal(tmp_path, capsys):
    feat = _feature_file(tmp_path, np.random.default_rng(0).normal(0, 1, (1, 2, 2)))
    model_path = tmp_path / "m.bhsh"
    assert run("train-hash", "--features", feat, "--bits", 1, "--out", model_path) == 0
    assert "quantization loss" in capsys.readouterr().out
    model = itq.read_model(model_path)
    assert model.bits == 1 and model.dim == 2
    assert np.abs(model.projection.T @ model.projection - 1.0).max() < 1e-6
    assert np.abs(model.rotation.T @ model.rotation - 1.0).max() < 1e-6


def test_train_hash_cluster_purity(tmp_path):
    from test_itq import four_clusters

    x, owner = four_clusters()
    feat = _feature_file(tmp_path, x.reshape(20, 20, 2))
    model_path = tmp_path / "m.bhsh"
    assert run("train-hash", "--features", feat, "--bits", 2, "--out", model_path) == 0
    model = itq.read_model(model_path)
    codes = itq.encode_rows(model, x)
    keys = codes[:, 0].astype(int) * 2 + codes[:, 1].astype(int)
    purity = sum(np.bincount(keys[owner == c]).max() for c in range(4))
    assert purity / len(x) >= 0.98


def test_train_hash_mismatched_dims(tmp_path, capsys):
    f1 = _feature_file(tmp_path, np.zeros((2, 2, 3)), "a.btsr")
    f2 = _feature_file(tmp_path, np.zeros((2, 2, 4)), "b.btsr")
    out = tmp_path / "m.bhsh"
    assert run("train-hash", "--features", f1, f2, "--bits", 1, "--out", out) == 1
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_segment_three_regions(tmp_path, scene_dir):
    scene = synth.make_scene(8, 12, scale=8, d=16, regions=3, seed=0)
    model_path = tmp_path / "m.bhsh"
    assert run("train-hash", "--features", scene_dir / "scene0000.feat.btsr",
               "--bits", 8, "--out", model_path) == 0
    out = tmp_path / "labels.btsr"
    assert run("segment", "--image", scene_dir / "scene0000.ppm",
               "--features", scene_dir / "scene0000.feat.btsr",
               "--model", model_path, "--out", out, "--superpixel-k", 40) == 0
    pred = tensor_io.read_label_map(out)
    assert pred.max() + 1 == 3
    from binseg.evaluate import best_match_iou

    assert best_match_iou(pred, scene.gt).min() >= 0.9


def test_segment_deterministic_outputs(tmp_path, scene_dir):
    model_path = tmp_path / "m.bhsh"
    run("train-hash", "--features", scene_dir / "scene0000.feat.btsr", "--bits", 4,
        "--out", model_path, "--seed", 3)
    digests = []
    for name in ("a.btsr", "b.btsr"):
        out = tmp_path / name
        assert run("segment", "--image", scene_dir / "scene0000.ppm",
                   "--features", scene_dir / "scene0000.feat.btsr",
                   "--model", model_path, "--out", out, "--superpixel-k", 30) == 0
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_segment_global_scope_identical_codes(tmp_path):
    # constant feature map -> every cell encodes to the same code exactly
    train = synth.make_scene(6, 6, scale=8, d=8, regions=3, seed=1)
    train_feat = tmp_path / "train.btsr"
    tensor_io.write_tensor(train.features, train_feat)
    model_path = tmp_path / "m.bhsh"
    run("train-hash", "--features", train_feat, "--bits", 2, "--out", model_path)

    flat = np.tile(train.features[0, 0], (6, 6, 1))
    feat = tmp_path / "f.btsr"
    tensor_io.write_tensor(flat, feat)
    img = tmp_path / "i.ppm"
    tensor_io.write_image(np.full((48, 48, 3), 90, np.uint8), img)
    out = tmp_path / "l.btsr"
    assert run("segment", "--image", img, "--features", feat, "--model", model_path,
               "--out", out, "--merge-scope", "global", "--superpixel-k", 9) == 0
    labels = tensor_io.read_label_map(out)
    assert labels.max() == 0


def test_segment_missing_feature_file(tmp_path, scene_dir, capsys):
    model_path = tmp_path / "m.bhsh"
    run("train-hash", "--features", scene_dir / "scene0000.feat.btsr", "--bits", 2,
        "--out", model_path)
    missing = tmp_path / "nope.btsr"
    out = tmp_path / "l.btsr"
    assert run("segment", "--image", scene_dir / "scene0000.ppm", "--features", missing,
               "--model", model_path, "--out", out) == 1
    err = capsys.readouterr().err
    assert "nope.btsr" in err
    assert not out.exists()


def test_segment_viz_outputs(tmp_path, scene_dir):
    model_path = tmp_path / "m.bhsh"
    run("train-hash", "--features", scene_dir / "scene0000.feat.btsr", "--bits", 8,
        "--out", model_path)
    out = tmp_path / "l.btsr"
    vdir = tmp_path / "viz"
    assert run("segment", "--image", scene_dir / "scene0000.ppm",
               "--features", scene_dir / "scene0000.feat.btsr",
               "--model", model_path, "--out", out, "--viz-dir", vdir,
               "--superpixel-k", 30) == 0
    for name in ("superpixels.ppm", "binary_map.ppm", "segments.ppm", "binary_map.btsr"):
        assert (vdir / name).exists()
    bm = tensor_io.read_tensor(vdir / "binary_map.btsr")
    assert bm.shape == (8, 12, 8) and set(np.unique(bm)) <= {0, 1}


def test_baseline_egs_constant(tmp_path):
    img = tmp_path / "c.ppm"
    tensor_io.write_image(np.full((16, 16, 3), 99, np.uint8), img)
    out = tmp_path / "l.btsr"
    assert run("baseline", "--image", img, "--method", "egs", "--out", out) == 0
    assert tensor_io.read_label_map(out).max() == 0


def test_baseline_slic_quadrants(tmp_path):
    from test_superpixel import quadrant_image

    img_path = tmp_path / "q.ppm"
    tensor_io.write_image(quadrant_image(), img_path)
    out = tmp_path / "l.btsr"
    assert run("baseline", "--image", img_path, "--method", "slic", "--out", out,
               "--superpixel-k", 4) == 0
    labels = tensor_io.read_label_map(out)
    assert labels.max() + 1 == 4


def test_baseline_unknown_method(tmp_path):
    img = tmp_path / "c.ppm"
    tensor_io.write_image(np.zeros((4, 4, 3), np.uint8), img)
    with pytest.raises(SystemExit):
        run("baseline", "--image", img, "--method", "watershed", "--out", tmp_path / "x.btsr")


def test_eval_binary_map_perfect(tmp_path, scene_dir, capsys):
    out_csv = tmp_path / "r.csv"
    out_json = tmp_path / "r.json"
    assert run("eval", "--dataset", scene_dir, "--method", "binary-map",
               "--out-csv", out_csv, "--out-json", out_json, "--superpixel-k", 40) == 0
    payload = json.loads(out_json.read_text())
    assert payload["dataset_mean"] >= 0.9
    assert payload["metadata"]["method"] == "binary-map"
    rows = list(csv.reader(out_csv.open()))
    assert len(rows) - 1 == payload["segment_count"] == 6  # 3 gt segments x 2 images


def test_eval_empty_dir(tmp_path, capsys):
    empty = tmp_path / "none"
    empty.mkdir()
    assert run("eval", "--dataset", empty, "--method", "egs",
               "--out-csv", tmp_path / "r.csv", "--out-json", tmp_path / "r.json") == 1
    assert not (tmp_path / "r.csv").exists()


def test_sweep_single_k_matches_eval(tmp_path, scene_dir):
    out_csv = tmp_path / "s.csv"
    assert run("sweep", "--dataset", scene_dir, "--k-values", "40",
               "--out", out_csv) == 0
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["superpixels", "mean_iou"]
    assert len(rows) == 2
    run("eval", "--dataset", scene_dir, "--method", "binary-map",
        "--out-csv", tmp_path / "e.csv", "--out-json", tmp_path / "e.json",
        "--superpixel-k", 40)
    payload = json.loads((tmp_path / "e.json").read_text())
    assert float(rows[1][1]) == pytest.approx(payload["dataset_mean"], abs=1e-6)


def test_config_file_with_flag_override(tmp_path, scene_dir):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"bits": 2, "superpixel_k": 30}))
    model_path = tmp_path / "m.bhsh"
    assert run("train-hash", "--features", scene_dir / "scene0000.feat.btsr",
               "--config", cfg_path, "--bits", 4, "--out", model_path) == 0
    assert itq.read_model(model_path).bits == 4  # flag wins over config file


def test_viz_make_fixture(tmp_path):
    out_dir = tmp_path / "fx"
    assert run("viz", "--make-fixture", "--out-dir", out_dir, "--grid-h", 6,
               "--grid-w", 6, "--cell-scale", 4, "--feature-dim", 8,
               "--regions", 2, "--seed", 3) == 0
    files = sorted(p.name for p in out_dir.iterdir())
    assert files == ["scene0003.feat.btsr", "scene0003.gt.btsr", "scene0003.ppm"]


def test_viz_label_map_render(tmp_path):
    labels = np.array([[0, 1], [2, 3]], np.int32)
    lpath = tmp_path / "l.btsr"
    tensor_io.write_label_map(labels, lpath)
    out = tmp_path / "l.ppm"
    assert run("viz", "--label-map", lpath, "--out", out, "--scale", 3) == 0
    img = tensor_io.read_image(out)
    assert img.shape == (6, 6, 3)
    assert len(np.unique(img.reshape(-1, 3), axis=0)) == 4


def test_eval_multiple_ground_truths(tmp_path):
    # each annotator's map contributes its own segments to the pool
    d = tmp_path / "data"
    scene = synth.make_scene(8, 12, scale=8, d=16, regions=3, seed=0)
    synth.write_scene(scene, d, "img")
    tensor_io.write_label_map(scene.gt, d / "img.gt2.btsr")
    out_json = tmp_path / "r.json"
    assert run("eval", "--dataset", d, "--method", "binary-map",
               "--out-csv", tmp_path / "r.csv", "--out-json", out_json,
               "--superpixel-k", 40) == 0
    payload = json.loads(out_json.read_text())
    assert payload["segment_count"] == 6  # 3 segments from each of 2 gt maps
