import csv
import json

import numpy as np
import pytest
from conftest import write_png_dir

from repscore.cli import main
from repscore.dataset import load_dataset


def _run(*argv):
    return main([str(a) for a in argv])


def test_synth_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert _run("synth", "--task", "lemma2", "--n", 6, "--m", 3, "--samples", 100, "--seed", 5,
                    "--out", tmp_path / name) == 0
    a, b = load_dataset(tmp_path / "a"), load_dataset(tmp_path / "b")
    np.testing.assert_array_equal(a.images, b.images)
    np.testing.assert_array_equal(a.targets, b.targets)
    assert a.images.shape == (100, 1, 6, 1) and a.targets.shape == (100, 3)
    truth = json.loads((tmp_path / "a" / "manifest.json").read_text())["ground_truth"]
    assert truth["noise_sigma"] == 0.1 and np.shape(truth["true_weights"]) == (3, 6)


def test_synth_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("REPSCORE_SEED", "9")
    _run("synth", "--task", "lemma2", "--samples", 50, "--out", tmp_path / "env")
    _run("synth", "--task", "lemma2", "--samples", 50, "--seed", 9, "--out", tmp_path / "flag")
    np.testing.assert_array_equal(load_dataset(tmp_path / "env").images, load_dataset(tmp_path / "flag").images)


def test_synth_quadratic_layout(tmp_path):
    assert _run("synth", "--task", "quadratic", "--samples", 300, "--out", tmp_path / "q") == 0
    r1, r2 = load_dataset(tmp_path / "q" / "r1"), load_dataset(tmp_path / "q" / "r2")
    np.testing.assert_allclose(r2.images, r1.images ** 2)
    np.testing.assert_array_equal(r1.targets, r2.targets)
    assert _run("synth", "--task", "quadratic", "--n", 3, "--out", tmp_path / "bad") == 2


def test_transform_dct_round_trip(tmp_path):
    write_png_dir(tmp_path / "img", [(f"{i}.png", i % 2) for i in range(6)], size=(9, 7))
    assert _run("transform", "--rep", "dct", "--in", tmp_path / "img", "--out", tmp_path / "fwd") == 0
    assert _run("transform", "--rep", "dct", "--inverse", "--in", tmp_path / "fwd", "--out", tmp_path / "back") == 0
    orig, back = load_dataset(tmp_path / "img"), load_dataset(tmp_path / "back")
    assert np.max(np.abs(orig.images - back.images)) < 1e-9


def test_transform_blockdct_round_trip_keeps_size(tmp_path):
    write_png_dir(tmp_path / "img", [(f"{i}.png", 0) for i in range(3)], size=(11, 13))
    _run("transform", "--rep", "blockdct", "--in", tmp_path / "img", "--out", tmp_path / "fwd")
    assert load_dataset(tmp_path / "fwd").image_shape == (16, 16, 3)
    _run("transform", "--rep", "blockdct", "--inverse", "--in", tmp_path / "fwd", "--out", tmp_path / "back")
    back = load_dataset(tmp_path / "back")
    assert np.max(np.abs(load_dataset(tmp_path / "img").images - back.images)) < 1e-9


def test_transform_prec_writes_transform(tmp_path):
    write_png_dir(tmp_path / "img", [(f"{i}.png", i % 3) for i in range(9)])
    assert _run("transform", "--rep", "prec", "--in", tmp_path / "img", "--out", tmp_path / "p") == 0
    saved = json.loads((tmp_path / "p" / "prec.json").read_text())
    assert np.shape(saved["matrix_u"]) == (3, 3) and saved["epsilon"] == 1e-8
    assert _run("transform", "--rep", "prec", "--inverse", "--in", tmp_path / "p", "--out", tmp_path / "b") == 0
    np.testing.assert_allclose(load_dataset(tmp_path / "b").images, load_dataset(tmp_path / "img").images, atol=1e-9)


def test_ycbcr_on_grayscale_is_usage_error(tmp_path, capsys):
    write_png_dir(tmp_path / "g", [("a.png", 0), ("b.png", 1)], mode="L")
    assert _run("transform", "--rep", "ycbcr", "--in", tmp_path / "g", "--out", tmp_path / "o") == 2
    assert "grayscale" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_input_is_usage_error(tmp_path):
    assert _run("transform", "--rep", "dct", "--in", tmp_path / "nope", "--out", tmp_path / "o") == 2


def test_analyze_writes_one_row_per_cell(tmp_path):
    _run("synth", "--task", "lemma2", "--samples", 600, "--out", tmp_path / "d")
    out = tmp_path / "res"
    assert _run("analyze", "--in", tmp_path / "d", "--reps", "rgb,dct", "--modes", "dense", "--out", out) == 0
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert [r["representation"] for r in rows] == ["rgb", "dct"]
    assert all(r["dataset"] == "d" and r["mode"] == "dense" for r in rows)
    assert all(float(r["train_loss"]) < 0.02 for r in rows)
    assert (out / "ranking.txt").read_text().startswith("# d / dense")


def test_analyze_quarantines_failing_cell(tmp_path, capsys):
    _run("synth", "--task", "lemma2", "--samples", 300, "--out", tmp_path / "vec")
    write_png_dir(tmp_path / "img", [(f"{i}.png", i % 2) for i in range(40)], size=(8, 8))
    out = tmp_path / "res"
    code = _run("analyze", "--in", tmp_path / "vec", tmp_path / "img", "--reps", "rgb",
                "--modes", "dense,conv_tile", "--runs", 2, "--out", out)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["cells"]) == 3
    assert [(e["dataset_name"], e["mode"]) for e in report["errors"]] == [("vec", "conv_tile")]
    assert "vec/rgb/conv_tile failed" in (out / "ranking.txt").read_text()


def test_analyze_all_cells_failing_exits_one(tmp_path):
    _run("synth", "--task", "lemma2", "--samples", 100, "--out", tmp_path / "vec")
    assert _run("analyze", "--in", tmp_path / "vec", "--reps", "rgb", "--modes", "conv_tile",
                "--out", tmp_path / "r") == 1


def test_analyze_rejects_unknown_representation(tmp_path):
    with pytest.raises(SystemExit) as exc:
        _run("analyze", "--in", tmp_path, "--reps", "rgb,hsv", "--out", tmp_path / "r")
    assert exc.value.code == 2


@pytest.mark.parametrize("seed", [7, 8])
def test_verify_passes(seed, capsys):
    assert _run("verify", "--seed", seed) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and f"(seed {seed})" in out


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        _run("analyze", "--help")
    text = capsys.readouterr().out
    for fragment in ("default: 0.1", "default: 256", "default: 10", "default: 1e-08"):
        assert fragment in text
