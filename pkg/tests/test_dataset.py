import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from repscore.dataset import (
    EmptyManifestError,
    ImageShapeError,
    LabeledDataset,
    MissingImageError,
    SyntheticSpec,
    TargetParseError,
    default_lemma2_spec,
    load_dataset,
    load_image_dir,
    make_quadratic_task,
    make_synthetic_regression,
    make_texture_classification,
    save_dataset,
    split_dataset,
)
from repscore.pipeline import linear_probe_mse

from conftest import write_png_dir


def test_manifest_three_rows_two_labels(tmp_path):
    write_png_dir(tmp_path, [("a.png", "cat"), ("b.png", "dog"), ("c.png", "cat")])
    ds = load_image_dir(tmp_path, tmp_path / "manifest.csv")
    assert len(ds) == 3
    assert ds.targets.shape == (3, 2)
    assert ds.class_names == ("cat", "dog")
    np.testing.assert_array_equal(ds.targets, [[1, 0], [0, 1], [1, 0]])
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0


def test_all_max_pixels_normalise_to_one(tmp_path):
    write_png_dir(tmp_path, [("w.png", "x")], fill=255)
    ds = load_image_dir(tmp_path)
    assert ds.image_shape == (8, 8, 3)
    assert np.all(ds.samples[0].data == 1.0)


def test_sixteen_bit_grayscale(tmp_path):
    arr = np.full((5, 6), 65535, dtype=np.uint16)
    arr[0, 0] = 0
    Image.fromarray(arr).save(tmp_path / "g.png")
    (tmp_path / "manifest.csv").write_text("path,target\ng.png,1.5;2\n")
    ds = load_image_dir(tmp_path, task_kind="regression")
    assert ds.image_shape == (5, 6, 1)
    assert ds.images.max() == 1.0 and ds.images.min() == 0.0
    np.testing.assert_array_equal(ds.targets, [[1.5, 2.0]])


def test_missing_file_names_row(tmp_path):
    write_png_dir(tmp_path, [("a.png", "x")])
    (tmp_path / "manifest.csv").write_text("path,target\na.png,x\nghost.png,y\n")
    with pytest.raises(MissingImageError) as exc:
        load_image_dir(tmp_path)
    assert exc.value.row == 2
    assert "row 2" in str(exc.value)


def test_shape_mismatch_names_row(tmp_path):
    write_png_dir(tmp_path, [("a.png", "x")])
    write_png_dir(tmp_path / "sub", [("b.png", "y")], size=(9, 8))
    (tmp_path / "manifest.csv").write_text("path,target\na.png,x\nsub/b.png,y\n")
    with pytest.raises(ImageShapeError) as exc:
        load_image_dir(tmp_path)
    assert exc.value.row == 2


def test_non_numeric_regression_target(tmp_path):
    write_png_dir(tmp_path, [("a.png", "0.5"), ("b.png", "abc")])
    with pytest.raises(TargetParseError) as exc:
        load_image_dir(tmp_path, task_kind="regression")
    assert exc.value.row == 2


def test_empty_manifest(tmp_path):
    (tmp_path / "manifest.csv").write_text("path,target\n")
    with pytest.raises(EmptyManifestError):
        load_image_dir(tmp_path)


def test_error_classes_are_distinct():
    kinds = {EmptyManifestError, MissingImageError, ImageShapeError, TargetParseError}
    assert len(kinds) == 4
    assert not issubclass(MissingImageError, ImageShapeError)


def test_zero_noise_targets_exact(rng):
    spec = SyntheticSpec(np.diag([1.0, 2.0, 3.0]), rng.normal(size=(2, 3)), 0.0, 50, seed=4)
    ds = make_synthetic_regression(spec)
    x = ds.images.reshape(50, 3)
    assert ds.image_shape == (1, 3, 1)
    np.testing.assert_allclose(ds.targets, x @ spec.true_weights.T, rtol=1e-12, atol=0)


def test_identity_covariance_law_of_large_numbers():
    spec = SyntheticSpec(np.eye(5), np.zeros((1, 5)), 0.1, 10_000, seed=11)
    x = make_synthetic_regression(spec).images.reshape(10_000, 5)
    assert np.abs(np.cov(x.T) - np.eye(5)).max() < 0.1


def test_synthetic_deterministic():
    spec = default_lemma2_spec(seed=9)
    a, b = make_synthetic_regression(spec), make_synthetic_regression(spec)
    assert a.images.tobytes() == b.images.tobytes()
    assert a.targets.tobytes() == b.targets.tobytes()


def test_non_pd_covariance_rejected():
    with pytest.raises(ValueError, match="positive definite"):
        make_synthetic_regression(SyntheticSpec(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones((1, 2)), 0.1, 10))


def test_covariance_scale_scales_design_exactly():
    a = make_synthetic_regression(default_lemma2_spec(cov_scale=1.0, seed=2)).images
    b = make_synthetic_regression(default_lemma2_spec(cov_scale=4.0, seed=2)).images
    np.testing.assert_allclose(b, 2.0 * a, rtol=1e-12)


def test_quadratic_zero_noise_shares_targets():
    r1, r2 = make_quadratic_task(100, 0.0, seed=3)
    x = r1.images.ravel()
    np.testing.assert_array_equal(r1.targets, r2.targets)
    np.testing.assert_allclose(r2.images.ravel(), x**2)
    np.testing.assert_allclose(r1.targets.ravel(), x**2)


def test_quadratic_precondition():
    with pytest.raises(ValueError):
        make_quadratic_task(9, 0.1)


def test_quadratic_residuals_match_uniform_moments():
    # affine fit of x^2 on x over U[0,1]: Var(x^2) - Cov(x,x^2)^2/Var(x) = 4/45 - 1/12 = 1/180
    r1, r2 = make_quadratic_task(200_000, 0.0, seed=5)
    assert linear_probe_mse(r1) == pytest.approx(1 / 180, rel=0.02)
    assert linear_probe_mse(r2) < 1e-20


def test_split_sizes():
    ds = LabeledDataset(np.zeros((10, 1, 1, 1)), np.zeros((10, 1)))
    s = split_dataset(ds, (0.8, 0.1, 0.1), seed=0).split
    assert (len(s["train"]), len(s["val"]), len(s["test"])) == (8, 1, 1)


def test_split_degenerate_and_deterministic():
    ds = LabeledDataset(np.zeros((7, 1, 1, 1)), np.zeros((7, 1)))
    s = split_dataset(ds, (1, 0, 0), seed=1).split
    assert s["train"].tolist() == list(range(7))
    a = split_dataset(ds, (0.5, 0.25, 0.25), seed=3).split
    b = split_dataset(ds, (0.5, 0.25, 0.25), seed=3).split
    assert all(np.array_equal(a[k], b[k]) for k in a)


@pytest.mark.parametrize("fractions", [(0.5, 0.5, 0.5), (-0.1, 0.6, 0.5), (1.0, 0.0)])
def test_split_bad_fractions(fractions):
    ds = LabeledDataset(np.zeros((5, 1, 1, 1)), np.zeros((5, 1)))
    with pytest.raises(ValueError):
        split_dataset(ds, fractions)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(3, 200), w=st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3), seed=st.integers(0, 2**32))
def test_split_partitions(n, w, seed):
    total = sum(w)
    if total == 0:
        w, total = [1, 0, 0], 1
    fr = [v / total for v in w]
    fr[0] = max(0.0, 1.0 - fr[1] - fr[2])
    ds = LabeledDataset(np.zeros((n, 1, 1, 1)), np.zeros((n, 1)))
    s = split_dataset(ds, fr, seed).split
    parts = [set(s[k].tolist()) for k in ("train", "val", "test")]
    assert sum(map(len, parts)) == n
    assert set().union(*parts) == set(range(n))


def test_one_hot_invariant_enforced():
    with pytest.raises(ValueError, match="one-hot"):
        LabeledDataset(np.zeros((2, 1, 1, 1)), [[1.0, 1.0], [0.0, 1.0]], task_kind="classification", class_names=("a", "b"))


def test_textures_are_valid_images():
    ds = make_texture_classification(n_per_class=5, size=16, n_classes=3, seed=1)
    assert len(ds) == 15 and ds.class_count == 3
    assert ds.images.min() >= 0 and ds.images.max() <= 1


def test_save_load_roundtrip(tmp_path):
    ds = split_dataset(make_texture_classification(4, 9, 2, seed=2), (0.5, 0.25, 0.25), 1)
    save_dataset(ds, tmp_path / "d")
    back = load_dataset(tmp_path / "d")
    assert back.images.tobytes() == ds.images.tobytes()
    assert back.class_names == ds.class_names
    assert np.array_equal(back.split["val"], ds.split["val"])
