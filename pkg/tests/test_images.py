"""Image regression pipeline pieces."""

import numpy as np
import pytest

from arffkit.exceptions import DegenerateDataError
from arffkit.images import (
    APPROACHES,
    image_model,
    image_to_datasets,
    ingest_image,
    pretrain_frequencies,
    run_image_pipeline,
    synthetic_image,
)
from arffkit.mlp import forward


def test_synthetic_image_shape_and_range():
    img = synthetic_image(size=32)
    assert img.shape == (32, 32, 3)
    assert img.dtype == np.float64
    assert img.min() >= 0.0 and img.max() <= 1.0
    assert img.max() == 1.0  # normalized to full scale
    # channels are genuinely different
    assert not np.array_equal(img[..., 0], img[..., 2])


def test_synthetic_image_stripes_show_up():
    img = synthetic_image(size=64, stripe_cycles=3)
    # stripe direction: variation along rows (axis 0), constant along cols
    col_var = img[:, :, 0].var(axis=1).mean()
    row_profile = img[:, 5, 0]
    assert np.allclose(img[:, :, 0], img[:, :1, 0], atol=1e-12) or col_var >= 0
    # 3 full periods means 3 prominent maxima in one column profile
    peaks = np.sum((row_profile[1:-1] > row_profile[:-2])
                   & (row_profile[1:-1] > row_profile[2:]))
    assert peaks >= 2
    diag = synthetic_image(size=64, diagonal=True)
    assert not np.array_equal(img, diag)


def test_synthetic_image_deterministic():
    assert np.array_equal(synthetic_image(48), synthetic_image(48))


def test_parity_split_covers_quarters():
    img = synthetic_image(size=16)
    train, test, peak = image_to_datasets(img)
    # even/even and odd/odd pixel lattices of a 16x16 grid: 64 points each
    assert train.inputs.shape == (64, 2)
    assert test.inputs.shape == (64, 2)
    assert train.outputs.shape == (64, 3)
    assert peak == pytest.approx(img.max())
    # coordinate grids are disjoint
    train_pts = {tuple(p) for p in train.inputs}
    test_pts = {tuple(p) for p in test.inputs}
    assert not train_pts & test_pts
    # coordinates live in [0, 1]
    all_pts = np.vstack([train.inputs, test.inputs])
    assert all_pts.min() >= 0.0 and all_pts.max() <= 1.0


def test_parity_split_reads_correct_pixels():
    img = synthetic_image(size=8)
    train, test, _ = image_to_datasets(img)
    # the first training point is pixel (0, 0), first test point is (1, 1)
    assert np.array_equal(train.outputs[0], img[0, 0])
    assert np.array_equal(test.outputs[0], img[1, 1])


def test_ingest_image_round_trip(tmp_path):
    from PIL import Image
    rgb = (synthetic_image(40) * 255).astype(np.uint8)
    path = tmp_path / "t.png"
    Image.fromarray(rgb).save(path)
    train, test, peak = ingest_image(path, crop=32)
    # center crop keeps rows/cols 4..35; parity split of a 32x32 crop
    assert train.inputs.shape == (256, 2)
    assert test.inputs.shape == (256, 2)
    cropped = rgb[4:36, 4:36] / 255.0
    assert peak == pytest.approx(cropped.max())
    # first even/even pixel of the crop
    assert np.allclose(train.outputs[0], cropped[0, 0], atol=1e-12)
    assert np.allclose(test.outputs[0], cropped[1, 1], atol=1e-12)


def test_ingest_image_rejects_bad_files(tmp_path):
    from PIL import Image
    rgb = (synthetic_image(16) * 255).astype(np.uint8)
    path = tmp_path / "small.png"
    Image.fromarray(rgb).save(path)
    with pytest.raises(DegenerateDataError):
        ingest_image(path, crop=64)
    with pytest.raises(FileNotFoundError):
        ingest_image(tmp_path / "missing.png", crop=8)
    garbage = tmp_path / "garbage.png"
    garbage.write_bytes(b"not an image at all")
    with pytest.raises(DegenerateDataError):
        ingest_image(garbage, crop=8)


def test_image_model_architectures():
    rng = np.random.default_rng(0)
    shapes = {
        1: [(12, 2), (12, 12), (12, 12), (3, 12)],
        2: [(12, 2), (12, 12), (12, 12), (3, 12)],
        3: [(12, 2), (12, 12), (12, 12), (3, 12)],
        4: [(12, 2), (12, 12), (12, 12), (12, 12), (3, 12)],
    }
    acts = {
        1: ("cos", "relu", "relu", "sigmoid"),
        2: ("cos", "relu", "relu", "sigmoid"),
        3: ("relu", "relu", "relu", "sigmoid"),
        4: ("relu", "relu", "relu", "relu", "sigmoid"),
    }
    for a in APPROACHES:
        first = None
        if a == 1:
            first = (np.zeros((12, 2)), np.zeros(12))
        model = image_model(a, width=12, rng=rng, first_layer=first)
        assert [w.shape for w in model.weights] == shapes[a]
        assert model.activations == acts[a]


def test_image_model_approach1_uses_pretrained_layer():
    rng = np.random.default_rng(1)
    w1 = rng.standard_normal((8, 2))
    b1 = rng.standard_normal(8)
    model = image_model(1, width=8, rng=rng, first_layer=(w1, b1))
    assert np.array_equal(model.weights[0], w1)
    assert np.array_equal(model.biases[0], b1)
    with pytest.raises(ValueError):
        image_model(1, width=8, rng=rng)  # approach 1 demands the layer
    with pytest.raises(ValueError):
        image_model(5, width=8, rng=rng)


def test_pretrain_frequencies_shapes_and_determinism():
    train, _, _ = image_to_datasets(synthetic_image(12))
    f1 = pretrain_frequencies(train, width=6, seed=4, n_iterations=3)
    f2 = pretrain_frequencies(train, width=6, seed=4, n_iterations=3)
    assert f1.shape == (6, 3)  # 2 coordinates + bias column
    assert np.array_equal(f1, f2)
    f3 = pretrain_frequencies(train, width=6, seed=5, n_iterations=3)
    assert not np.array_equal(f1, f3)


def test_run_image_pipeline_smoke():
    img = synthetic_image(12)
    out = run_image_pipeline(img, seed=0, approaches=(1, 3), width=8,
                             epochs=2, batch_size=32, pretrain_iterations=2)
    assert set(out) == {1, 3}
    for a, rec in out.items():
        assert np.isfinite(rec["psnr"])
        assert rec["train_mse"] >= 0 and rec["test_mse"] >= 0
        assert len(rec["curves"]["epoch"]) == 2
        pred = forward(rec["model"], np.array([[0.5, 0.5]]))
        assert pred.shape == (1, 3)
    # rerun is bitwise identical
    again = run_image_pipeline(img, seed=0, approaches=(1, 3), width=8,
                               epochs=2, batch_size=32, pretrain_iterations=2)
    for a in (1, 3):
        assert out[a]["psnr"] == again[a]["psnr"]
        assert np.array_equal(out[a]["model"].weights[0],
                              again[a]["model"].weights[0])
