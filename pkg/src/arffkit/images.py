"""Image regression datasets and the four-approach pipeline.

An image becomes a coordinate regression problem: pixel centers map to
points in [0,1]^2, RGB values (scaled into [0,1]^3) are the targets. The
train/test split is by coordinate parity: pixels with both indices even
train, pixels with both indices odd test, so the test set interleaves the
training grid at the same spacing and the two never share a point.

The pipeline compares four architectures on that problem:

    1   cosine feature layer initialized from a short frequency-sampling
        run on the training pixels, then two ReLU layers
    2   same shape, cosine layer initialized like every other layer
    3   three ReLU layers, no feature layer
    4   four ReLU layers, no feature layer

All four end in a sigmoid RGB output and train under Adam on the mean
squared error. Quality is reported as test-set PSNR.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from . import mlp
from .arff import ArffConfig, ResampleRule, train as arff_train
from .exceptions import ConfigError, DegenerateDataError
from .lsq import COSINE_BIAS
from .rng import generator, subseed
from .targets import Dataset

__all__ = [
    "APPROACHES",
    "image_model",
    "image_to_datasets",
    "ingest_image",
    "pretrain_frequencies",
    "run_image_pipeline",
    "synthetic_image",
]

APPROACHES = (1, 2, 3, 4)

# step-1 sampler settings for approach 1: pure resampling random walk,
# small ridge, unit step, full batch, zero-initialized frequencies
PRETRAIN_DEFAULTS = dict(
    n_iterations=20,
    proposal_step=1.0,
    regularization=1e-4,
)

# derivation contexts for per-stage seeds
_SEED_PRETRAIN = 11
_SEED_MODEL = 12
_SEED_SHUFFLE = 13


def synthetic_image(size=64, stripe_cycles=3, diagonal=False):
    """Deterministic RGB test card: smooth gradients plus stripes.

    The gradients give every channel a low-frequency component; the stripe
    term adds ``stripe_cycles`` full periods (along the row axis, or along
    the diagonal when requested), which a coordinate network only resolves
    with a decent feature layer. Values lie in [0, 1] with max exactly 1.
    """
    if size < 2:
        raise ConfigError(f"image size must be >= 2, got {size}")
    u = np.linspace(0.0, 1.0, size)
    xx, yy = np.meshgrid(u, u, indexing="ij")
    phase = xx + yy if diagonal else xx
    stripes = 0.5 + 0.5 * np.sin(2.0 * np.pi * stripe_cycles * phase)
    img = np.empty((size, size, 3))
    img[:, :, 0] = 0.15 + 0.45 * xx + 0.30 * stripes
    img[:, :, 1] = 0.15 + 0.45 * yy + 0.30 * stripes
    img[:, :, 2] = 0.10 + 0.25 * (xx + yy) + 0.30 * stripes
    img /= img.max()
    return np.clip(img, 0.0, 1.0)


def _pixel_coords(n_rows, n_cols, rows, cols):
    span_r = max(n_rows - 1, 1)
    span_c = max(n_cols - 1, 1)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return np.column_stack([rr.ravel() / span_r, cc.ravel() / span_c])


def image_to_datasets(image):
    """Parity split of an RGB array into train/test coordinate datasets.

    Returns (train, test, max_intensity) where max_intensity is the largest
    value present in the full image, the PSNR reference peak.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DegenerateDataError(f"expected an RGB array (h, w, 3), got {image.shape}")
    if image.shape[0] < 2 or image.shape[1] < 2:
        raise DegenerateDataError(f"image too small for a parity split: {image.shape}")
    n_rows, n_cols = image.shape[:2]
    splits = []
    for offset in (0, 1):
        rows = np.arange(offset, n_rows, 2)
        cols = np.arange(offset, n_cols, 2)
        coords = _pixel_coords(n_rows, n_cols, rows, cols)
        values = image[np.ix_(rows, cols)].reshape(-1, 3)
        splits.append(Dataset(inputs=coords, outputs=values, provenance="image"))
    return splits[0], splits[1], float(image.max())


def ingest_image(path, crop=128):
    """Load an RGB image file, center-crop, and split by pixel parity.

    Pixel values are scaled by 1/255 into [0,1]; coordinates into [0,1]^2.
    Raises on unreadable files and on images smaller than the crop.
    """
    try:
        with Image.open(path) as handle:
            rgb = handle.convert("RGB")
            arr = np.asarray(rgb, dtype=float) / 255.0
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise DegenerateDataError(f"cannot read image {path}: {exc}") from exc
    n_rows, n_cols = arr.shape[:2]
    crop = int(crop)
    if crop < 2:
        raise ConfigError(f"crop must be >= 2, got {crop}")
    if n_rows < crop or n_cols < crop:
        raise DegenerateDataError(
            f"image {path} is {n_rows}x{n_cols}, smaller than the {crop}x{crop} crop"
        )
    r0 = (n_rows - crop) // 2
    c0 = (n_cols - crop) // 2
    return image_to_datasets(arr[r0:r0 + crop, c0:c0 + crop])


def pretrain_frequencies(train, width, seed, n_iterations=None,
                         proposal_step=None, regularization=None):
    """Short frequency-sampling run on the training pixels (step 1).

    Runs the resample-every-iteration random walk (no Metropolis test) with
    cosine features from zero-initialized bias-extended frequencies, full
    batch. Returns the final (width, 3) frequency matrix for a 2-D input.
    """
    opts = dict(PRETRAIN_DEFAULTS)
    if n_iterations is not None:
        opts["n_iterations"] = int(n_iterations)
    if proposal_step is not None:
        opts["proposal_step"] = float(proposal_step)
    if regularization is not None:
        opts["regularization"] = float(regularization)
    config = ArffConfig(
        n_features=int(width),
        activation=COSINE_BIAS,
        resample_rule=ResampleRule(fraction=1.0),
        adaptive=False,
        rng_seed=int(seed),
        **opts,
    )
    result = arff_train(config, train)
    return result.frequencies


def image_model(approach, width, rng, input_dim=2, output_dim=3, first_layer=None):
    """Build the network for one pipeline approach.

    Approach 1 requires ``first_layer`` = (weight, bias) from a pretrained
    frequency set; the other approaches ignore it.
    """
    approach = int(approach)
    if approach not in APPROACHES:
        raise ConfigError(f"approach must be one of {APPROACHES}, got {approach}")
    width = int(width)
    if approach in (1, 2):
        sizes = [input_dim, width, width, width, output_dim]
        acts = ("cos", "relu", "relu", "sigmoid")
    elif approach == 3:
        sizes = [input_dim, width, width, width, output_dim]
        acts = ("relu", "relu", "relu", "sigmoid")
    else:
        sizes = [input_dim, width, width, width, width, output_dim]
        acts = ("relu", "relu", "relu", "relu", "sigmoid")
    model = mlp.init_mlp(sizes, acts, rng)
    if approach == 1:
        if first_layer is None:
            raise ConfigError("approach 1 needs the pretrained first layer")
        weight, bias = first_layer
        if weight.shape != model.weights[0].shape:
            raise ConfigError(
                f"pretrained layer shape {weight.shape} does not match "
                f"width {width} and input dimension {input_dim}"
            )
        model = mlp.MlpModel(
            weights=(np.array(weight, dtype=float),) + model.weights[1:],
            biases=(np.array(bias, dtype=float),) + model.biases[1:],
            activations=model.activations,
        )
    return model


def run_image_pipeline(image, seed, approaches=APPROACHES, width=256, epochs=200,
                       batch_size=256, learning_rate=1e-3, pretrain_iterations=None,
                       freeze_first_layer=False):
    """Train each approach on one image; returns per-approach records.

    Every approach gets its own derived seeds for initialization and batch
    shuffling, all rooted at ``seed``, so runs are reproducible and the
    approaches differ only where they should. The record per approach holds
    the test PSNR, final train/test MSE, and the per-epoch curves.
    """
    train, test, max_i = image_to_datasets(np.asarray(image, dtype=float))
    records = {}
    for approach in approaches:
        approach = int(approach)
        first_layer = None
        if approach == 1:
            freqs = pretrain_frequencies(
                train, width, subseed(seed, _SEED_PRETRAIN, approach),
                n_iterations=pretrain_iterations,
            )
            first_layer = mlp.rff_layer_from_arff(freqs, train.dimension)
        model = image_model(
            approach, width,
            generator(subseed(seed, _SEED_MODEL, approach)),
            input_dim=train.dimension,
            first_layer=first_layer,
        )
        model, curves = mlp.train_adam(
            model, train.inputs, train.outputs,
            epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
            rng=generator(subseed(seed, _SEED_SHUFFLE, approach)),
            eval_inputs=test.inputs, eval_targets=test.outputs,
            freeze_first_layer=freeze_first_layer and approach == 1,
        )
        pred = mlp.forward(model, test.inputs)
        records[approach] = {
            "psnr": mlp.psnr(pred, test.outputs, max_intensity=max_i),
            "train_mse": float(curves["train_mse"][-1]) if len(curves["epoch"]) else mlp.mse(model, train.inputs, train.outputs),
            "test_mse": float(np.mean((pred - test.outputs) ** 2)),
            "curves": curves,
            "model": model,
        }
    return records
