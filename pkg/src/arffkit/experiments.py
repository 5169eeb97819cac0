"""Experiment drivers: sweeps, realizations, aggregation, file layout.

An experiment is a named study (kind) over a grid of sampler settings,
repeated over independent realizations. Every run gets its own seeds
derived from (master seed, group index, realization index), never from the
variant name, so variants compare against each other on identical data,
identical batch draws, and identical proposal increments. The output tree
under ``out_dir`` is

    manifest.json                 config echo, package version, run table
    summary.json                  per-group digest (min/final errors)
    runs/<group>_r<i>/trace.csv   per-iteration trace (deterministic)
    runs/<group>_r<i>/summary.json
    runs/<group>_r<i>/timing.csv  wall clock, machine-dependent
    aggregate/<group>_stats.csv   per-iteration mean/std/±2 std across runs
    aggregate/convergence.csv     one row per group: minima, finals, bound

plus kind-specific extras (kde/ tables for the init study, curves for the
pretraining comparison, psnr.csv for images). Reruns with the same master
seed reproduce every file byte for byte except the timing files.

Desk-scale defaults keep each kind in the minutes range; ``paper_scale``
restores the published table values.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import images as images_mod
from . import mlp
from .arff import ArffConfig, train, variant_rules
from .exceptions import ConfigError
from .kde import kde
from .lsq import COSINE_BIAS
from .rng import generator, subseed
from .serialize import (
    write_csv,
    write_json,
    write_summary_json,
    write_timing_csv,
    write_trace_csv,
)
from .targets import (
    apply_normalization,
    default_spec,
    error_bound_constant,
    generate_dataset,
    normalize,
    optimal_density_marginal,
)

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "aggregate_stats",
    "experiment_config",
    "kind_defaults",
    "run_experiment",
]

KINDS = (
    "test1_stats",
    "test2_fulldata",
    "test3_gamma",
    "test4_batch",
    "test5_init",
    "test6_pretrain",
    "image_pipeline",
)

# seed-derivation contexts; variant deliberately absent so variants couple
_CTX_DATA = 0
_CTX_RUN = 1
_CTX_MODEL = 2
_CTX_SHUFFLE = 3

_DESK = {
    "test1_stats": dict(
        k_values=(32, 64), deltas=(2 ** -0.75, 2 ** -1.0),
        variants=("am", "am-r"), n_iterations=1000, realizations=8,
        batch_rule="root34",
    ),
    "test2_fulldata": dict(
        k_values=(32, 64, 128), deltas=(2 ** -0.75, 2 ** -1.0, 2 ** -1.25),
        variants=("am", "am-r"), n_iterations=2000, realizations=1,
        batch_rule="full",
    ),
    "test3_gamma": dict(
        k_values=(64,), deltas=(2 ** -1.0,), gammas=(1.0, 10.0),
        variants=("am", "am-r"), n_iterations=2000, realizations=3,
        batch_rule="full",
    ),
    "test4_batch": dict(
        k_values=(64,), deltas=(2 ** -1.0,), batch_sizes=(256,),
        variants=("am", "rw-r"), n_iterations=2000, realizations=3,
        batch_rule="explicit",
    ),
    "test5_init": dict(
        k_values=(64,), deltas=(2 ** -1.0,), init_spreads=(0.0, 2.0),
        variants=("am-r",), n_iterations=1000, realizations=1,
        batch_rule="full", kde_iterations=(0, 50, 200, 1000),
    ),
    "test6_pretrain": dict(
        k_values=(64,), deltas=(2 ** -1.0,), variants=("rw-r",),
        n_iterations=200, realizations=3, batch_rule="full",
        epochs=100, learning_rate=5e-4, adam_batch=128,
    ),
    "image_pipeline": dict(
        realizations=3, epochs=200, learning_rate=1e-3, adam_batch=256,
        width=256, approaches=(1, 2, 3, 4), image_size=64, crop=128,
    ),
}

_PAPER = {
    "test1_stats": dict(
        k_values=(32, 64, 128, 256, 512),
        deltas=(2 ** -0.75, 2 ** -1.0, 2 ** -1.25, 2 ** -1.5, 2 ** -1.75),
        n_iterations=10_000, realizations=100,
    ),
    "test2_fulldata": dict(
        k_values=(32, 64, 128, 256, 512, 1024),
        deltas=(2 ** -0.75, 2 ** -1.0, 2 ** -1.25, 2 ** -1.5, 2 ** -1.75, 2 ** -2.0),
        n_iterations=10_000,
    ),
    "test3_gamma": dict(n_iterations=10_000, realizations=10),
    "test4_batch": dict(n_iterations=10_000, realizations=10),
    "test5_init": dict(n_iterations=10_000, kde_iterations=(0, 100, 1000, 10_000)),
    "test6_pretrain": dict(n_iterations=10_000, epochs=400),
    "image_pipeline": dict(crop=512, epochs=2000, image_size=512),
}


def kind_defaults(kind, paper_scale=False):
    """Parameter table for one experiment kind at the requested scale."""
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}, expected one of {KINDS}")
    table = dict(_DESK[kind])
    if paper_scale:
        table.update(_PAPER.get(kind, {}))
    return table


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; unused axes stay empty.

    ``deltas`` pairs with ``k_values`` positionally. ``batch_rule`` picks
    the per-iteration batch size from M = K^2: "full" uses all M points,
    "root34" uses ceil(M^(3/4)) (the statistics study's choice), and
    "explicit" takes the values in ``batch_sizes``.
    """

    kind: str
    out_dir: str
    master_seed: int = 0
    realizations: int = 1
    workers: int = 1
    paper_scale: bool = False

    k_values: tuple = ()
    deltas: tuple = ()
    variants: tuple = ()
    n_iterations: int = 1000
    exponent: float = 10.0
    regularization: float = 0.1
    batch_rule: str = "full"
    batch_sizes: tuple = ()
    gammas: tuple = ()
    init_spreads: tuple = ()

    alpha: float = 0.01
    rotated: bool = True
    test_size: int = 1000

    kde_iterations: tuple = ()
    kde_axes: tuple = (0, 1)

    epochs: int = 200
    learning_rate: float = 1e-3
    adam_batch: int = 256
    width: int = 256
    approaches: tuple = (1, 2, 3, 4)
    image_path: str | None = None
    image_size: int = 64
    crop: int = 128
    stripe_cycles: int = 3
    pretrain_iterations: int = 20
    freeze_first_layer: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.kind != "image_pipeline":
            if not self.k_values:
                raise ConfigError(f"{self.kind} needs a nonempty k_values list")
            if len(self.deltas) != len(self.k_values):
                raise ConfigError(
                    f"{len(self.k_values)} K values need as many step sizes, "
                    f"got {len(self.deltas)}"
                )
            if not self.variants:
                raise ConfigError("variants list must be nonempty")
            for name in self.variants:
                variant_rules(name)
        if self.kind == "test3_gamma" and not self.gammas:
            raise ConfigError("test3_gamma needs a nonempty gammas list")
        if self.kind == "test4_batch" and not self.batch_sizes:
            raise ConfigError("test4_batch needs a nonempty batch_sizes list")
        if self.kind == "test5_init" and not self.init_spreads:
            raise ConfigError("test5_init needs a nonempty init_spreads list")
        if self.batch_rule not in ("full", "root34", "explicit"):
            raise ConfigError(f"unknown batch rule {self.batch_rule!r}")


def experiment_config(kind, out_dir, paper_scale=False, **overrides):
    """Build an ExperimentConfig from the kind's defaults plus overrides."""
    params = kind_defaults(kind, paper_scale)
    params.update(overrides)
    fields = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(params) - fields)
    if unknown:
        raise ConfigError(f"unknown config fields {unknown}")
    return ExperimentConfig(kind=kind, out_dir=out_dir, paper_scale=paper_scale, **params)


def _target_spec(config):
    return default_spec(rotated=config.rotated, alpha=config.alpha)


def _batch_size(config, m, explicit=None):
    if config.batch_rule == "full":
        return m
    if config.batch_rule == "root34":
        return int(np.ceil(m ** 0.75))
    return int(explicit)


def aggregate_stats(traces):
    """Per-iteration mean/std/±2 std across runs for the error and ESS columns.

    Sample std uses ddof=1; a single run gets zero std rather than NaN.
    """
    if not traces:
        raise ConfigError("no traces to aggregate")
    n = {len(t) for t in traces}
    if len(n) != 1:
        raise ConfigError(f"traces disagree on length: {sorted(n)}")

    def stats(field_name):
        block = np.stack([getattr(t, field_name) for t in traces])
        mean = block.mean(axis=0)
        std = block.std(axis=0, ddof=1) if block.shape[0] > 1 else np.zeros(block.shape[1])
        return mean, std

    out = {"iter": traces[0].iteration}
    for name, key in (("train_err", "train"), ("test_err", "test"), ("ess", "ess")):
        mean, std = stats(name)
        out[f"{key}_mean"] = mean
        out[f"{key}_std"] = std
        if key != "ess":
            out[f"{key}_lo"] = mean - 2.0 * std
            out[f"{key}_hi"] = mean + 2.0 * std
    return out


_STATS_COLUMNS = (
    "iter", "train_mean", "train_std", "train_lo", "train_hi",
    "test_mean", "test_std", "test_lo", "test_hi", "ess_mean", "ess_std",
)

_CONVERGENCE_COLUMNS = (
    "variant", "k", "delta", "gamma", "init_spread", "m", "m_b", "realizations",
    "min_train_mean", "min_train_std", "final_train_mean", "final_train_std",
    "min_test_mean", "final_test_mean", "bound",
)


@dataclass
class _Group:
    """One cell of the sweep grid: a variant at fixed parameters."""

    name: str
    variant: str
    k: int
    delta: float
    m: int
    m_b: int
    gamma: float
    init_spread: float = 0.0
    k_index: int = 0
    extra_index: int = 0
    runs: list = field(default_factory=list)
    traces: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)


def _sweep_groups(config):
    """The grid of run groups for the sampler-study kinds."""
    groups = []
    for ki, (k, delta) in enumerate(zip(config.k_values, config.deltas)):
        m = k * k
        if config.kind == "test3_gamma":
            for gi, gamma in enumerate(config.gammas):
                for variant in config.variants:
                    groups.append(_Group(
                        name=f"{variant}_K{k}_g{_num(gamma)}", variant=variant,
                        k=k, delta=delta, m=m, m_b=_batch_size(config, m),
                        gamma=float(gamma), k_index=ki, extra_index=gi,
                    ))
        elif config.kind == "test4_batch":
            for bi, m_b in enumerate(config.batch_sizes):
                for variant in config.variants:
                    groups.append(_Group(
                        name=f"{variant}_K{k}_MB{int(m_b)}", variant=variant,
                        k=k, delta=delta, m=m, m_b=int(m_b),
                        gamma=config.exponent, k_index=ki, extra_index=bi,
                    ))
        elif config.kind == "test5_init":
            for si, spread in enumerate(config.init_spreads):
                for variant in config.variants:
                    groups.append(_Group(
                        name=f"{variant}_K{k}_s{_num(spread)}", variant=variant,
                        k=k, delta=delta, m=m, m_b=_batch_size(config, m),
                        gamma=config.exponent, init_spread=float(spread),
                        k_index=ki, extra_index=si,
                    ))
        else:
            for variant in config.variants:
                groups.append(_Group(
                    name=f"{variant}_K{k}", variant=variant,
                    k=k, delta=delta, m=m, m_b=_batch_size(config, m),
                    gamma=config.exponent, k_index=ki,
                ))
    return groups


def _num(x):
    """Compact numeric tag for directory names (no dots)."""
    x = float(x)
    if x == int(x):
        return str(int(x))
    return repr(x).replace(".", "p").replace("-", "m")


def _arff_config(config, group, run_seed):
    return ArffConfig(
        n_features=group.k,
        n_iterations=config.n_iterations,
        proposal_step=group.delta,
        exponent=group.gamma,
        batch_size=None if group.m_b == group.m else group.m_b,
        regularization=config.regularization,
        init_spread=group.init_spread,
        rng_seed=run_seed,
    ).with_variant(group.variant)


def _run_one(config, spec, group, realization):
    data_seed = subseed(config.master_seed, _CTX_DATA, group.k_index,
                        group.extra_index, realization)
    run_seed = subseed(config.master_seed, _CTX_RUN, group.k_index,
                       group.extra_index, realization)
    train_data = normalize(generate_dataset(group.m, spec, seed=data_seed))
    test_data = apply_normalization(
        generate_dataset(config.test_size, spec, seed=subseed(data_seed, 1)),
        train_data.stats,
    )
    arff_config = _arff_config(config, group, run_seed)
    result = train(
        arff_config, train_data, test_data=test_data,
        snapshot_iterations=config.kde_iterations,
    )
    return result, data_seed, run_seed


def _write_run(run_dir, result):
    write_trace_csv(os.path.join(run_dir, "trace.csv"), result.trace)
    write_summary_json(os.path.join(run_dir, "summary.json"), result)
    write_timing_csv(os.path.join(run_dir, "timing.csv"), result.trace)


def _run_sweep(config, out):
    spec = _target_spec(config)
    groups = _sweep_groups(config)
    jobs = [(g, r) for g in groups for r in range(config.realizations)]

    def execute(job):
        group, realization = job
        result, data_seed, run_seed = _run_one(config, spec, group, realization)
        run_dir = os.path.join(out, "runs", f"{group.name}_r{realization}")
        _write_run(run_dir, result)
        return result, data_seed, run_seed

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(job) for job in jobs]

    run_table = []
    for (group, realization), (result, data_seed, run_seed) in zip(jobs, results):
        group.traces.append(result.trace)
        group.snapshots.append(result.snapshots)
        run_table.append({
            "group": group.name,
            "realization": realization,
            "data_seed": data_seed,
            "run_seed": run_seed,
            "dir": f"runs/{group.name}_r{realization}",
        })

    convergence = {c: [] for c in _CONVERGENCE_COLUMNS}
    digest = {}
    for group in groups:
        agg = aggregate_stats(group.traces)
        write_csv(
            os.path.join(out, "aggregate", f"{group.name}_stats.csv"),
            _STATS_COLUMNS, [agg[c] for c in _STATS_COLUMNS],
        )
        min_idx = int(np.argmin(agg["train_mean"]))
        has_test = bool(np.isfinite(agg["test_mean"]).any())
        convergence["variant"].append(group.variant)
        convergence["k"].append(group.k)
        convergence["delta"].append(group.delta)
        convergence["gamma"].append(group.gamma)
        convergence["init_spread"].append(group.init_spread)
        convergence["m"].append(group.m)
        convergence["m_b"].append(group.m_b)
        convergence["realizations"].append(len(group.traces))
        convergence["min_train_mean"].append(float(agg["train_mean"].min()))
        convergence["min_train_std"].append(float(agg["train_std"][min_idx]))
        convergence["final_train_mean"].append(float(agg["train_mean"][-1]))
        convergence["final_train_std"].append(float(agg["train_std"][-1]))
        convergence["min_test_mean"].append(
            float(np.nanmin(agg["test_mean"])) if has_test else float("nan"))
        convergence["final_test_mean"].append(
            float(agg["test_mean"][-1]) if has_test else float("nan"))
        convergence["bound"].append(
            error_bound_constant(spec, group.k, config.regularization))
        digest[group.name] = {
            "min_train_mean": float(agg["train_mean"].min()),
            "final_train_mean": float(agg["train_mean"][-1]),
            "final_ess_mean": float(agg["ess_mean"][-1]),
            "realizations": len(group.traces),
        }
    write_csv(
        os.path.join(out, "aggregate", "convergence.csv"),
        _CONVERGENCE_COLUMNS, [convergence[c] for c in _CONVERGENCE_COLUMNS],
    )

    if config.kind == "test5_init":
        _write_kde_tables(config, spec, groups, out)
    return run_table, digest


# KDE grids: the first rotated axis carries the target's wide spectrum,
# the remaining axes stay near the unit Gaussian
_KDE_AXIS0_GRID = (-140.0, 140.0, 561)
_KDE_OTHER_GRID = (-8.0, 8.0, 321)


def _write_kde_tables(config, spec, groups, out):
    rotation = spec.rotation if spec.rotation is not None else np.eye(spec.dimension)
    for group in groups:
        merged = {}
        for snap in group.snapshots:
            for iteration, freqs in snap.items():
                merged.setdefault(iteration, []).append(freqs)
        for iteration in sorted(merged):
            freqs = np.vstack(merged[iteration])
            projected = freqs @ rotation
            for axis in config.kde_axes:
                lo, hi, cells = _KDE_AXIS0_GRID if axis == 0 else _KDE_OTHER_GRID
                grid = np.linspace(lo, hi, cells)
                try:
                    est = kde(projected[:, axis], grid, axis=axis)
                except Exception:
                    continue
                optimal = optimal_density_marginal(spec, axis, grid)
                name = f"{group.name}_iter{iteration}_axis{axis}.csv"
                write_csv(
                    os.path.join(out, "kde", name),
                    ("grid", "density", "optimal"),
                    [grid, est.density, optimal],
                )


def _cos_net_from_rff(frequencies, amplitudes, dim):
    weight, bias = mlp.rff_layer_from_arff(frequencies, dim)
    amps = np.asarray(amplitudes, dtype=float).reshape(1, -1)
    return mlp.MlpModel(
        weights=(weight, amps),
        biases=(bias, np.zeros(1)),
        activations=("cos", "identity"),
    )


def _run_pretrain(config, out):
    """Fine-tuning comparison: sampler-initialized vs cold-start network."""
    spec = _target_spec(config)
    k = config.k_values[0]
    delta = config.deltas[0]
    m = k * k
    m_b = _batch_size(config, m)
    variant = config.variants[0]
    run_table = []
    digest = {}
    curves_by_arm = {"pretrained": [], "scratch": []}

    for realization in range(config.realizations):
        data_seed = subseed(config.master_seed, _CTX_DATA, 0, 0, realization)
        run_seed = subseed(config.master_seed, _CTX_RUN, 0, 0, realization)
        train_data = normalize(generate_dataset(m, spec, seed=data_seed))
        test_data = apply_normalization(
            generate_dataset(config.test_size, spec, seed=subseed(data_seed, 1)),
            train_data.stats,
        )

        arff_config = ArffConfig(
            n_features=k, n_iterations=config.n_iterations, proposal_step=delta,
            exponent=config.exponent,
            batch_size=None if m_b == m else m_b,
            regularization=config.regularization,
            activation=COSINE_BIAS, rng_seed=run_seed,
        ).with_variant(variant)
        pre = train(arff_config, train_data, test_data=test_data)
        pretrain_seconds = float(pre.trace.wall_time[-1])

        arms = {
            "pretrained": (
                _cos_net_from_rff(pre.frequencies, pre.amplitudes, train_data.dimension),
                pretrain_seconds,
            ),
            "scratch": (
                mlp.init_mlp(
                    [train_data.dimension, k, 1], ("cos", "identity"),
                    generator(subseed(config.master_seed, _CTX_MODEL, realization)),
                ),
                0.0,
            ),
        }
        for arm, (model, offset) in arms.items():
            model, curves = mlp.train_adam(
                model, train_data.inputs, train_data.outputs,
                epochs=config.epochs, batch_size=config.adam_batch,
                learning_rate=config.learning_rate,
                rng=generator(subseed(config.master_seed, _CTX_SHUFFLE, realization)),
                eval_inputs=test_data.inputs, eval_targets=test_data.outputs,
                freeze_first_layer=(arm == "pretrained" and config.freeze_first_layer),
            )
            run_dir = os.path.join(out, "runs", f"{arm}_r{realization}")
            write_csv(
                os.path.join(run_dir, "curves.csv"),
                ("epoch", "train_mse", "val_mse"),
                [curves["epoch"], curves["train_mse"], curves["val_mse"]],
            )
            write_csv(
                os.path.join(run_dir, "timing.csv"),
                ("epoch", "seconds", "train_mse", "val_mse"),
                [curves["epoch"], curves["wall_time"] + offset,
                 curves["train_mse"], curves["val_mse"]],
            )
            if arm == "pretrained":
                write_trace_csv(os.path.join(run_dir, "arff_trace.csv"), pre.trace)
            curves_by_arm[arm].append(curves)
            run_table.append({
                "group": arm, "realization": realization,
                "data_seed": data_seed, "run_seed": run_seed,
                "dir": f"runs/{arm}_r{realization}",
            })

    for arm, all_curves in curves_by_arm.items():
        if not all_curves or config.epochs == 0:
            continue
        train_block = np.stack([c["train_mse"] for c in all_curves])
        val_block = np.stack([c["val_mse"] for c in all_curves])
        n_runs = train_block.shape[0]
        std = (lambda b: b.std(axis=0, ddof=1)) if n_runs > 1 else (
            lambda b: np.zeros(b.shape[1]))
        write_csv(
            os.path.join(out, "aggregate", f"{arm}_curves_stats.csv"),
            ("epoch", "train_mean", "train_std", "val_mean", "val_std"),
            [all_curves[0]["epoch"], train_block.mean(axis=0), std(train_block),
             val_block.mean(axis=0), std(val_block)],
        )
        digest[arm] = {
            "final_val_mean": float(val_block.mean(axis=0)[-1]),
            "min_val_mean": float(val_block.mean(axis=0).min()),
            "realizations": n_runs,
        }
    return run_table, digest


def _run_images(config, out):
    if config.image_path is not None:
        train_set, test_set, max_i = images_mod.ingest_image(
            config.image_path, crop=config.crop)
        image = None
        source = {"path": os.fspath(config.image_path), "crop": config.crop}
    else:
        image = images_mod.synthetic_image(
            config.image_size, stripe_cycles=config.stripe_cycles)
        source = {"synthetic": True, "size": config.image_size,
                  "stripe_cycles": config.stripe_cycles}

    run_table = []
    psnr_by_approach = {a: [] for a in config.approaches}
    for realization in range(config.realizations):
        seed = subseed(config.master_seed, _CTX_RUN, realization)
        if image is not None:
            records = images_mod.run_image_pipeline(
                image, seed=seed, approaches=config.approaches,
                width=config.width, epochs=config.epochs,
                batch_size=config.adam_batch, learning_rate=config.learning_rate,
                pretrain_iterations=config.pretrain_iterations,
                freeze_first_layer=config.freeze_first_layer,
            )
        else:
            records = _pipeline_on_datasets(config, train_set, test_set, max_i, seed)
        for approach, record in records.items():
            run_dir = os.path.join(out, "runs", f"approach{approach}_r{realization}")
            curves = record["curves"]
            write_csv(
                os.path.join(run_dir, "curves.csv"),
                ("epoch", "train_mse", "val_mse"),
                [curves["epoch"], curves["train_mse"], curves["val_mse"]],
            )
            write_csv(
                os.path.join(run_dir, "timing.csv"),
                ("epoch", "seconds"), [curves["epoch"], curves["wall_time"]],
            )
            psnr_by_approach[approach].append(record["psnr"])
            run_table.append({
                "group": f"approach{approach}", "realization": realization,
                "run_seed": seed, "dir": f"runs/approach{approach}_r{realization}",
            })

    rows = {c: [] for c in ("approach", "mean", "std", "max", "min", "n")}
    digest = {}
    for approach in config.approaches:
        values = np.asarray(psnr_by_approach[approach], dtype=float)
        rows["approach"].append(int(approach))
        rows["mean"].append(float(values.mean()))
        rows["std"].append(float(values.std(ddof=1)) if values.size > 1 else 0.0)
        rows["max"].append(float(values.max()))
        rows["min"].append(float(values.min()))
        rows["n"].append(int(values.size))
        digest[f"approach{approach}"] = {
            "psnr_mean": float(values.mean()), "runs": int(values.size)}
    write_csv(os.path.join(out, "aggregate", "psnr.csv"),
              ("approach", "mean", "std", "max", "min", "n"),
              [rows[c] for c in ("approach", "mean", "std", "max", "min", "n")])
    digest["source"] = source
    return run_table, digest


def _pipeline_on_datasets(config, train_set, test_set, max_i, seed):
    """Image pipeline over pre-split datasets (file ingestion path)."""
    records = {}
    for approach in config.approaches:
        approach = int(approach)
        first_layer = None
        if approach == 1:
            freqs = images_mod.pretrain_frequencies(
                train_set, config.width, subseed(seed, 11, approach),
                n_iterations=config.pretrain_iterations,
            )
            first_layer = mlp.rff_layer_from_arff(freqs, train_set.dimension)
        model = images_mod.image_model(
            approach, config.width, generator(subseed(seed, 12, approach)),
            input_dim=train_set.dimension, first_layer=first_layer,
        )
        model, curves = mlp.train_adam(
            model, train_set.inputs, train_set.outputs,
            epochs=config.epochs, batch_size=config.adam_batch,
            learning_rate=config.learning_rate,
            rng=generator(subseed(seed, 13, approach)),
            eval_inputs=test_set.inputs, eval_targets=test_set.outputs,
            freeze_first_layer=config.freeze_first_layer and approach == 1,
        )
        pred = mlp.forward(model, test_set.inputs)
        records[approach] = {
            "psnr": mlp.psnr(pred, test_set.outputs, max_intensity=max_i),
            "train_mse": float(curves["train_mse"][-1]) if len(curves["epoch"]) else float("nan"),
            "test_mse": float(np.mean((pred - test_set.outputs) ** 2)),
            "curves": curves,
            "model": model,
        }
    return records


def run_experiment(config):
    """Execute one experiment and write its artifact tree.

    Returns the output directory. Rerunning with identical config and
    master seed reproduces every file byte for byte except timing.csv.
    """
    out = os.fspath(config.out_dir)
    os.makedirs(out, exist_ok=True)
    if config.kind == "image_pipeline":
        run_table, digest = _run_images(config, out)
    elif config.kind == "test6_pretrain":
        run_table, digest = _run_pretrain(config, out)
    else:
        run_table, digest = _run_sweep(config, out)

    from . import __version__

    write_json(os.path.join(out, "manifest.json"), {
        "kind": config.kind,
        "version": __version__,
        "config": asdict(config),
        "runs": run_table,
    })
    write_json(os.path.join(out, "summary.json"), digest)
    return out
