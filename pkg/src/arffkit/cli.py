"""Command-line entry points.

Exit codes: 0 on success, 1 on runtime failure, 2 on invalid
configuration. Configuration errors are reported as one JSON object on
standard error so driving scripts can parse the reason.

A JSON config file can seed any subcommand's options (--config); explicit
command-line flags override file values. The file holds exactly the long
option names with dashes replaced by underscores, e.g.

    {"k_values": [32, 64], "realizations": 4, "out": "runs/test1"}
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .arff import ArffConfig, VARIANTS, train
from .exceptions import ConfigError, DegenerateDataError
from .experiments import KINDS, experiment_config, run_experiment
from .kde import kde as kde_estimate
from .lsq import ACTIVATIONS, COMPLEX_EXP
from .rng import subseed
from .serialize import (
    dataset_to_csv,
    load_dataset,
    read_csv_columns,
    save_dataset,
    save_rff_model,
    write_csv,
    write_json,
    write_summary_json,
    write_timing_csv,
    write_trace_csv,
)
from .targets import (
    apply_normalization,
    default_spec,
    generate_dataset,
    normalize,
    optimal_density_marginal,
)

__all__ = ["main"]


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": {"kind": kind, "message": message}}) + "\n")
    return code


def _ints(text):
    return tuple(int(v) for v in str(text).split(","))


def _floats(text):
    return tuple(float(v) for v in str(text).split(","))


def _add_common(parser):
    parser.add_argument("--config", help="JSON file with defaults for this command")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--master-seed", type=int, help="root of all derived seeds")
    parser.add_argument("--realizations", type=int, help="independent repetitions")
    parser.add_argument("--workers", type=int, help="parallel realization workers")
    parser.add_argument("--paper-scale", action="store_true", default=None,
                        help="use the published table values instead of desk scale")


def _add_sweep_axes(parser):
    parser.add_argument("--k-values", type=_ints, help="comma list of K values")
    parser.add_argument("--deltas", type=_floats, help="comma list, one step per K")
    parser.add_argument("--variants", type=lambda s: tuple(s.split(",")),
                        help=f"comma list from {sorted(VARIANTS)}")
    parser.add_argument("--iterations", dest="n_iterations", type=int)
    parser.add_argument("--gamma", dest="exponent", type=float)
    parser.add_argument("--lambda", dest="regularization", type=float)
    parser.add_argument("--test-size", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--no-rotation", dest="rotated", action="store_false",
                        default=None)


def _collect(args, names):
    """Config-file values overridden by explicit flags, keyed per field."""
    merged = {}
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            raw = json.load(handle)
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        for key, value in raw.items():
            if key not in names:
                raise ConfigError(f"{args.config}: unknown option {key!r}")
            merged[key] = tuple(value) if isinstance(value, list) else value
    for key in names:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


_EXPERIMENT_FIELDS = (
    "out", "master_seed", "realizations", "workers", "k_values", "deltas",
    "variants", "n_iterations", "exponent", "regularization", "batch_sizes",
    "gammas", "init_spreads", "alpha", "rotated", "test_size", "kde_iterations",
    "kde_axes", "epochs", "learning_rate", "adam_batch", "width", "approaches",
    "image_path", "image_size", "crop", "stripe_cycles", "pretrain_iterations",
    "freeze_first_layer", "batch_rule",
)


def _run_kind(kind, args):
    options = _collect(args, _EXPERIMENT_FIELDS)
    out = options.pop("out", None)
    if not out:
        raise ConfigError("an output directory is required (--out)")
    paper = bool(getattr(args, "paper_scale", None))
    config = experiment_config(kind, out, paper_scale=paper, **options)
    run_experiment(config)
    print(out)
    return 0


def _cmd_gen_data(args):
    options = _collect(args, ("out", "master_seed", "alpha", "rotated",
                              "test_size"))
    out = options.get("out")
    if not out:
        raise ConfigError("an output path is required (--out)")
    spec = default_spec(rotated=options.get("rotated", True) is not False,
                        alpha=options.get("alpha", 0.01))
    seed = int(options.get("master_seed", 0))
    data = generate_dataset(args.size, spec, seed=seed)
    if args.normalize:
        data = normalize(data)
    save_dataset(out, data)
    if args.csv:
        dataset_to_csv(os.path.splitext(out)[0] + ".csv", data)
    print(out)
    return 0


def _cmd_train(args):
    options = _collect(args, ("out", "master_seed", "n_iterations", "exponent",
                              "regularization", "alpha", "rotated", "test_size"))
    out = options.get("out")
    if not out:
        raise ConfigError("an output directory is required (--out)")
    seed = int(options.get("master_seed", 0))
    spec = default_spec(rotated=options.get("rotated", True) is not False,
                        alpha=options.get("alpha", 0.01))
    if args.data:
        data = load_dataset(args.data)
        if data.stats is None:
            data = normalize(data)
    else:
        size = args.size if args.size else args.k * args.k
        data = normalize(generate_dataset(size, spec, seed=subseed(seed, 0)))
    test_size = int(options.get("test_size", 1000))
    test = apply_normalization(
        generate_dataset(test_size, spec, seed=subseed(seed, 0, 1)), data.stats,
    ) if test_size > 0 else None

    config = ArffConfig(
        n_features=args.k,
        n_iterations=int(options.get("n_iterations", 1000)),
        proposal_step=args.delta,
        exponent=float(options.get("exponent", 10.0)),
        batch_size=args.batch_size,
        regularization=float(options.get("regularization", 0.1)),
        activation=args.activation,
        init_spread=args.init_spread,
        rng_seed=subseed(seed, 1),
    ).with_variant(args.variant)
    result = train(config, data, test_data=test)
    write_trace_csv(os.path.join(out, "trace.csv"), result.trace)
    write_timing_csv(os.path.join(out, "timing.csv"), result.trace)
    write_summary_json(os.path.join(out, "summary.json"), result)
    save_rff_model(os.path.join(out, "model.json"), result.frequencies,
                   result.amplitudes, config.activation, data.stats)
    print(out)
    return 0


def _cmd_kde_file(args):
    """KDE of a plain sample column from a CSV file (diagnostic helper)."""
    cols = read_csv_columns(args.input)
    if args.column not in cols:
        raise ConfigError(f"{args.input}: no column {args.column!r}, "
                          f"have {sorted(cols)}")
    samples = cols[args.column]
    lo = args.grid_min if args.grid_min is not None else float(samples.min()) - 1.0
    hi = args.grid_max if args.grid_max is not None else float(samples.max()) + 1.0
    grid = np.linspace(lo, hi, args.grid_cells)
    est = kde_estimate(samples, grid, bandwidth=args.bandwidth)
    columns = [grid, est.density]
    header = ["grid", "density"]
    if args.optimal_axis is not None:
        spec = default_spec()
        header.append("optimal")
        columns.append(optimal_density_marginal(spec, args.optimal_axis, grid))
    write_csv(args.out, header, columns)
    print(args.out)
    return 0


def _cmd_report(args):
    """Collate an experiment directory into one JSON digest on stdout."""
    manifest_path = os.path.join(args.dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ConfigError(f"{args.dir}: no manifest.json; not an experiment directory")
    with open(manifest_path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    report = {"kind": manifest.get("kind"), "version": manifest.get("version"),
              "runs": len(manifest.get("runs", []))}
    convergence = os.path.join(args.dir, "aggregate", "convergence.csv")
    if os.path.exists(convergence):
        with open(convergence, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        header = lines[0].split(",")
        report["groups"] = [dict(zip(header, line.split(","))) for line in lines[1:]]
    psnr = os.path.join(args.dir, "aggregate", "psnr.csv")
    if os.path.exists(psnr):
        cols = read_csv_columns(psnr)
        report["psnr"] = {
            f"approach{int(a)}": {"mean": m, "std": s, "max": hi, "min": lo}
            for a, m, s, hi, lo in zip(cols["approach"], cols["mean"],
                                       cols["std"], cols["max"], cols["min"])
        }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        write_json(args.out, report)
    print(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arffkit",
        description="Adaptive random Fourier feature training and experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate and save a benchmark dataset")
    _add_common(p)
    p.add_argument("--size", type=int, required=True, help="number of points")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--csv", action="store_true", help="also write a CSV copy")
    p.add_argument("--alpha", type=float)
    p.add_argument("--no-rotation", dest="rotated", action="store_false", default=None)
    p.add_argument("--test-size", type=int)
    p.set_defaults(handler=_cmd_gen_data)

    p = sub.add_parser("train", help="one sampler run with trace and model output")
    _add_common(p)
    p.add_argument("--k", type=int, required=True, help="number of features")
    p.add_argument("--delta", type=float, required=True, help="proposal step")
    p.add_argument("--variant", default="am-r", choices=sorted(VARIANTS))
    p.add_argument("--iterations", dest="n_iterations", type=int)
    p.add_argument("--gamma", dest="exponent", type=float)
    p.add_argument("--lambda", dest="regularization", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--activation", default=COMPLEX_EXP, choices=ACTIVATIONS)
    p.add_argument("--init-spread", type=float, default=0.0)
    p.add_argument("--data", help="dataset file from gen-data")
    p.add_argument("--size", type=int, help="points to generate when no --data")
    p.add_argument("--alpha", type=float)
    p.add_argument("--no-rotation", dest="rotated", action="store_false", default=None)
    p.add_argument("--test-size", type=int)
    p.set_defaults(handler=_cmd_train)

    for name, kind, blurb in (
        ("sweep", "test2_fulldata", "full-data K sweep"),
        ("stats", "test1_stats", "multi-realization statistics"),
    ):
        p = sub.add_parser(name, help=blurb)
        _add_common(p)
        _add_sweep_axes(p)
        if name == "sweep":
            p.add_argument("--kind", default=kind,
                           choices=("test2_fulldata", "test3_gamma", "test4_batch"))
            p.add_argument("--gammas", type=_floats)
            p.add_argument("--batch-sizes", type=_ints)
        p.set_defaults(handler=lambda a, k=kind: _run_kind(getattr(a, "kind", k), a))

    p = sub.add_parser("kde", help="initial-distribution study with KDE tables, "
                                   "or a KDE of a CSV column")
    _add_common(p)
    _add_sweep_axes(p)
    p.add_argument("--init-spreads", dest="init_spreads", type=_floats)
    p.add_argument("--kde-iterations", dest="kde_iterations", type=_ints)
    p.add_argument("--kde-axes", dest="kde_axes", type=_ints)
    p.add_argument("--input", help="CSV file to estimate instead of running the study")
    p.add_argument("--column", default="value")
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--grid-cells", type=int, default=401)
    p.add_argument("--optimal-axis", type=int)
    p.set_defaults(handler=lambda a: _cmd_kde_file(a) if a.input
                   else _run_kind("test5_init", a))

    p = sub.add_parser("pretrain-adam", help="sampler-pretrained vs cold-start "
                                             "network fine-tuning")
    _add_common(p)
    _add_sweep_axes(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--adam-batch", type=int)
    p.add_argument("--freeze-first-layer", action="store_true", default=None)
    p.set_defaults(handler=lambda a: _run_kind("test6_pretrain", a))

    p = sub.add_parser("image", help="image regression pipeline, approaches 1-4")
    _add_common(p)
    p.add_argument("--image-path", help="PNG input; omitted = synthetic test card")
    p.add_argument("--crop", type=int)
    p.add_argument("--image-size", type=int)
    p.add_argument("--stripe-cycles", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--adam-batch", type=int)
    p.add_argument("--approaches", type=_ints)
    p.add_argument("--pretrain-iterations", type=int)
    p.add_argument("--freeze-first-layer", action="store_true", default=None)
    p.set_defaults(handler=lambda a: _run_kind("image_pipeline", a))

    p = sub.add_parser("report", help="collate an experiment directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--out", help="also write the digest as JSON")
    p.set_defaults(handler=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; keep its exit code (2 on bad args)
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (ConfigError, DegenerateDataError, FileNotFoundError, KeyError,
            json.JSONDecodeError) as exc:
        return _fail(2, type(exc).__name__, str(exc))
    except Exception as exc:  # runtime failure
        return _fail(1, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
