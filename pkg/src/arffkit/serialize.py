"""Deterministic file formats: CSV tables, JSON manifests, model files.

All writers are atomic (temp file in the target directory, then rename) so
an interrupted run never leaves a half-written artifact under the final
name. Floats are serialized with repr, the shortest digit string that
round-trips the exact float64, which makes rerun outputs byte-identical
and lets readers recompute aggregates bit-for-bit.

Wall-clock columns are machine-dependent by nature and therefore live in
separate ``timing`` files, never in the deterministic tables.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from dataclasses import asdict, is_dataclass

import numpy as np

from .arff import TrainTrace
from .exceptions import ConfigError
from .mlp import MlpModel
from .targets import Dataset, NormalizationStats

__all__ = [
    "MODEL_FORMAT",
    "MODEL_VERSION",
    "dataset_from_csv",
    "dataset_to_csv",
    "load_dataset",
    "load_model",
    "read_csv_columns",
    "read_trace_csv",
    "save_dataset",
    "save_mlp_model",
    "save_rff_model",
    "state_digest",
    "write_csv",
    "write_json",
    "write_summary_json",
    "write_timing_csv",
    "write_trace_csv",
]

MODEL_FORMAT = "arffkit-model"
MODEL_VERSION = 1

TRACE_COLUMNS = (
    "iter", "train_err", "test_err", "ess", "resampled", "accepts", "solves",
    "train_err_normal", "test_err_normal",
)


def _atomic_write(path, payload, binary=False):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        if binary:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
        else:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, columns):
    """Write named columns as CSV; all columns must share one length."""
    header = list(header)
    columns = [np.asarray(c) for c in columns]
    if len(header) != len(columns):
        raise ConfigError(f"{len(header)} names for {len(columns)} columns")
    lengths = {c.shape[0] for c in columns}
    if len(columns) and len(lengths) != 1:
        raise ConfigError(f"ragged columns, lengths {sorted(lengths)}")
    lines = [",".join(header)]
    n = columns[0].shape[0] if columns else 0
    for i in range(n):
        lines.append(",".join(_fmt(c[i]) for c in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_csv_columns(path):
    """Read a CSV written by write_csv back into {name: array}.

    Columns parse as float64 when every cell converts; otherwise the column
    comes back as strings (group labels, variant names).
    """
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = rows[0]
    data = {name: [] for name in header}
    for row in rows[1:]:
        if len(row) != len(header):
            raise ConfigError(f"{path}: row with {len(row)} cells, header has {len(header)}")
        for name, cell in zip(header, row):
            data[name].append(cell)
    out = {}
    for name, vals in data.items():
        try:
            out[name] = np.array(vals, dtype=float)
        except ValueError:
            out[name] = np.array(vals, dtype=str)
    return out


def write_trace_csv(path, trace):
    """Serialize a training trace, one row per iteration.

    Column order is fixed by TRACE_COLUMNS; the wall-time field is
    deliberately excluded (see write_timing_csv).
    """
    write_csv(path, TRACE_COLUMNS, [
        trace.iteration, trace.train_err, trace.test_err, trace.ess,
        trace.resampled, trace.accepts, trace.solves,
        trace.train_err_normal, trace.test_err_normal,
    ])


def read_trace_csv(path):
    """Rebuild a TrainTrace from its CSV; wall times come back as zeros."""
    cols = read_csv_columns(path)
    missing = [c for c in TRACE_COLUMNS if c not in cols]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}")
    n = cols["iter"].shape[0]
    return TrainTrace(
        iteration=cols["iter"].astype(int),
        train_err=cols["train_err"],
        test_err=cols["test_err"],
        ess=cols["ess"],
        resampled=cols["resampled"].astype(bool),
        accepts=cols["accepts"].astype(int),
        solves=cols["solves"].astype(int),
        train_err_normal=cols["train_err_normal"],
        test_err_normal=cols["test_err_normal"],
        wall_time=np.zeros(n),
    )


def write_timing_csv(path, trace):
    """Wall-clock seconds per iteration; machine-dependent, not reproducible."""
    write_csv(path, ("iter", "seconds"), [trace.iteration, trace.wall_time])


def write_json(path, payload):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def state_digest(*arrays):
    """Order-sensitive sha256 over array contents and shapes."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def write_summary_json(path, result):
    """Trace summary + config echo + digest of the final sampler state."""
    payload = {
        "config": _jsonable(result.config),
        "trace": _jsonable(result.trace.summary()),
        "state_digest": state_digest(result.frequencies, result.amplitudes),
    }
    write_json(path, payload)


def _split_complex(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"real": _jsonable(a.real), "imag": _jsonable(a.imag)}
    return {"real": _jsonable(a)}


def _join_complex(obj):
    real = np.asarray(obj["real"], dtype=float)
    if "imag" in obj:
        return real + 1j * np.asarray(obj["imag"], dtype=float)
    return real


def save_rff_model(path, frequencies, amplitudes, activation, stats=None):
    """Versioned JSON container for a trained feature expansion."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": "rff",
        "activation": activation,
        "frequencies": _jsonable(np.asarray(frequencies, dtype=float)),
        "amplitudes": _split_complex(amplitudes),
        "normalization": _jsonable(stats) if stats is not None else None,
    }
    write_json(path, payload)


def save_mlp_model(path, model):
    """Versioned JSON container for a dense network checkpoint."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": "mlp",
        "activations": list(model.activations),
        "weights": [_jsonable(w) for w in model.weights],
        "biases": [_jsonable(b) for b in model.biases],
    }
    write_json(path, payload)


def load_model(path):
    """Load either model kind.

    Returns a dict for kind "rff" (keys activation, frequencies, amplitudes,
    normalization) and an MlpModel for kind "mlp".
    """
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format") != MODEL_FORMAT:
        raise ConfigError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ConfigError(
            f"{path}: version {payload.get('version')}, reader supports {MODEL_VERSION}"
        )
    kind = payload.get("kind")
    if kind == "rff":
        stats = payload.get("normalization")
        return {
            "kind": "rff",
            "activation": payload["activation"],
            "frequencies": np.asarray(payload["frequencies"], dtype=float),
            "amplitudes": _join_complex(payload["amplitudes"]),
            "normalization": None if stats is None else NormalizationStats(
                input_mean=np.asarray(stats["input_mean"], dtype=float),
                input_std=np.asarray(stats["input_std"], dtype=float),
                output_mean=np.asarray(stats["output_mean"], dtype=float),
                output_std=np.asarray(stats["output_std"], dtype=float),
            ),
        }
    if kind == "mlp":
        return MlpModel(
            weights=tuple(np.asarray(w, dtype=float) for w in payload["weights"]),
            biases=tuple(np.asarray(b, dtype=float) for b in payload["biases"]),
            activations=tuple(payload["activations"]),
        )
    raise ConfigError(f"{path}: unknown model kind {kind!r}")


def save_dataset(path, dataset):
    """Columnar binary dump plus a JSON sidecar with stats and provenance."""
    path = os.fspath(path)
    buffer = _npz_bytes(dataset)
    _atomic_write(path, buffer, binary=True)
    sidecar = {
        "provenance": dataset.provenance,
        "stats": _jsonable(dataset.stats) if dataset.stats is not None else None,
    }
    write_json(path + ".json", sidecar)


def _npz_bytes(dataset):
    import io

    buf = io.BytesIO()
    np.savez(buf, inputs=dataset.inputs, outputs=dataset.outputs)
    return buf.getvalue()


def load_dataset(path):
    path = os.fspath(path)
    with np.load(path) as payload:
        inputs = payload["inputs"]
        outputs = payload["outputs"]
    stats = None
    provenance = "unspecified"
    sidecar = path + ".json"
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as handle:
            meta = json.load(handle)
        provenance = meta.get("provenance", provenance)
        raw = meta.get("stats")
        if raw is not None:
            stats = NormalizationStats(
                input_mean=np.asarray(raw["input_mean"], dtype=float),
                input_std=np.asarray(raw["input_std"], dtype=float),
                output_mean=np.asarray(raw["output_mean"], dtype=float),
                output_std=np.asarray(raw["output_std"], dtype=float),
            )
    return Dataset(inputs=inputs, outputs=outputs, stats=stats, provenance=provenance)


def dataset_to_csv(path, dataset):
    """x1..xd then the output column(s); multi-channel outputs get y1..yc."""
    d = dataset.dimension
    header = [f"x{j + 1}" for j in range(d)]
    columns = [dataset.inputs[:, j] for j in range(d)]
    if dataset.outputs.ndim == 1:
        header.append("y")
        columns.append(dataset.outputs)
    else:
        for c in range(dataset.outputs.shape[1]):
            header.append(f"y{c + 1}")
            columns.append(dataset.outputs[:, c])
    write_csv(path, header, columns)


def dataset_from_csv(path, provenance="external"):
    cols = read_csv_columns(path)
    xs = sorted((n for n in cols if n.startswith("x")), key=lambda n: int(n[1:]))
    ys = sorted((n for n in cols if n.startswith("y")),
                key=lambda n: int(n[1:]) if n[1:] else 0)
    if not xs or not ys:
        raise ConfigError(f"{path}: need x1..xd and y columns, got {sorted(cols)}")
    inputs = np.column_stack([cols[n] for n in xs])
    if len(ys) == 1:
        outputs = cols[ys[0]]
    else:
        outputs = np.column_stack([cols[n] for n in ys])
    return Dataset(inputs=inputs, outputs=outputs, provenance=provenance)
