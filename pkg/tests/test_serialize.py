"""CSV/JSON/NPZ round trips and deterministic rewrites."""

import json
import os

import numpy as np
import pytest

from arffkit.arff import ArffConfig, train
from arffkit.mlp import forward, init_mlp
from arffkit.serialize import (
    TRACE_COLUMNS,
    dataset_from_csv,
    dataset_to_csv,
    load_dataset,
    load_model,
    read_csv_columns,
    read_trace_csv,
    save_dataset,
    save_mlp_model,
    save_rff_model,
    state_digest,
    write_csv,
    write_json,
    write_summary_json,
    write_trace_csv,
)
from arffkit.targets import default_spec, generate_dataset, normalize


def _result(n=6):
    data = normalize(generate_dataset(80, default_spec(), seed=1))
    cfg = ArffConfig(n_features=4, n_iterations=n, proposal_step=0.5,
                     rng_seed=2).with_variant("am-r")
    return train(cfg, data, test_data=data)


def test_trace_csv_column_order_is_stable():
    assert TRACE_COLUMNS == ("iter", "train_err", "test_err", "ess",
                             "resampled", "accepts", "solves",
                             "train_err_normal", "test_err_normal")


def test_trace_round_trip(tmp_path):
    result = _result()
    path = tmp_path / "trace.csv"
    write_trace_csv(path, result.trace)
    back = read_trace_csv(path)
    with open(path) as fh:
        assert fh.readline().strip() == ",".join(TRACE_COLUMNS)
    assert np.array_equal(back.iteration, result.trace.iteration)
    assert np.array_equal(back.train_err, result.trace.train_err)
    assert np.array_equal(back.test_err, result.trace.test_err)
    assert np.array_equal(back.ess, result.trace.ess)
    assert np.array_equal(back.resampled, result.trace.resampled)
    assert np.array_equal(back.accepts, result.trace.accepts)
    assert np.array_equal(back.solves, result.trace.solves)
    assert np.array_equal(back.train_err_normal, result.trace.train_err_normal)
    # wall_time is machine-dependent and not serialized
    assert np.array_equal(back.wall_time, np.zeros(len(back)))


def test_csv_rewrite_is_bitwise_identical(tmp_path):
    result = _result()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trace_csv(a, result.trace)
    write_trace_csv(b, result.trace)
    assert a.read_bytes() == b.read_bytes()


def test_floats_survive_repr_round_trip(tmp_path):
    values = np.array([1.0 / 3.0, 1e-300, 6.02e23, -0.1, np.pi])
    path = tmp_path / "v.csv"
    write_csv(path, ["v"], [values])
    back = read_csv_columns(path)["v"]
    assert np.array_equal(back, values)  # repr() keeps float64 exact


def test_read_csv_keeps_label_columns_as_strings(tmp_path):
    path = tmp_path / "mixed.csv"
    write_csv(path, ["name", "value"],
              [np.array(["am", "am-r"]), np.array([1.5, 2.5])])
    back = read_csv_columns(path)
    assert back["name"].tolist() == ["am", "am-r"]
    assert np.array_equal(back["value"], [1.5, 2.5])


def test_write_csv_validates_shape(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", ["a", "b"], [np.arange(3), np.arange(4)])
    with pytest.raises(ValueError):
        write_csv(tmp_path / "y.csv", ["a"], [np.arange(3), np.arange(3)])


def test_summary_json_content(tmp_path):
    result = _result()
    path = tmp_path / "summary.json"
    write_summary_json(path, result)
    blob = json.loads(path.read_text())
    assert blob["config"]["n_features"] == 4
    assert blob["trace"]["iterations"] == 6
    assert blob["trace"]["total_solves"] == int(result.trace.solves.sum())
    assert blob["state_digest"] == state_digest(result.frequencies,
                                                result.amplitudes)


def test_state_digest_sensitivity():
    a = np.arange(6, dtype=float).reshape(2, 3)
    assert state_digest(a) == state_digest(a.copy())
    assert state_digest(a) != state_digest(a.T)          # shape matters
    assert state_digest(a) != state_digest(a.astype(np.float32))
    b = a.copy()
    b[0, 0] += 1e-300
    assert state_digest(a) != state_digest(b)
    assert state_digest(a, a) != state_digest(a)


def test_rff_model_round_trip(tmp_path):
    result = _result()
    path = tmp_path / "model.json"
    save_rff_model(path, result.frequencies, result.amplitudes,
                   result.config.activation, None)
    payload = load_model(path)
    assert payload["kind"] == "rff"
    assert np.array_equal(payload["frequencies"], result.frequencies)
    assert np.array_equal(payload["amplitudes"], result.amplitudes)
    assert payload["amplitudes"].dtype == np.complex128
    assert payload["activation"] == result.config.activation


def test_mlp_model_round_trip(tmp_path):
    model = init_mlp((2, 5, 3), ("cos", "sigmoid"), np.random.default_rng(0))
    path = tmp_path / "mlp.json"
    save_mlp_model(path, model)
    back = load_model(path)
    x = np.random.default_rng(1).standard_normal((7, 2))
    assert np.array_equal(forward(back, x), forward(model, x))
    assert back.activations == model.activations


def test_dataset_npz_round_trip(tmp_path):
    data = normalize(generate_dataset(30, default_spec(), seed=3))
    path = str(tmp_path / "d.npz")
    save_dataset(path, data)
    back = load_dataset(path)
    assert np.array_equal(back.inputs, data.inputs)
    assert np.array_equal(back.outputs, data.outputs)
    assert np.array_equal(back.stats.input_mean, data.stats.input_mean)
    assert back.provenance == data.provenance
    sidecar = json.loads(open(path + ".json").read())
    assert sidecar["provenance"] == data.provenance
    assert "stats" in sidecar


def test_dataset_csv_round_trip(tmp_path):
    data = generate_dataset(25, default_spec(), seed=4)
    path = tmp_path / "d.csv"
    dataset_to_csv(path, data)
    with open(path) as fh:
        assert fh.readline().strip() == "x1,x2,x3,x4,y"
    back = dataset_from_csv(path)
    assert np.array_equal(back.inputs, data.inputs)
    assert np.array_equal(back.outputs, data.outputs)


def test_write_json_deterministic(tmp_path):
    blob = {"b": [1, 2], "a": {"z": 1.5, "y": None}}
    p1, p2 = tmp_path / "1.json", tmp_path / "2.json"
    write_json(p1, blob)
    write_json(p2, {"a": {"y": None, "z": 1.5}, "b": [1, 2]})
    assert p1.read_bytes() == p2.read_bytes()


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_csv(tmp_path / "out.csv", ["a"], [np.arange(4)])
    assert sorted(os.listdir(tmp_path)) == ["out.csv"]
