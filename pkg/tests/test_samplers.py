import math

import numpy as np
import pytest

from evsampler.circuits import Observable, StateVector, expectation
from evsampler.errors import ValidationError
from evsampler.families import gaussian_nd
from evsampler.generators import build_dense_encoder
from evsampler.samplers import (
    SampleSet,
    ShotConfig,
    gaussian_noise_model,
    load_samples,
    required_shots,
    sample_exact,
    sample_with_shots,
    save_samples,
    shot_estimates,
)

RNG = np.random.default_rng


@pytest.fixture(scope="module")
def model():
    return build_dense_encoder(gaussian_nd(2, resolution=12))


# --- exact sampling


def test_sample_exact_shape_and_mode(model):
    s = sample_exact(model, 25, seed=0)
    assert s.values.shape == (25, 2)
    assert s.n_samples == 25
    assert s.output_dim == 2
    assert s.mode == "exact"
    assert s.source == model.model_id()


def test_sample_exact_deterministic(model):
    a = sample_exact(model, 40, seed=5)
    b = sample_exact(model, 40, seed=5)
    assert np.array_equal(a.values, b.values)
    c = sample_exact(model, 40, seed=6)
    assert not np.array_equal(a.values, c.values)


def test_sample_exact_rejects_empty(model):
    with pytest.raises(ValidationError):
        sample_exact(model, 0, seed=0)


# --- finite shots


def test_shots_share_input_stream_with_exact(model):
    # same seed means the same inputs, so high shot counts converge row-wise
    exact = sample_exact(model, 50, seed=3)
    noisy = sample_with_shots(model, 50, ShotConfig(shots=10_000), seed=3)
    # observables have eigenvalues in [-1, 3]: single-shot sd <= 2
    assert np.max(np.abs(noisy.values - exact.values)) < 5 * 2 / math.sqrt(10_000)


def test_shots_mode_string_and_budget(model):
    s = sample_with_shots(model, 5, ShotConfig(shots=64), seed=0)
    assert s.mode == "shots:64"
    assert s.extra["total_shots"] == 64 * model.output_dim


def test_shots_deterministic(model):
    cfg = ShotConfig(shots=32)
    a = sample_with_shots(model, 20, cfg, seed=9)
    b = sample_with_shots(model, 20, cfg, seed=9)
    assert np.array_equal(a.values, b.values)


def test_shot_config_validated():
    with pytest.raises(ValidationError):
        ShotConfig(shots=0)


def test_shot_estimates_unbiased():
    state = StateVector(1, np.array([math.cos(0.6), math.sin(0.6)], dtype=complex))
    obs = Observable.from_paulis(1, [(1.0, "Z")])
    target = expectation(state, obs)
    est = shot_estimates(state, obs, shots=1, n_repeats=10_000, seed=1)
    se = est.std(ddof=1) / math.sqrt(est.shape[0])
    assert abs(est.mean() - target) <= 3 * se


def test_shot_estimates_variance_scales_inversely():
    state = StateVector(1, np.array([math.cos(0.8), math.sin(0.8)], dtype=complex))
    obs = Observable.from_paulis(1, [(1.0, "Z")])
    v1 = shot_estimates(state, obs, shots=1, n_repeats=20_000, seed=2).var()
    v16 = shot_estimates(state, obs, shots=16, n_repeats=20_000, seed=3).var()
    assert v16 == pytest.approx(v1 / 16, rel=0.15)


def test_shot_estimates_deterministic_state_is_noise_free():
    # eigenstate of the observable: every projective draw returns the same value
    state = StateVector(1, np.array([1.0, 0.0], dtype=complex))
    obs = Observable.from_paulis(1, [(1.0, "Z")])
    est = shot_estimates(state, obs, shots=1, n_repeats=100, seed=4)
    assert np.all(est == 1.0)


# --- gaussian surrogate


def test_gaussian_noise_zero_epsilon_is_identity(model):
    s = sample_exact(model, 30, seed=1)
    g = gaussian_noise_model(s, 0.0, seed=2)
    assert np.array_equal(g.values, s.values)
    assert g.mode == "gaussian:0"
    assert g.values is not s.values  # a copy, not a view


def test_gaussian_noise_statistics(model):
    s = sample_exact(model, 400, seed=1)
    g = gaussian_noise_model(s, 0.25, seed=2)
    diff = g.values - s.values
    assert g.mode == "gaussian:0.25"
    assert abs(diff.std() - 0.25) < 0.03
    assert gaussian_noise_model(s, 0.25, seed=2).values == pytest.approx(g.values)


def test_gaussian_noise_rejects_negative(model):
    s = sample_exact(model, 5, seed=0)
    with pytest.raises(ValidationError):
        gaussian_noise_model(s, -0.1, seed=0)


# --- shot budget


def test_required_shots_formula():
    assert required_shots(4, 3.0, 0.1) == math.ceil(4 * 3.0 / 0.01)
    assert required_shots(1, 1.0, 1.0) == 1
    assert required_shots(2, 1.0, 0.5, c=2.0) == 16
    # tighter accuracy can only cost more
    assert required_shots(3, 2.0, 0.05) >= required_shots(3, 2.0, 0.1)


def test_required_shots_validation():
    with pytest.raises(ValidationError):
        required_shots(0, 1.0, 0.1)
    with pytest.raises(ValidationError):
        required_shots(1, 0.0, 0.1)
    with pytest.raises(ValidationError):
        required_shots(1, 1.0, 0.0)


# --- the sample container


def test_sampleset_validates_shape():
    with pytest.raises(ValidationError):
        SampleSet(np.zeros(5), seed=0, mode="exact")


# --- serialization


def test_save_load_roundtrip_is_float_exact(tmp_path, model):
    s = sample_exact(model, 60, seed=8)
    path = str(tmp_path / "samples.csv")
    save_samples(s, path, extra_meta={"tag": "roundtrip"})
    loaded = load_samples(path)
    assert np.array_equal(loaded.values, s.values)
    assert loaded.seed == 8
    assert loaded.mode == "exact"
    assert loaded.source == model.model_id()
    assert loaded.extra["tag"] == "roundtrip"


def test_saved_csv_header_and_sidecar(tmp_path, model):
    import json

    s = sample_with_shots(model, 4, ShotConfig(shots=8), seed=2)
    path = str(tmp_path / "shots.csv")
    save_samples(s, path)
    with open(path) as fh:
        assert fh.readline().strip() == "y1,y2"
    with open(path + ".meta.json") as fh:
        meta = json.load(fh)
    assert meta["format_version"] == 1
    assert meta["n_samples"] == 4
    assert meta["output_dim"] == 2
    assert meta["seed"] == 2
    assert meta["mode"] == "shots:8"
    assert meta["total_shots"] == 16


def test_load_without_sidecar(tmp_path, model):
    s = sample_exact(model, 10, seed=0)
    path = str(tmp_path / "bare.csv")
    save_samples(s, path)
    (tmp_path / "bare.csv.meta.json").unlink()
    loaded = load_samples(path)
    assert np.array_equal(loaded.values, s.values)
    assert loaded.mode == "unknown"


def test_load_rejects_foreign_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError):
        load_samples(str(path))
