import itertools
import math

import numpy as np
import pytest

from evsampler.analysis import (
    DEFAULT_Q_GRID,
    FourierSpectrum,
    binary_entropy,
    budget_coefficient,
    check_feasibility,
    circuit_output_function,
    covariance_rank,
    fourier_coefficients,
    observable_covariance,
    primary_covariance,
    primary_map_batch,
    primary_map_eval,
    random_encoding,
)
from evsampler.circuits import (
    Observable,
    SpectralSummary,
    expectation_batch,
    pauli_basis,
    run_circuit_batch,
)
from evsampler.errors import ValidationError
from evsampler.reuploading import FLIPPED_Z, build_reuploading

RNG = np.random.default_rng


# --- primary mapping


def test_primary_identity_component_is_one():
    circuit, weights = random_encoding(2, 2, 12, seed=0)
    xs = RNG(0).uniform(0, 2 * np.pi, size=(40, 2))
    vals = primary_map_batch(circuit, weights, xs)
    assert vals.shape == (40, 16)
    assert np.all(vals[:, 0] == 1.0)


def test_primary_single_qubit_bloch_norm():
    circuit, weights = random_encoding(1, 1, 8, seed=1)
    xs = RNG(1).uniform(0, 2 * np.pi, size=(30, 1))
    vals = primary_map_batch(circuit, weights, xs)
    radii = np.linalg.norm(vals[:, 1:], axis=1)
    assert np.max(np.abs(radii - 1.0)) < 1e-10


def test_primary_matches_direct_expectations():
    circuit, weights = random_encoding(2, 1, 10, seed=2)
    xs = RNG(2).uniform(0, 2 * np.pi, size=(5, 1))
    vals = primary_map_batch(circuit, weights, xs)
    states = run_circuit_batch(circuit, weights, xs)
    for j, obs in enumerate(pauli_basis(2)):
        ref = expectation_batch(states, obs)
        assert np.max(np.abs(vals[:, j] - ref)) < 1e-12


def test_primary_map_eval_single_input():
    circuit, weights = random_encoding(1, 1, 6, seed=3)
    row = primary_map_eval(circuit, weights, [0.7])
    batch = primary_map_batch(circuit, weights, np.array([[0.7]]))
    assert np.array_equal(row, batch[0])


def test_every_observable_is_linear_in_the_primary_map():
    # expectation of any Pauli combination is the coefficient vector applied
    # to the primary mapping row
    rng = RNG(4)
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
    for trial in range(20):
        circuit, weights = random_encoding(2, 2, 10, seed=100 + trial)
        coeffs = rng.normal(size=16)
        obs = Observable.from_paulis(2, list(zip(coeffs, labels)))
        xs = rng.uniform(0, 2 * np.pi, size=(8, 2))
        states = run_circuit_batch(circuit, weights, xs)
        direct = expectation_batch(states, obs)
        via_primary = primary_map_batch(circuit, weights, xs) @ coeffs
        assert np.max(np.abs(direct - via_primary)) < 1e-10


def test_primary_rejects_too_many_qubits():
    circuit, weights = random_encoding(8, 1, 4, seed=5)
    with pytest.raises(ValidationError):
        primary_map_batch(circuit, weights, np.zeros((2, 1)))


# --- covariance and rank


def test_covariance_identity_row_is_zero():
    circuit, weights = random_encoding(2, 2, 12, seed=6)
    rep = primary_covariance(circuit, weights, n_samples=512, seed=0)
    assert np.max(np.abs(rep.covariance[0, :])) < 1e-9
    assert np.max(np.abs(rep.covariance[:, 0])) < 1e-9


def test_covariance_is_psd():
    circuit, weights = random_encoding(2, 1, 10, seed=7)
    rep = primary_covariance(circuit, weights, n_samples=512, seed=0)
    assert rep.eigenvalues[-1] > -1e-9
    assert np.all(np.diff(rep.eigenvalues) <= 1e-15)  # sorted descending


def test_single_qubit_rank_bound():
    for trial in range(5):
        circuit, weights = random_encoding(1, 1, 8, seed=200 + trial)
        rep = primary_covariance(circuit, weights, n_samples=512, seed=0)
        assert rep.numerical_rank <= 3


def test_two_qubit_rank_bound():
    for trial in range(3):
        circuit, weights = random_encoding(2, 2, 12, seed=300 + trial)
        rep = primary_covariance(circuit, weights, n_samples=512, seed=0)
        assert rep.numerical_rank <= 15


def test_constant_encoding_has_rank_zero():
    # no data-bound gates: the output does not vary with the input
    circuit, weights = random_encoding(2, 0, 10, seed=8)
    rep = primary_covariance(circuit, weights, n_samples=256, seed=0)
    assert rep.numerical_rank == 0


def test_observable_rank_below_primary_rank():
    circuit, weights = random_encoding(2, 2, 12, seed=9)
    rep = primary_covariance(circuit, weights, n_samples=512, seed=0)
    obs = [Observable.from_paulis(2, [(1.0, "ZI")]),
           Observable.from_paulis(2, [(1.0, "IX")]),
           Observable.from_paulis(2, [(1.0, "YY")])]
    cov, rank = observable_covariance(circuit, weights, obs, n_samples=512, seed=0)
    assert cov.shape == (3, 3)
    assert rank <= rep.numerical_rank


def test_covariance_rank_edge_cases():
    assert covariance_rank(np.zeros(4)) == 0
    assert covariance_rank(np.array([1e-13, 1e-14])) == 0
    assert covariance_rank(np.array([1.0, 1e-3, 1e-12])) == 2


def test_primary_covariance_needs_two_samples():
    circuit, weights = random_encoding(1, 1, 4, seed=10)
    with pytest.raises(ValidationError):
        primary_covariance(circuit, weights, n_samples=1)


def test_report_dict_fields():
    circuit, weights = random_encoding(1, 1, 6, seed=11)
    rep = primary_covariance(circuit, weights, n_samples=128, seed=4)
    d = rep.to_dict()
    assert d["rank_bound"] == 3
    assert d["n_samples"] == 128
    assert d["seed"] == 4
    assert "covariance" not in d
    assert "covariance" in rep.to_dict(include_covariance=True)


def test_random_encoding_reproducible():
    c1, w1 = random_encoding(2, 1, 10, seed=42)
    c2, w2 = random_encoding(2, 1, 10, seed=42)
    assert np.array_equal(w1, w2)
    assert len(c1.gates) == len(c2.gates) == 10
    with pytest.raises(ValidationError):
        random_encoding(1, 1, 0)


# --- fourier


def test_fourier_cosine_oracle():
    spec = fourier_coefficients(lambda p: np.cos(p[:, 0]), dims=1, cutoff=2)
    assert spec.coefficient([1]) == pytest.approx(0.5, abs=1e-12)
    assert spec.coefficient([-1]) == pytest.approx(0.5, abs=1e-12)
    assert abs(spec.coefficient([0])) < 1e-12
    assert abs(spec.coefficient([2])) < 1e-12


def test_fourier_2d_product_oracle():
    # cos(a) sin(2b) = (e^{ia}+e^{-ia})/2 * (e^{2ib}-e^{-2ib})/(2i)
    def f(p):
        return np.cos(p[:, 0]) * np.sin(2 * p[:, 1])

    spec = fourier_coefficients(f, dims=2, cutoff=2)
    assert spec.coefficient([1, 2]) == pytest.approx(-0.25j, abs=1e-12)
    assert spec.coefficient([1, -2]) == pytest.approx(0.25j, abs=1e-12)
    assert spec.coefficient([-1, 2]) == pytest.approx(-0.25j, abs=1e-12)
    assert abs(spec.coefficient([0, 0])) < 1e-12
    assert abs(spec.coefficient([1, 1])) < 1e-12


def test_fourier_default_grid_is_alias_safe():
    spec = fourier_coefficients(lambda p: np.cos(3 * p[:, 0]), dims=1, cutoff=3)
    assert spec.points_per_dim == 4 * 3 + 4
    with pytest.raises(ValidationError, match="anti-aliasing"):
        fourier_coefficients(lambda p: np.cos(p[:, 0]), dims=1, cutoff=3,
                             points_per_dim=8)


def test_fourier_conjugate_symmetry_for_real_functions():
    circuit, weights = random_encoding(1, 1, 8, seed=12)
    f = circuit_output_function(circuit, weights, FLIPPED_Z)
    spec = fourier_coefficients(f, dims=1, cutoff=5)
    assert spec.conjugate_symmetry_error() < 1e-9


@pytest.mark.parametrize("layers", [1, 2, 3])
def test_reuploading_frequencies_cut_off_at_layer_count(layers):
    # with unit data weights each layer contributes one integer frequency
    rc = build_reuploading(1, layers)
    weights = RNG(13 + layers).uniform(-np.pi, np.pi, rc.n_weights)
    weights[list(rc.data_weight_indices())] = 1.0
    f = circuit_output_function(rc.circuit, weights, FLIPPED_Z)
    spec = fourier_coefficients(f, dims=1, cutoff=layers + 2)
    assert spec.max_abs_above(layers) <= 1e-9
    pts = RNG(14).uniform(0, 2 * np.pi, size=(100, 1))
    err = np.max(np.abs(spec.resynthesize(pts) - f(pts)))
    assert err <= 1e-8


def test_max_abs_above_with_nothing_above_limit():
    spec = fourier_coefficients(lambda p: np.cos(p[:, 0]), dims=1, cutoff=1)
    assert spec.max_abs_above(1) == 0.0


def test_coefficient_index_validation():
    spec = fourier_coefficients(lambda p: np.cos(p[:, 0]), dims=1, cutoff=2)
    with pytest.raises(ValidationError):
        spec.coefficient([1, 1])
    with pytest.raises(ValidationError):
        spec.coefficient([3])


def test_fourier_csv(tmp_path):
    spec = fourier_coefficients(lambda p: np.cos(p[:, 0]), dims=1, cutoff=1)
    path = str(tmp_path / "spec.csv")
    spec.to_csv(path, comments=["# origin=test"])
    lines = open(path).read().splitlines()
    assert lines[0] == "# origin=test"
    assert lines[1] == "k1,re,im"
    assert len(lines) == 2 + 3  # k in {-1, 0, 1}
    ks = [int(line.split(",")[0]) for line in lines[2:]]
    assert ks == [-1, 0, 1]


def test_fourier_input_validation():
    with pytest.raises(ValidationError):
        fourier_coefficients(lambda p: p[:, 0], dims=0, cutoff=1)
    with pytest.raises(ValidationError):
        fourier_coefficients(lambda p: p[:, 0], dims=1, cutoff=-1)


# --- feasibility


def _z_summary():
    return SpectralSummary(lambda_min=-1.0, lambda_max=1.0,
                           spectral_norm=1.0, capital_lambda=1.0)


def test_binary_entropy_pinned_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0


def test_budget_coefficient_interior_maximum():
    coeffs = budget_coefficient(DEFAULT_Q_GRID)
    best = int(np.argmax(coeffs))
    assert 0 < best < DEFAULT_Q_GRID.size - 1
    assert DEFAULT_Q_GRID[best] == 0.94
    assert coeffs[best] == pytest.approx(0.23905, abs=1e-4)


def test_dimension_check_examples():
    bad = check_feasibility(1, 4, 0.1, [_z_summary()] * 4)
    assert not bad.checks[0].passed
    assert not bad.feasible
    good = check_feasibility(1, 3, 0.1, [_z_summary()] * 3)
    assert good.checks[0].passed


def test_spectral_check_on_z():
    rep = check_feasibility(1, 1, 0.05, [_z_summary()])
    spectral = next(c for c in rep.checks if c.name == "spectral_range")
    assert spectral.passed
    assert spectral.observed == 1.0
    narrow = SpectralSummary(lambda_min=-0.5, lambda_max=0.5,
                             spectral_norm=0.5, capital_lambda=0.25)
    rep2 = check_feasibility(1, 1, 0.05, [narrow])
    assert not next(c for c in rep2.checks if c.name == "spectral_range").passed


def test_worked_qubit_budget_example():
    # Lambda = 1, eps = 0.1, M = 100: 0.23905 * 0.81 * 100 = 19.36 -> 20
    rep = check_feasibility(30, 100, 0.1, [_z_summary()] * 100)
    assert rep.required_n == 20
    assert next(c for c in rep.checks if c.name == "qubit_budget").passed
    short = check_feasibility(19, 100, 0.1, [_z_summary()] * 100)
    assert not next(c for c in short.checks if c.name == "qubit_budget").passed


def test_required_n_monotone_in_output_dim():
    values = [check_feasibility(30, m, 0.1, [_z_summary()] * m).required_n
              for m in (10, 30, 100, 300)]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[0] < values[-1]


def test_required_n_decreasing_in_capital_lambda():
    def summary(lam):
        r = math.sqrt(lam)
        return SpectralSummary(lambda_min=-r, lambda_max=r,
                               spectral_norm=r, capital_lambda=lam)

    values = [check_feasibility(30, 50, 0.1, [summary(lam)] * 50).required_n
              for lam in (0.25, 0.5, 1.0, 2.0)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert values[0] > values[-1]


def test_nonpositive_lambda_means_infeasible():
    one_sided = SpectralSummary(lambda_min=0.0, lambda_max=2.0,
                                spectral_norm=2.0, capital_lambda=0.0)
    rep = check_feasibility(5, 1, 0.1, [one_sided])
    assert math.isinf(rep.required_n)
    assert not next(c for c in rep.checks if c.name == "qubit_budget").passed
    assert rep.to_dict()["required_n"] == "inf"


def test_norm_variant_reported_but_not_binding():
    wide = SpectralSummary(lambda_min=-0.1, lambda_max=10.0,
                           spectral_norm=10.0, capital_lambda=1.0)
    rep = check_feasibility(30, 100, 0.1, [wide] * 100)
    assert rep.required_n_norm_variant < rep.required_n
    labels = [c.name for c in rep.checks]
    assert labels == ["dimension", "spectral_range", "qubit_budget"]


def test_feasibility_validation():
    with pytest.raises(ValidationError):
        check_feasibility(1, 1, 0.0, [_z_summary()])
    with pytest.raises(ValidationError):
        check_feasibility(1, 1, 1.0, [_z_summary()])
    with pytest.raises(ValidationError):
        check_feasibility(0, 1, 0.1, [_z_summary()])
    with pytest.raises(ValidationError):
        check_feasibility(1, 0, 0.1, [])
    with pytest.raises(ValidationError):
        check_feasibility(1, 2, 0.1, [_z_summary()])
    with pytest.raises(ValidationError):
        check_feasibility(1, 1, 0.1, [_z_summary()], q_grid=np.array([0.5]))
    with pytest.raises(ValidationError):
        check_feasibility(1, 1, 0.1, [_z_summary()], q_grid=np.array([]))


def test_report_json_roundtrip():
    import json

    rep = check_feasibility(2, 3, 0.1, [_z_summary()] * 3)
    d = json.loads(rep.to_json())
    assert d["feasible"] == rep.feasible
    assert len(d["checks"]) == 3
    assert d["parameters"]["output_dim"] == 3
    assert d["q_star"] == 0.94
