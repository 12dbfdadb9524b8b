"""End-to-end acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the summary lines.  Each
test computes its quantities first, prints one line, then asserts, so a failing
criterion still reports itself before the traceback.
"""

import itertools
import math

import numpy as np

from evsampler.analysis import (
    check_feasibility,
    circuit_output_function,
    fourier_coefficients,
    primary_covariance,
    random_encoding,
)
from evsampler.circuits import (
    Observable,
    SpectralSummary,
    StateVector,
    expectation,
    expectation_batch,
)
from evsampler.families import (
    bimodal_1d,
    dirichlet_projected,
    gaussian_2d_correlated,
    gaussian_nd,
    uniform_1d,
)
from evsampler.generators import (
    build_dense_encoder,
    build_product_encoder,
    build_simplex_encoder,
)
from evsampler.metrics import ks_marginals, w1_1d, w1_exact, w1_sliced
from evsampler.reuploading import FLIPPED_Z, FitConfig, build_reuploading
from evsampler.rng import keyed_generator
from evsampler.samplers import (
    ShotConfig,
    sample_exact,
    sample_with_shots,
    shot_estimates,
)
from evsampler.target_maps import build_triangular_map, sample_via_map

RNG = np.random.default_rng


def _report(number: int, name: str, ok: bool) -> bool:
    print(f"[ACCEPT] criterion {number} {name}: {'PASS' if ok else 'FAIL'}")
    return ok


def _ks_vs_grid_cdf(samples: np.ndarray, density, coord: int) -> float:
    """One-sample KS statistic against the grid density's marginal CDF."""
    xs = np.sort(samples)
    n = xs.shape[0]
    cdf = density.marginal_cdf_at(coord, xs)
    upper = np.max(np.abs(cdf - (np.arange(1, n + 1)) / n))
    lower = np.max(np.abs(cdf - np.arange(n) / n))
    return max(upper, lower)


def test_criterion_01_product_encoder_universality():
    density = bimodal_1d()
    tri = build_triangular_map(density)
    oracle = sample_via_map(tri, 100_000, seed=11).values[:, 0]
    cfg = FitConfig(grid_points_per_dim=128, max_iters=2000, tolerance=1e-14,
                    restarts=3, step_size=0.25, gradient_mode="central", seed=0)
    w1 = {}
    for layers in (2, 4, 8):
        model = build_product_encoder(density, layers, fit_cfg=cfg)
        out = sample_exact(model, 100_000, seed=1).values[:, 0]
        w1[layers] = w1_1d(out, oracle)
    ok = (w1[4] <= 1.1 * w1[2]) and (w1[8] <= 1.1 * w1[4]) and (w1[8] <= 0.05)
    _report(1, "product-encoder universality "
               f"(W1 {w1[2]:.4f}/{w1[4]:.4f}/{w1[8]:.4f} over L=2/4/8)", ok)
    assert ok


def test_criterion_02_dense_encoder_exactness():
    density = gaussian_nd(3)
    model = build_dense_encoder(density)
    assert model.n_qubits == 2
    rng = RNG(21)
    worst = 0.0
    for _ in range(100):
        y = rng.uniform(-1.0, 1.0, 3)
        z = np.sqrt((y + 1.0) / 6.0)
        amps = np.zeros(4, dtype=complex)
        amps[:3] = z
        amps[3] = np.sqrt(max(0.0, 1.0 - np.sum(z**2)))
        for m, obs in enumerate(model.observables):
            worst = max(worst, abs(expectation_batch(amps[None, :], obs)[0] - y[m]))
    out = sample_exact(model, 10_000, seed=2).values
    oracle = sample_via_map(model.tri_map, 10_000, seed=12).values
    dist = w1_sliced(out, oracle, n_projections=256, seed=0)
    ok = worst <= 1e-12 and dist <= 0.05
    _report(2, f"dense-encoder exactness (max readout error {worst:.2e}, "
               f"sliced W1 {dist:.4f})", ok)
    assert ok


def test_criterion_03_covariance_rank_bounds():
    ranks_1q = []
    for trial in range(20):
        circuit, weights = random_encoding(1, 1, 8, seed=1000 + trial)
        ranks_1q.append(primary_covariance(circuit, weights, seed=0).numerical_rank)
    ranks_2q = []
    for trial in range(10):
        circuit, weights = random_encoding(2, 2, 12, seed=2000 + trial)
        ranks_2q.append(primary_covariance(circuit, weights, seed=0).numerical_rank)
    const_ranks = []
    for trial in range(3):
        circuit, weights = random_encoding(2, 0, 10, seed=3000 + trial)
        const_ranks.append(primary_covariance(circuit, weights, seed=0).numerical_rank)
    ok = (max(ranks_1q) <= 3 and max(ranks_2q) <= 15 and max(const_ranks) == 0)
    _report(3, f"covariance rank bounds (1q max {max(ranks_1q)}/3, "
               f"2q max {max(ranks_2q)}/15, constant {max(const_ranks)})", ok)
    assert ok


def test_criterion_04_fourier_cutoff():
    worst_leak = 0.0
    worst_resynth = 0.0
    for layers in (1, 2, 3):
        rc = build_reuploading(1, layers)
        weights = keyed_generator(40 + layers, 5).uniform(-math.pi, math.pi,
                                                          size=rc.n_weights)
        weights[list(rc.data_weight_indices())] = 1.0
        f = circuit_output_function(rc.circuit, weights, FLIPPED_Z)
        spec = fourier_coefficients(f, dims=1, cutoff=layers + 2)
        worst_leak = max(worst_leak, spec.max_abs_above(layers))
        pts = RNG(41).uniform(0, 2 * math.pi, size=(100, 1))
        worst_resynth = max(worst_resynth,
                            float(np.max(np.abs(spec.resynthesize(pts) - f(pts)))))
    ok = worst_leak <= 1e-9 and worst_resynth <= 1e-8
    _report(4, f"fourier cutoff (leak {worst_leak:.2e}, "
               f"resynthesis {worst_resynth:.2e})", ok)
    assert ok


def test_criterion_05_shot_noise_scaling():
    density = uniform_1d()
    cfg = FitConfig(grid_points_per_dim=32, max_iters=300, restarts=2, seed=0)
    model = build_product_encoder(density, layers=2, fit_cfg=cfg)
    exact = sample_exact(model, 10_000, seed=5).values[:, 0]
    shots = (100, 1_000, 10_000)
    dists = []
    for t in shots:
        noisy = sample_with_shots(model, 10_000, ShotConfig(t), seed=5).values[:, 0]
        dists.append(w1_1d(exact, noisy))
    slope = np.polyfit(np.log(shots), np.log(dists), 1)[0]
    ok = -0.65 <= slope <= -0.35
    _report(5, f"shot-noise scaling (slope {slope:.3f}, "
               f"W1 {dists[0]:.4f}/{dists[1]:.4f}/{dists[2]:.4f})", ok)
    assert ok


def test_criterion_06_feasibility_checker():
    z = SpectralSummary(-1.0, 1.0, 1.0, 1.0)
    dim_fail = check_feasibility(1, 4, 0.1, [z] * 4)
    dim_pass = check_feasibility(1, 3, 0.1, [z] * 3)
    spectral = next(c for c in check_feasibility(1, 1, 0.05, [z]).checks
                    if c.name == "spectral_range")
    in_m = [check_feasibility(30, m, 0.1, [z] * m).required_n
            for m in (10, 20, 50, 100, 200)]

    def lam_summary(lam):
        r = math.sqrt(lam)
        return SpectralSummary(-r, r, r, lam)

    in_lam = [check_feasibility(30, 50, 0.1, [lam_summary(lam)] * 50).required_n
              for lam in (0.25, 0.5, 1.0, 2.0, 4.0)]
    ok = (not dim_fail.checks[0].passed
          and dim_pass.checks[0].passed
          and spectral.passed
          and all(a <= b for a, b in zip(in_m, in_m[1:])) and in_m[0] < in_m[-1]
          and all(a >= b for a, b in zip(in_lam, in_lam[1:])) and in_lam[0] > in_lam[-1])
    _report(6, "feasibility checker (dimension examples, Z spectral check, "
               "monotone qubit budget)", ok)
    assert ok


def test_criterion_07_w1_oracle_equivalence():
    rng = RNG(70)
    worst_bf = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        a, b = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
        cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
        brute = min(cost[np.arange(n), perm].sum()
                    for perm in itertools.permutations(range(n))) / n
        worst_bf = max(worst_bf, abs(w1_exact(a, b) - brute))
    worst_1d = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 30))
        a, b = rng.normal(size=n), rng.normal(size=n)
        worst_1d = max(worst_1d, abs(w1_1d(a, b) - w1_exact(a, b)))
    shifts = rng.integers(0, 1024, size=500) / 1024.0
    translation = w1_1d(shifts, shifts + 0.5)
    ok = worst_bf <= 1e-10 and worst_1d <= 1e-10 and translation == 0.5
    _report(7, f"w1 oracle equivalence (brute-force gap {worst_bf:.2e}, "
               f"1d gap {worst_1d:.2e}, translation {translation!r})", ok)
    assert ok


def test_criterion_08_triangular_map_pushforward():
    density = gaussian_2d_correlated(rho=0.7, radius=3.0)
    tri = build_triangular_map(density)
    samples = sample_via_map(tri, 100_000, seed=80).values
    ks = [_ks_vs_grid_cdf(samples[:, k], density, k) for k in range(2)]
    cov = density.covariance()
    rho_grid = cov[0, 1] / math.sqrt(cov[0, 0] * cov[1, 1])
    rho_emp = np.corrcoef(samples.T)[0, 1]
    ok = max(ks) <= 0.01 and abs(rho_emp - rho_grid) <= 0.02
    _report(8, f"triangular map pushforward (KS {ks[0]:.4f}/{ks[1]:.4f}, "
               f"rho {rho_emp:.4f} vs {rho_grid:.4f})", ok)
    assert ok


def test_criterion_09_estimator_unbiased():
    rng = RNG(90)
    ok = True
    worst_sigmas = 0.0
    for pair in range(10):
        n = 1 + pair % 2
        dim = 2**n
        raw = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        state = StateVector(n, raw / np.linalg.norm(raw))
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        obs = Observable.from_dense(a + a.conj().T)
        target = expectation(state, obs)
        est = shot_estimates(state, obs, shots=1, n_repeats=10_000, seed=900 + pair)
        se = est.std(ddof=1) / math.sqrt(est.shape[0])
        sigmas = abs(est.mean() - target) / se
        worst_sigmas = max(worst_sigmas, sigmas)
        ok = ok and sigmas <= 3.0
    _report(9, f"estimator unbiasedness (worst deviation {worst_sigmas:.2f} "
               "standard errors)", ok)
    assert ok


def test_criterion_10_simplex_encoder():
    density = dirichlet_projected(alphas=(2.0, 2.0, 2.0, 2.0))
    model = build_simplex_encoder(density)
    assert (model.output_dim, model.n_qubits) == (4, 2)
    out = sample_exact(model, 10_000, seed=3).values
    sum_err = float(np.max(np.abs(out.sum(axis=1) - 1.0)))
    oracle = RNG(100).dirichlet((2.0, 2.0, 2.0, 2.0), size=100_000)
    ks = ks_marginals(out, oracle)
    ok = sum_err <= 1e-12 and float(ks.max()) <= 0.02
    _report(10, f"simplex encoder (sum error {sum_err:.2e}, "
                f"max marginal KS {ks.max():.4f})", ok)
    assert ok
