"""Expressivity diagnostics for expectation-value models.

Three tools:

* primary mapping: the vector of all 4**n Pauli-string expectations of the
  encoded state as a function of the input; any observable-based model output
  is a fixed linear transformation of it, so the numerical rank of its
  covariance under uniform inputs bounds how many uncorrelated outputs the
  encoding can produce (at most 4**n - 1, the identity component is constant);
* Fourier spectrum: model outputs over [0, 2*pi)^M are trigonometric
  polynomials, so rectangle-rule quadrature on a fine enough grid recovers
  their coefficients exactly (Q >= 4K + 4 guards aliasing);
* feasibility checks: necessary conditions on (n, M, epsilon) and the
  observable spectra for an epsilon-accurate model to exist at all, including
  the information-theoretic qubit budget n >= c(q) * gamma**2 * M / Lambda
  maximized over a grid of distinguishability levels q.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import (
    MAX_DENSE_QUBITS,
    Binding,
    GateOp,
    Observable,
    ParameterizedCircuit,
    SpectralSummary,
    expectation_batch,
    pauli_basis,
    run_circuit_batch,
)
from .errors import ValidationError
from .rng import keyed_generator

_RANK_REL_THRESHOLD = 1e-8
_RANK_ABS_FLOOR = 1e-12
_PAULI_STACK = None  # lazy (4, 2, 2) sigma stack in IXYZ order

_RESYNTH_CHUNK = 512
_PAULI_CHUNK = 256


def _pauli_stack() -> np.ndarray:
    global _PAULI_STACK
    if _PAULI_STACK is None:
        from .circuits import PAULI_MATRICES

        _PAULI_STACK = np.stack([PAULI_MATRICES[c] for c in "IXYZ"]).astype(complex)
    return _PAULI_STACK


# ---------------------------------------------------------------------------
# primary mapping


def _pauli_expectations(states: np.ndarray) -> np.ndarray:
    """All Pauli-string expectations of each state row, shape (N, 4**n).

    Index order matches pauli_basis: base-4 digits (I,X,Y,Z) with qubit 0 as
    the most significant digit.  Expectations are Rayleigh quotients (rows are
    normalized by their identity component), and component 0 is set to exactly
    1.0 afterwards.
    """
    states = np.asarray(states, dtype=complex)
    n_states, dim = states.shape
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise ValidationError(f"state dimension {dim} is not a power of two")
    if n > MAX_DENSE_QUBITS:
        raise ValidationError(f"{n} qubits exceeds the dense Pauli limit {MAX_DENSE_QUBITS}")
    sig = _pauli_stack()
    out = np.empty((n_states, 4**n))
    for start in range(0, n_states, _PAULI_CHUNK):
        psi = states[start:start + _PAULI_CHUNK]
        rho = psi[:, :, None] * psi[:, None, :].conj()  # rho[b, i, j] = psi_i psi_j*
        t = rho.reshape(psi.shape[0], 1, dim, dim)
        for m in range(n):
            b, k, r, _ = t.shape
            half = r // 2
            view = t.reshape(b, k, 2, half, 2, half)
            t = np.einsum("aji,bkipjq->bkapq", sig, view).reshape(b, 4 * k, half, half)
        vals = t.reshape(psi.shape[0], 4**n).real
        out[start:start + psi.shape[0]] = vals / vals[:, :1]
    out[:, 0] = 1.0
    return out


def primary_map_batch(circuit: ParameterizedCircuit, weights, xs: np.ndarray) -> np.ndarray:
    """Primary mapping rows (N, 4**n) for a batch of inputs (angles)."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2:
        raise ValidationError(f"expected an (N, data_dim) input batch, got shape {xs.shape}")
    states = run_circuit_batch(circuit, weights, xs)
    return _pauli_expectations(states)


def primary_map_eval(circuit: ParameterizedCircuit, weights, x) -> np.ndarray:
    """Primary mapping of a single input: all 4**n Pauli expectations."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return primary_map_batch(circuit, weights, x[None, :])[0]


@dataclass
class PrimaryMappingReport:
    n_qubits: int
    covariance: np.ndarray
    eigenvalues: np.ndarray  # sorted descending
    numerical_rank: int
    threshold: float
    n_samples: int
    seed: int

    def to_dict(self, include_covariance: bool = False) -> dict:
        out = {
            "n_qubits": self.n_qubits,
            "eigenvalues": self.eigenvalues.tolist(),
            "numerical_rank": self.numerical_rank,
            "threshold": self.threshold,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "rank_bound": 4**self.n_qubits - 1,
        }
        if include_covariance:
            out["covariance"] = self.covariance.tolist()
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(**kwargs), indent=2, sort_keys=True)


def covariance_rank(eigenvalues: np.ndarray,
                    threshold: float = _RANK_REL_THRESHOLD) -> int:
    """Count of eigenvalues above threshold*largest; 0 if all below 1e-12."""
    eig = np.asarray(eigenvalues, dtype=float)
    top = float(eig.max(initial=0.0))
    if top <= _RANK_ABS_FLOOR:
        return 0
    return int(np.sum(eig > threshold * top))


def primary_covariance(circuit: ParameterizedCircuit, weights,
                       n_samples: int = 4096, seed: int = 0,
                       threshold: float = _RANK_REL_THRESHOLD) -> PrimaryMappingReport:
    """Empirical covariance of the primary mapping over uniform [0, 2*pi) inputs."""
    if n_samples < 2:
        raise ValidationError(f"n_samples must be >= 2, got {n_samples}")
    rng = keyed_generator(seed, 0)
    data_dim = max(circuit.data_dim, 1)
    xs = rng.random((n_samples, data_dim)) * (2.0 * math.pi)
    if circuit.data_dim == 0:
        xs = np.zeros((n_samples, 0))
    values = primary_map_batch(circuit, weights, xs)
    cov = np.cov(values, rowvar=False)
    cov = 0.5 * (cov + cov.T)
    eig = np.linalg.eigvalsh(cov)[::-1].copy()
    return PrimaryMappingReport(
        n_qubits=circuit.n_qubits,
        covariance=cov,
        eigenvalues=eig,
        numerical_rank=covariance_rank(eig, threshold),
        threshold=threshold,
        n_samples=n_samples,
        seed=seed,
    )


def observable_covariance(circuit: ParameterizedCircuit, weights,
                          observables: list[Observable],
                          n_samples: int = 4096, seed: int = 0,
                          threshold: float = _RANK_REL_THRESHOLD) -> tuple[np.ndarray, int]:
    """Empirical output covariance and its numerical rank for a set of observables.

    Uses the same input stream as primary_covariance, so ranks are comparable.
    """
    rng = keyed_generator(seed, 0)
    xs = rng.random((n_samples, max(circuit.data_dim, 1))) * (2.0 * math.pi)
    if circuit.data_dim == 0:
        xs = np.zeros((n_samples, 0))
    states = run_circuit_batch(circuit, weights, xs)
    cols = [expectation_batch(states, obs) for obs in observables]
    values = np.stack(cols, axis=1)
    cov = np.atleast_2d(np.cov(values, rowvar=False))
    cov = 0.5 * (cov + cov.T)
    eig = np.linalg.eigvalsh(cov)[::-1].copy()
    return cov, covariance_rank(eig, threshold)


def random_encoding(n_qubits: int, data_dim: int, n_gates: int,
                    seed: int = 0) -> tuple[ParameterizedCircuit, np.ndarray]:
    """A random encoding circuit mixing data-bound and trainable rotations."""
    if n_gates < 1:
        raise ValidationError(f"n_gates must be >= 1, got {n_gates}")
    rng = keyed_generator(seed, 4)
    kinds = ["RX", "RY", "RZ"] + (["CNOT"] if n_qubits >= 2 else [])
    gates = []
    n_weights = 0
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "CNOT":
            c, t = rng.choice(n_qubits, size=2, replace=False)
            gates.append(GateOp("CNOT", (int(c), int(t))))
            continue
        q = int(rng.integers(n_qubits))
        if data_dim > 0 and rng.random() < 0.5:
            binding = Binding.data_product(int(rng.integers(data_dim)), n_weights)
        else:
            binding = Binding.trainable(n_weights)
        n_weights += 1
        gates.append(GateOp(kind, (q,), binding))
    circuit = ParameterizedCircuit(n_qubits, tuple(gates), data_dim=data_dim)
    weights = rng.uniform(-math.pi, math.pi, size=n_weights)
    return circuit, weights


# ---------------------------------------------------------------------------
# Fourier spectrum


@dataclass
class FourierSpectrum:
    """Fourier coefficients c_k of a function on [0, 2*pi)^dims, k in [-K..K]^dims.

    coefficients has shape (2K+1,)*dims; axis index i corresponds to frequency
    k = i - K for that dimension.
    """

    dims: int
    cutoff: int
    points_per_dim: int
    coefficients: np.ndarray

    def frequencies(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def coefficient(self, k) -> complex:
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if k.shape != (self.dims,):
            raise ValidationError(f"frequency index must have {self.dims} components")
        if np.any(np.abs(k) > self.cutoff):
            raise ValidationError(f"frequency {k.tolist()} outside cutoff {self.cutoff}")
        return complex(self.coefficients[tuple(k + self.cutoff)])

    def max_abs_above(self, limit: int) -> float:
        """Largest |c_k| among frequencies with some |k_m| > limit (0 if none)."""
        freqs = self.frequencies()
        mask = np.zeros(self.coefficients.shape, dtype=bool)
        for axis in range(self.dims):
            shape = [1] * self.dims
            shape[axis] = freqs.size
            mask |= np.abs(freqs).reshape(shape) > limit
        if not mask.any():
            return 0.0
        return float(np.abs(self.coefficients[mask]).max())

    def conjugate_symmetry_error(self) -> float:
        flipped = self.coefficients[(slice(None, None, -1),) * self.dims]
        return float(np.abs(self.coefficients - flipped.conj()).max())

    def resynthesize(self, points: np.ndarray) -> np.ndarray:
        """Evaluate sum_k c_k exp(i k.x) at the given points (N, dims)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.dims:
            raise ValidationError(f"points must have {self.dims} columns")
        freqs = self.frequencies()
        grids = np.meshgrid(*([freqs] * self.dims), indexing="ij")
        kvecs = np.stack([g.ravel() for g in grids], axis=1)  # (n_freq, dims)
        flat = self.coefficients.ravel()
        out = np.empty(pts.shape[0], dtype=complex)
        for start in range(0, pts.shape[0], _RESYNTH_CHUNK):
            chunk = pts[start:start + _RESYNTH_CHUNK]
            out[start:start + chunk.shape[0]] = np.exp(1j * (chunk @ kvecs.T)) @ flat
        return out[0] if single else out

    def to_csv(self, path: str, comments: list[str] | None = None) -> None:
        """Write rows k1..kM,re,im with 17 significant digits."""
        from .samplers import _atomic_write

        freqs = self.frequencies()
        grids = np.meshgrid(*([freqs] * self.dims), indexing="ij")
        kvecs = np.stack([g.ravel() for g in grids], axis=1)
        flat = self.coefficients.ravel()
        lines = list(comments or [])
        lines.append(",".join(f"k{m + 1}" for m in range(self.dims)) + ",re,im")
        for kvec, c in zip(kvecs, flat):
            ks = ",".join(str(int(k)) for k in kvec)
            lines.append(f"{ks},{c.real:.17g},{c.imag:.17g}")
        _atomic_write(path, "\n".join(lines) + "\n")

    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "cutoff": self.cutoff,
            "points_per_dim": self.points_per_dim,
            "coefficients_re": self.coefficients.real.tolist(),
            "coefficients_im": self.coefficients.imag.tolist(),
        }


def fourier_coefficients(f, dims: int, cutoff: int,
                         points_per_dim: int | None = None) -> FourierSpectrum:
    """Rectangle-rule Fourier coefficients of f over [0, 2*pi)^dims.

    `f` takes an (N, dims) array and returns (N,) real or complex values.
    Exact for trigonometric polynomials of degree <= cutoff when
    points_per_dim >= 4*cutoff + 4 (the default), which keeps every aliased
    copy of the extracted band out of range.
    """
    if dims < 1:
        raise ValidationError(f"dims must be >= 1, got {dims}")
    if cutoff < 0:
        raise ValidationError(f"cutoff must be >= 0, got {cutoff}")
    q = 4 * cutoff + 4 if points_per_dim is None else int(points_per_dim)
    if q < 4 * cutoff + 4:
        raise ValidationError(
            f"points_per_dim {q} is below the anti-aliasing bound {4 * cutoff + 4}"
        )
    axis = 2.0 * math.pi * np.arange(q) / q
    grids = np.meshgrid(*([axis] * dims), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    values = np.asarray(f(pts)).reshape((q,) * dims)
    table = np.fft.fftn(values) / q**dims
    idx = np.ix_(*([np.arange(-cutoff, cutoff + 1) % q] * dims))
    return FourierSpectrum(dims, cutoff, q, np.ascontiguousarray(table[idx]))


def circuit_output_function(circuit: ParameterizedCircuit, weights, obs: Observable):
    """Scalar model output x -> <obs> as a function over input space."""

    def f(points: np.ndarray) -> np.ndarray:
        states = run_circuit_batch(circuit, weights, np.asarray(points, dtype=float))
        return expectation_batch(states, obs)

    return f


# ---------------------------------------------------------------------------
# feasibility


def binary_entropy(q) -> np.ndarray:
    """Binary entropy in bits, elementwise; H(0) = H(1) = 0."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    inside = (q > 0.0) & (q < 1.0)
    qi = q[inside]
    out[inside] = -(qi * np.log2(qi) + (1.0 - qi) * np.log2(1.0 - qi))
    return out


def budget_coefficient(q) -> np.ndarray:
    """(1 - H(q)) / ln(1/(1-q)): information gained per qubit at error level q.

    Vanishes at both ends of (1/2, 1): near 1/2 nothing is learned, near 1 the
    log of the failure probability blows up, so the maximum is interior.
    """
    q = np.asarray(q, dtype=float)
    return (1.0 - binary_entropy(q)) / np.log(1.0 / (1.0 - q))


DEFAULT_Q_GRID = np.round(np.arange(51, 100) / 100.0, 2)


@dataclass
class FeasibilityCheck:
    name: str
    passed: bool
    bound: float
    observed: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "bound": _json_number(self.bound),
            "observed": _json_number(self.observed),
            "note": self.note,
        }


def _json_number(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


@dataclass
class FeasibilityReport:
    checks: list[FeasibilityCheck]
    n_qubits: int
    output_dim: int
    epsilon: float
    gamma: float
    q_grid: np.ndarray
    entropy_values: np.ndarray
    spectra: list[SpectralSummary]
    q_star: float
    coefficient_at_q_star: float
    required_n: float
    required_n_norm_variant: float
    per_observable_required_n: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "checks": [c.to_dict() for c in self.checks],
            "parameters": {
                "n_qubits": self.n_qubits,
                "output_dim": self.output_dim,
                "epsilon": self.epsilon,
                "gamma": self.gamma,
                "q_grid": self.q_grid.tolist(),
                "entropy_values": self.entropy_values.tolist(),
                "spectra": [
                    {
                        "lambda_min": s.lambda_min,
                        "lambda_max": s.lambda_max,
                        "spectral_norm": s.spectral_norm,
                        "capital_lambda": s.capital_lambda,
                    }
                    for s in self.spectra
                ],
            },
            "q_star": self.q_star,
            "coefficient_at_q_star": self.coefficient_at_q_star,
            "required_n": _json_number(self.required_n),
            "required_n_norm_variant": _json_number(self.required_n_norm_variant),
            "per_observable_required_n": [
                _json_number(v) for v in self.per_observable_required_n
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def check_feasibility(n_qubits: int, output_dim: int, epsilon: float,
                      spectra: list[SpectralSummary],
                      q_grid: np.ndarray | None = None) -> FeasibilityReport:
    """Necessary-condition checks for an epsilon-accurate model to exist.

    (i) dimension: M <= 4**n - 1; (ii) every observable's spectrum reaches
    both -1+epsilon and 1-epsilon; (iii) qubit budget: n at least
    max_q coeff(q) * gamma**2 * M / Lambda for each observable's Lambda
    (gamma = 1 - epsilon), reported as the max over observables.  A variant of
    (iii) with the squared spectral norm in place of Lambda is reported for
    reference but does not enter the verdict.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon}")
    if n_qubits < 1:
        raise ValidationError(f"n_qubits must be >= 1, got {n_qubits}")
    if output_dim < 1:
        raise ValidationError(f"output_dim must be >= 1, got {output_dim}")
    if len(spectra) != output_dim:
        raise ValidationError(
            f"{len(spectra)} spectral summaries for output_dim {output_dim}"
        )
    grid = DEFAULT_Q_GRID if q_grid is None else np.asarray(q_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0.5) or np.any(grid >= 1.0):
        raise ValidationError("q_grid must lie strictly inside (1/2, 1)")
    gamma = 1.0 - epsilon
    coeffs = budget_coefficient(grid)
    best = int(np.argmax(coeffs))
    q_star, c_star = float(grid[best]), float(coeffs[best])

    dim_bound = 4**n_qubits - 1
    checks = [FeasibilityCheck(
        name="dimension",
        passed=output_dim <= dim_bound,
        bound=float(dim_bound),
        observed=float(output_dim),
        note="output_dim must not exceed 4**n - 1",
    )]

    margins = [min(-s.lambda_min, s.lambda_max) for s in spectra]
    spectral_observed = min(margins) if margins else math.inf
    checks.append(FeasibilityCheck(
        name="spectral_range",
        passed=spectral_observed >= gamma,
        bound=gamma,
        observed=float(spectral_observed),
        note="each observable needs lambda_min <= -1+eps and lambda_max >= 1-eps",
    ))

    def required(scale: float) -> float:
        if scale <= 0.0:
            return math.inf
        return c_star * gamma**2 * output_dim / scale

    per_obs = [required(s.capital_lambda) for s in spectra]
    per_obs_norm = [required(s.spectral_norm**2) for s in spectra]
    raw_required = max(per_obs) if per_obs else 0.0
    raw_norm = max(per_obs_norm) if per_obs_norm else 0.0
    required_n = math.ceil(raw_required) if math.isfinite(raw_required) else math.inf
    required_norm = math.ceil(raw_norm) if math.isfinite(raw_norm) else math.inf
    checks.append(FeasibilityCheck(
        name="qubit_budget",
        passed=math.isfinite(required_n) and n_qubits >= required_n,
        bound=float(required_n),
        observed=float(n_qubits),
        note=f"information bound maximized at q = {q_star:g}",
    ))

    return FeasibilityReport(
        checks=checks,
        n_qubits=n_qubits,
        output_dim=output_dim,
        epsilon=epsilon,
        gamma=gamma,
        q_grid=grid,
        entropy_values=binary_entropy(grid),
        spectra=list(spectra),
        q_star=q_star,
        coefficient_at_q_star=c_star,
        required_n=float(required_n) if math.isfinite(required_n) else math.inf,
        required_n_norm_variant=(
            float(required_norm) if math.isfinite(required_norm) else math.inf
        ),
        per_observable_required_n=per_obs,
    )


__all__ = [
    "PrimaryMappingReport",
    "FourierSpectrum",
    "FeasibilityCheck",
    "FeasibilityReport",
    "DEFAULT_Q_GRID",
    "primary_map_eval",
    "primary_map_batch",
    "primary_covariance",
    "observable_covariance",
    "covariance_rank",
    "random_encoding",
    "fourier_coefficients",
    "circuit_output_function",
    "binary_entropy",
    "budget_coefficient",
    "check_feasibility",
]
