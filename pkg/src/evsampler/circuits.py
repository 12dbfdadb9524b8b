"""Dense statevector simulation of small parameterized circuits.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a basis index, so for two qubits the
  basis order is |00>, |01>, |10>, |11> with qubit 0 written first.
* Circuits act on the all-zeros state unless an explicit initial batch is
  supplied.
* Gate angles come from bindings: a fixed constant, a trainable weight, or a
  data product (angle = x[data_index] * weights[weight_index]).
* Expectations are Rayleigh quotients <psi|O|psi> / <psi|psi>, which keeps
  eigenstate expectations exact and is insensitive to the 1e-12 normalization
  slack allowed on states.

Dense simulation is intentionally capped: at most 12 qubits for states and 7
qubits for dense observable matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ValidationError

MAX_STATE_QUBITS = 12
MAX_DENSE_QUBITS = 7

_ATOL_NORM = 1e-12
_ATOL_HERMITIAN = 1e-12
_ATOL_UNITARY = 1e-12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on `n_qubits` qubits (amplitudes in basis order)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not (1 <= self.n_qubits <= MAX_STATE_QUBITS):
            raise ValidationError(
                f"n_qubits must be in [1, {MAX_STATE_QUBITS}], got {self.n_qubits}"
            )
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValidationError(
                f"amplitude vector has shape {amps.shape}, expected (2**{self.n_qubits},)"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > _ATOL_NORM:
            raise ValidationError(f"state norm {norm!r} is not 1 within {_ATOL_NORM}")
        object.__setattr__(self, "amplitudes", amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


# ---------------------------------------------------------------------------
# gates and circuits

GATE_KINDS = ("RX", "RY", "RZ", "PHASE", "CNOT", "FIXED_1Q")
BINDING_KINDS = ("constant", "trainable", "data_product")


@dataclass(frozen=True)
class Binding:
    """Where a rotation gate gets its angle from."""

    kind: str
    angle: float = 0.0
    weight_index: int = -1
    data_index: int = -1

    def __post_init__(self):
        if self.kind not in BINDING_KINDS:
            raise ValidationError(f"unknown binding kind {self.kind!r}")
        if self.kind == "trainable" and self.weight_index < 0:
            raise ValidationError("trainable binding needs a weight index >= 0")
        if self.kind == "data_product" and (self.weight_index < 0 or self.data_index < 0):
            raise ValidationError("data_product binding needs weight and data indices >= 0")

    @staticmethod
    def constant(angle: float) -> "Binding":
        return Binding("constant", angle=float(angle))

    @staticmethod
    def trainable(weight_index: int) -> "Binding":
        return Binding("trainable", weight_index=int(weight_index))

    @staticmethod
    def data_product(data_index: int, weight_index: int) -> "Binding":
        return Binding("data_product", weight_index=int(weight_index), data_index=int(data_index))


def _check_unitary(matrix: np.ndarray) -> None:
    dev = np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))
    if dev > _ATOL_UNITARY:
        raise ValidationError(f"FIXED_1Q payload is not unitary (deviation {dev:.2e})")


@dataclass(frozen=True)
class GateOp:
    """One gate: a kind, target qubit(s), and (for rotations) an angle binding.

    CNOT takes (control, target) and no binding.  FIXED_1Q carries an explicit
    2x2 unitary payload and no binding.
    """

    kind: str
    targets: tuple[int, ...]
    binding: Binding | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind == "CNOT":
            if len(self.targets) != 2 or self.targets[0] == self.targets[1]:
                raise ValidationError("CNOT needs two distinct target qubits")
            if self.binding is not None:
                raise ValidationError("CNOT takes no binding")
        elif self.kind == "FIXED_1Q":
            if len(self.targets) != 1:
                raise ValidationError("FIXED_1Q acts on exactly one qubit")
            if self.matrix is None:
                raise ValidationError("FIXED_1Q needs a 2x2 matrix payload")
            mat = np.asarray(self.matrix, dtype=complex)
            if mat.shape != (2, 2):
                raise ValidationError("FIXED_1Q payload must be 2x2")
            _check_unitary(mat)
            object.__setattr__(self, "matrix", mat)
        else:
            if len(self.targets) != 1:
                raise ValidationError(f"{self.kind} acts on exactly one qubit")
            if self.binding is None:
                raise ValidationError(f"{self.kind} needs an angle binding")


@dataclass(frozen=True)
class ParameterizedCircuit:
    """Ordered gate list on a fixed register; weights/data are supplied at run time."""

    n_qubits: int
    gates: tuple[GateOp, ...]
    data_dim: int = 0

    def __post_init__(self):
        if not (1 <= self.n_qubits <= MAX_STATE_QUBITS):
            raise ValidationError(
                f"n_qubits must be in [1, {MAX_STATE_QUBITS}], got {self.n_qubits}"
            )
        gates = tuple(self.gates)
        for gate in gates:
            for t in gate.targets:
                if not (0 <= t < self.n_qubits):
                    raise ValidationError(
                        f"gate {gate.kind} targets qubit {t}, register has {self.n_qubits}"
                    )
        object.__setattr__(self, "gates", gates)
        inferred = 0
        for gate in gates:
            if gate.binding is not None and gate.binding.kind == "data_product":
                inferred = max(inferred, gate.binding.data_index + 1)
        if self.data_dim < inferred:
            object.__setattr__(self, "data_dim", inferred)

    @property
    def n_weights(self) -> int:
        """1 + the largest weight index referenced (0 if none)."""
        top = -1
        for gate in self.gates:
            if gate.binding is not None and gate.binding.weight_index >= 0:
                top = max(top, gate.binding.weight_index)
        return top + 1


def _rotation_matrix(kind: str, theta: np.ndarray) -> np.ndarray:
    """2x2 rotation matrices for scalar or (N,) angle arrays -> (...,2,2)."""
    theta = np.asarray(theta, dtype=float)
    half = theta / 2.0
    c, s = np.cos(half), np.sin(half)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    if kind == "RX":
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif kind == "RY":
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    elif kind == "RZ":
        out[..., 0, 0] = np.exp(-1j * half)
        out[..., 1, 1] = np.exp(1j * half)
    elif kind == "PHASE":
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.exp(1j * theta)
    else:  # pragma: no cover
        raise ValidationError(f"{kind} is not a rotation gate")
    return out


def _resolve_angle(binding: Binding, weights: np.ndarray, data: np.ndarray):
    """Angle for one gate; scalar for constant/trainable, (N,) for data_product."""
    if binding.kind == "constant":
        return binding.angle
    if binding.kind == "trainable":
        if binding.weight_index >= weights.shape[0]:
            raise ValidationError(
                f"weight index {binding.weight_index} out of range for "
                f"{weights.shape[0]} weights"
            )
        return float(weights[binding.weight_index])
    if binding.weight_index >= weights.shape[0]:
        raise ValidationError(
            f"weight index {binding.weight_index} out of range for {weights.shape[0]} weights"
        )
    if binding.data_index >= data.shape[1]:
        raise ValidationError(
            f"data index {binding.data_index} out of range for data of dim {data.shape[1]}"
        )
    return data[:, binding.data_index] * float(weights[binding.weight_index])


def _apply_1q(psi: np.ndarray, n: int, qubit: int, mats: np.ndarray) -> np.ndarray:
    """Apply 2x2 matrices to `qubit` of a batch of states psi (N, 2**n)."""
    n_rows = psi.shape[0]
    pre = 2**qubit
    post = 2 ** (n - qubit - 1)
    psi4 = psi.reshape(n_rows, pre, 2, post)
    if mats.ndim == 2:
        out = np.einsum("ab,npbr->npar", mats, psi4)
    else:
        out = np.einsum("nab,npbr->npar", mats, psi4)
    return out.reshape(n_rows, 2**n)


def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = (idx >> (n - 1 - control)) & 1
    flipped = idx ^ (1 << (n - 1 - target))
    return np.where(cbit == 1, flipped, idx)


def run_circuit_batch(
    circuit: ParameterizedCircuit,
    weights: Sequence[float],
    data: np.ndarray,
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Run the circuit for a batch of data rows; returns amplitudes (N, 2**n).

    `data` has shape (N, D) with D >= circuit.data_dim.  All rows share the
    same weights.  Raises ValidationError on out-of-range binding indices.
    """
    weights = np.asarray(weights, dtype=float)
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValidationError(f"data must be 2-d (rows, dim), got shape {data.shape}")
    if data.shape[1] < circuit.data_dim:
        raise ValidationError(
            f"circuit reads data dim {circuit.data_dim}, got rows of dim {data.shape[1]}"
        )
    n = circuit.n_qubits
    n_rows = data.shape[0]
    if initial is None:
        psi = np.zeros((n_rows, 2**n), dtype=complex)
        psi[:, 0] = 1.0
    else:
        psi = np.array(initial, dtype=complex)
        if psi.shape != (n_rows, 2**n):
            raise ValidationError(f"initial batch has shape {psi.shape}")
    for gate in circuit.gates:
        if gate.kind == "CNOT":
            perm = _cnot_permutation(n, *gate.targets)
            psi = psi[:, perm]
        elif gate.kind == "FIXED_1Q":
            _check_unitary(gate.matrix)
            psi = _apply_1q(psi, n, gate.targets[0], gate.matrix)
        else:
            angle = _resolve_angle(gate.binding, weights, data)
            mats = _rotation_matrix(gate.kind, angle)
            psi = _apply_1q(psi, n, gate.targets[0], mats)
    return psi


def run_circuit(
    circuit: ParameterizedCircuit,
    weights: Sequence[float],
    data: Sequence[float] = (),
) -> StateVector:
    """Run the circuit on |0...0> for a single data row."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] == 0:
        data = np.zeros((1, max(circuit.data_dim, 1)))
    amps = run_circuit_batch(circuit, weights, data)[0]
    return StateVector(circuit.n_qubits, amps)


def circuit_unitary(
    circuit: ParameterizedCircuit,
    weights: Sequence[float],
    data: Sequence[float] = (),
) -> np.ndarray:
    """Dense unitary of the circuit at fixed weights/data (column-action order)."""
    n = circuit.n_qubits
    dim = 2**n
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] == 0:
        data = np.zeros((1, max(circuit.data_dim, 1)))
    rows = np.repeat(data, dim, axis=0)
    cols = run_circuit_batch(circuit, weights, rows, initial=np.eye(dim, dtype=complex))
    return cols.T


# ---------------------------------------------------------------------------
# observables


def pauli_label_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string; character 0 acts on qubit 0 (most significant)."""
    mat = np.array([[1.0 + 0j]])
    for ch in label:
        if ch not in PAULI_MATRICES:
            raise ValidationError(f"bad Pauli label character {ch!r}")
        mat = np.kron(mat, PAULI_MATRICES[ch])
    return mat


class Observable:
    """Hermitian observable, held as a dense matrix and/or a Pauli-term list."""

    def __init__(self, n_qubits: int, dense: np.ndarray | None = None,
                 terms: tuple[tuple[float, str], ...] | None = None,
                 label: str | None = None):
        if dense is None and terms is None:
            raise ValidationError("observable needs a dense matrix or Pauli terms")
        self.n_qubits = int(n_qubits)
        self.label = label
        self.terms = terms
        self._dense = dense
        self._diag: np.ndarray | None = None
        self._diag_checked = False
        self._eig: tuple[np.ndarray, np.ndarray] | None = None
        if dense is not None:
            self._validate_dense(dense)

    def _validate_dense(self, dense: np.ndarray) -> None:
        if not (1 <= self.n_qubits <= MAX_DENSE_QUBITS):
            raise ValidationError(
                f"dense observables are capped at {MAX_DENSE_QUBITS} qubits, got {self.n_qubits}"
            )
        dim = 2**self.n_qubits
        if dense.shape != (dim, dim):
            raise ValidationError(f"observable has shape {dense.shape}, expected ({dim},{dim})")
        dev = np.max(np.abs(dense - dense.conj().T))
        if dev > _ATOL_HERMITIAN:
            raise ValidationError(f"observable is not Hermitian (max deviation {dev:.2e})")

    @classmethod
    def from_dense(cls, matrix: np.ndarray, label: str | None = None) -> "Observable":
        matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0]
        n = int(round(np.log2(dim)))
        if 2**n != dim:
            raise ValidationError(f"observable dimension {dim} is not a power of two")
        return cls(n, dense=matrix, label=label)

    @classmethod
    def from_paulis(cls, n_qubits: int, terms: Iterable[tuple[float, str]],
                    label: str | None = None) -> "Observable":
        cleaned = []
        for coeff, pauli in terms:
            coeff = complex(coeff)
            if abs(coeff.imag) > 1e-12:
                raise ValidationError(f"Pauli coefficient {coeff} must be real")
            if len(pauli) != n_qubits:
                raise ValidationError(
                    f"Pauli label {pauli!r} has length {len(pauli)}, register has {n_qubits}"
                )
            for ch in pauli:
                if ch not in PAULI_MATRICES:
                    raise ValidationError(f"bad Pauli label character {ch!r}")
            cleaned.append((float(coeff.real), str(pauli)))
        return cls(n_qubits, terms=tuple(cleaned), label=label)

    @classmethod
    def from_diagonal(cls, diag: np.ndarray, label: str | None = None) -> "Observable":
        diag = np.asarray(diag, dtype=float)
        obs = cls.from_dense(np.diag(diag.astype(complex)), label=label)
        obs._diag = diag
        obs._diag_checked = True
        return obs

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            if not (1 <= self.n_qubits <= MAX_DENSE_QUBITS):
                raise ValidationError(
                    f"dense expansion capped at {MAX_DENSE_QUBITS} qubits, got {self.n_qubits}"
                )
            dim = 2**self.n_qubits
            acc = np.zeros((dim, dim), dtype=complex)
            for coeff, pauli in self.terms:
                acc += coeff * pauli_label_matrix(pauli)
            self._dense = acc
        return self._dense

    @property
    def diagonal(self) -> np.ndarray | None:
        """Real diagonal if the observable is a diagonal matrix, else None."""
        if not self._diag_checked:
            dense = self.dense
            off = dense - np.diag(np.diag(dense))
            if np.max(np.abs(off)) <= 1e-14:
                self._diag = np.real(np.diag(dense))
            self._diag_checked = True
        return self._diag

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """(eigenvalues ascending, eigenvectors as columns), cached."""
        if self._eig is None:
            d = self.diagonal
            if d is not None:
                order = np.argsort(d, kind="stable")
                vecs = np.eye(len(d), dtype=complex)[:, order]
                self._eig = (d[order].astype(float), vecs)
            else:
                vals, vecs = np.linalg.eigh(self.dense)
                self._eig = (vals, vecs)
        return self._eig


def expectation(state: StateVector, obs: Observable) -> float:
    """<psi|O|psi> / <psi|psi> for a single state."""
    return float(expectation_batch(state.amplitudes[None, :], obs)[0])


def expectation_batch(states: np.ndarray, obs: Observable) -> np.ndarray:
    """Expectations for a batch of amplitude rows (N, 2**n) -> (N,)."""
    states = np.asarray(states, dtype=complex)
    dim = 2**obs.n_qubits
    if states.ndim != 2 or states.shape[1] != dim:
        raise ValidationError(
            f"state batch has shape {states.shape}, observable lives on dim {dim}"
        )
    norms = np.einsum("ni,ni->n", states.conj(), states).real
    diag = obs.diagonal
    if diag is not None:
        num = (np.abs(states) ** 2) @ diag
    else:
        num = np.einsum("ni,ij,nj->n", states.conj(), obs.dense, states).real
    return num / norms


def pauli_basis(n_qubits: int) -> list[Observable]:
    """All 4**n Pauli strings in lexicographic {I,X,Y,Z} order (identity first)."""
    if not (1 <= n_qubits <= MAX_DENSE_QUBITS):
        raise ValidationError(
            f"pauli_basis is capped at {MAX_DENSE_QUBITS} qubits, got {n_qubits}"
        )
    out = []
    for combo in itertools.product("IXYZ", repeat=n_qubits):
        label = "".join(combo)
        out.append(Observable.from_paulis(n_qubits, [(1.0, label)], label=label))
    return out


def pauli_coefficients(obs: Observable) -> np.ndarray:
    """Coefficients c_k = Tr(O P_k) / 2**n against `pauli_basis` order."""
    dense = obs.dense
    dim = dense.shape[0]
    coeffs = []
    for basis_obs in pauli_basis(obs.n_qubits):
        coeffs.append(np.trace(dense @ basis_obs.dense).real / dim)
    return np.asarray(coeffs)


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalue extremes of an observable.

    capital_lambda is -lambda_min * lambda_max; it is positive exactly when
    the spectrum straddles zero and is bounded by spectral_norm**2.
    """

    lambda_min: float
    lambda_max: float
    spectral_norm: float
    capital_lambda: float

    def __post_init__(self):
        if self.lambda_min > self.lambda_max + 1e-12:
            raise ValidationError("lambda_min exceeds lambda_max")


def spectral_summary(obs: Observable) -> SpectralSummary:
    vals, _ = obs.eigensystem()
    lo = float(vals[0])
    hi = float(vals[-1])
    return SpectralSummary(
        lambda_min=lo,
        lambda_max=hi,
        spectral_norm=max(abs(lo), abs(hi)),
        capital_lambda=-lo * hi,
    )
