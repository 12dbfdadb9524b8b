"""Generative models built from circuits, observables and a classical input map.

A model maps a uniform draw x from the unit cube to an output vector of
observable expectations on the prepared state.  Three constructions:

* product encoder: one fitted single-qubit reuploading circuit per output
  coordinate (qubit m carries coordinate m), observables diag(-1,+1) on each
  qubit, targets given by the triangular transport map of a grid density;
* dense encoder: the triangular map output y is written into amplitudes
  Z_m = sqrt((y_m + 1) / (2 M)) on basis states 0..M-1 with the residual
  sqrt(1 - sum Z_m**2) on basis state M, and read out through
  P_m = 2M |m><m| - I, which returns y_m exactly;
* simplex encoder: for targets on the unit simplex (M = 2**n outputs), the
  density over the first M-1 coordinates is transported, the last coordinate
  is 1 minus the rest, amplitudes are sqrt(y_m), and the observables are the
  basis projectors |m><m|, so outputs are probabilities summing to 1.

State preparation is by exact amplitude injection by default; a binary-tree
RY rotation cascade is available as an alternative mode and must agree with
injection to 1e-9.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import (
    Binding,
    GateOp,
    Observable,
    ParameterizedCircuit,
    StateVector,
    run_circuit_batch,
)
from .errors import FitDivergenceError, ValidationError
from .reuploading import (
    FLIPPED_Z,
    FitConfig,
    build_reuploading,
    fit_grid_points,
    fit_to_function,
)
from .rng import derive_seed
from .samplers import _atomic_write
from .target_maps import (
    GridDensity,
    TriangularMap,
    build_triangular_map,
    map_forward,
)

PREP_MODES = ("exact_injection", "rotation_cascade")

_SIMPLEX_MASS_TOL = 1e-6


# ---------------------------------------------------------------------------
# state preparation


@dataclass(frozen=True)
class StatePrepProgram:
    """Prepares a fixed nonnegative real amplitude vector.

    In rotation_cascade mode, `angles[k]` holds the 2**k RY angles of tree
    level k (one per bitstring prefix); prepare() resynthesizes the state from
    those angles alone.
    """

    mode: str
    n_qubits: int
    amplitudes: np.ndarray
    angles: tuple[np.ndarray, ...] | None = None

    def prepare(self) -> StateVector:
        if self.mode == "exact_injection":
            return StateVector(self.n_qubits, self.amplitudes.astype(complex))
        return StateVector(self.n_qubits, _cascade_amplitudes(self.angles).astype(complex))


def _cascade_angles(amplitudes: np.ndarray) -> tuple[np.ndarray, ...]:
    """Binary-tree RY angles; level k rotates qubit k conditioned on the prefix."""
    n = int(round(math.log2(amplitudes.shape[0])))
    masses = amplitudes**2
    levels = []
    level_masses = masses
    for _ in range(n):
        pairs = level_masses.reshape(-1, 2)
        total = pairs.sum(axis=1)
        theta = np.where(
            total > 0,
            2.0 * np.arctan2(np.sqrt(pairs[:, 1]), np.sqrt(pairs[:, 0])),
            0.0,
        )
        levels.append(theta)
        level_masses = total
    return tuple(reversed(levels))


def _cascade_amplitudes(angles: tuple[np.ndarray, ...]) -> np.ndarray:
    amps = np.array([1.0])
    for theta in angles:
        c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
        amps = np.stack([amps * c, amps * s], axis=1).ravel()
    return amps


def amplitude_prep(amplitudes, mode: str = "exact_injection") -> StatePrepProgram:
    """Program preparing the given nonnegative real unit vector."""
    if mode not in PREP_MODES:
        raise ValidationError(f"unknown preparation mode {mode!r}")
    amps = np.asarray(amplitudes, dtype=float)
    if amps.ndim != 1:
        raise ValidationError("amplitudes must be a vector")
    n = int(round(math.log2(amps.shape[0])))
    if 2**n != amps.shape[0] or n < 1:
        raise ValidationError(f"amplitude length {amps.shape[0]} is not a power of two >= 2")
    if np.any(amps < -1e-12):
        raise ValidationError("amplitudes must be nonnegative")
    amps = np.clip(amps, 0.0, None)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"amplitude vector has norm {norm!r}, expected 1")
    amps = amps / norm  # accepted within 1e-9; states are built exactly normalized
    angles = _cascade_angles(amps) if mode == "rotation_cascade" else None
    return StatePrepProgram(mode, n, amps, angles)


# ---------------------------------------------------------------------------
# the model type


@dataclass
class EvsModel:
    """A circuit- or injection-backed generative model with fixed observables."""

    kind: str  # "circuit" | "dense" | "simplex"
    n_qubits: int
    input_dim: int
    output_dim: int
    observables: list[Observable]
    circuit: ParameterizedCircuit | None = None
    weights: np.ndarray | None = None
    density: GridDensity | None = None
    tri_map: TriangularMap | None = None
    prep_mode: str = "exact_injection"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.observables) != self.output_dim:
            raise ValidationError(
                f"{len(self.observables)} observables for output_dim {self.output_dim}"
            )
        if self.kind not in ("circuit", "dense", "simplex"):
            raise ValidationError(f"unknown model kind {self.kind!r}")
        if self.kind == "circuit" and (self.circuit is None or self.weights is None):
            raise ValidationError("circuit models need a circuit and weights")
        if self.kind in ("dense", "simplex") and self.tri_map is None:
            if self.density is None:
                raise ValidationError("injection models need a density")
            self.tri_map = build_triangular_map(self.density)

    @property
    def input_distribution(self) -> str:
        return f"uniform[0,1]^{self.input_dim}"

    def states(self, inputs: np.ndarray) -> np.ndarray:
        """Amplitude rows (N, 2**n_qubits) for a batch of unit-cube inputs."""
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[1] != self.input_dim:
            raise ValidationError(
                f"inputs must have shape (N, {self.input_dim}), got {inputs.shape}"
            )
        if self.kind == "circuit":
            return run_circuit_batch(self.circuit, self.weights, inputs)
        y = map_forward(self.tri_map, inputs)
        if self.kind == "dense":
            amps = _dense_amplitudes(y, self.output_dim, self.n_qubits)
        else:
            amps = _simplex_amplitudes(y, self.output_dim)
        if self.prep_mode == "rotation_cascade":
            # simplex rows near the boundary may carry norm > 1 before the
            # Rayleigh quotient; the cascade angles only see mass ratios
            amps = amps / np.linalg.norm(amps, axis=1, keepdims=True)
            amps = np.stack([
                amplitude_prep(row, "rotation_cascade").prepare().amplitudes.real
                for row in amps
            ])
        return amps.astype(complex)

    def model_id(self) -> str:
        digest = hashlib.sha256(
            json.dumps(model_to_dict(self), sort_keys=True).encode()
        ).hexdigest()
        return f"{self.kind}-{digest[:12]}"


def _dense_amplitudes(y: np.ndarray, output_dim: int, n_qubits: int) -> np.ndarray:
    z = np.sqrt((y + 1.0) / (2.0 * output_dim))
    residual = np.sqrt(np.clip(1.0 - np.sum(z**2, axis=1), 0.0, None))
    amps = np.zeros((y.shape[0], 2**n_qubits))
    amps[:, :output_dim] = z
    amps[:, output_dim] = residual
    return amps


def _simplex_amplitudes(y_head: np.ndarray, output_dim: int) -> np.ndarray:
    head = np.clip(y_head, 0.0, 1.0)
    last = np.clip(1.0 - head.sum(axis=1), 0.0, None)
    return np.sqrt(np.concatenate([head, last[:, None]], axis=1))


# ---------------------------------------------------------------------------
# encoders


def _shifted_gates(gates, weight_offset: int):
    out = []
    for g in gates:
        b = g.binding
        if b.kind == "trainable":
            b = Binding.trainable(b.weight_index + weight_offset)
        elif b.kind == "data_product":
            b = Binding.data_product(b.data_index, b.weight_index + weight_offset)
        out.append(GateOp(g.kind, g.targets, b))
    return out


def _flipped_z_on(qubit: int, n_qubits: int) -> Observable:
    label = "".join("Z" if q == qubit else "I" for q in range(n_qubits))
    return Observable.from_paulis(n_qubits, [(-1.0, label)], label=f"-Z[{qubit}]")


def default_fit_config(dims: int, seed: int = 0, **overrides) -> FitConfig:
    """Fit defaults scaled to keep the grid size manageable as dims grows."""
    grid = {1: 64, 2: 20}.get(dims, 10)
    base = dict(grid_points_per_dim=grid, max_iters=600, step_size=0.25,
                gradient_mode="central", tolerance=1e-12, seed=seed, restarts=4)
    base.update(overrides)
    return FitConfig(**base)


def build_product_encoder(density: GridDensity, layers: int,
                          fit_cfg: FitConfig | None = None,
                          seed: int = 0) -> EvsModel:
    """One fitted reuploading circuit per coordinate, on its own qubit.

    Coordinate m's target is component m of the triangular map, a function of
    all inputs (triangular in practice), fitted as the expectation of
    diag(-1,+1) on qubit m.
    """
    m_dims = density.dims
    tri = build_triangular_map(density)
    gates: list[GateOp] = []
    all_weights: list[np.ndarray] = []
    fit_losses = []
    for m in range(m_dims):
        if fit_cfg is not None:
            cfg = dataclasses.replace(fit_cfg, seed=derive_seed(fit_cfg.seed, m))
        else:
            cfg = default_fit_config(m_dims, seed=derive_seed(seed, m))
        grid = fit_grid_points(m_dims, cfg.grid_points_per_dim)
        targets = map_forward(tri, grid)[:, m]
        rc = build_reuploading(m_dims, layers)
        try:
            result = fit_to_function(rc, targets, FLIPPED_Z, cfg)
        except FitDivergenceError as err:
            raise FitDivergenceError(f"coordinate {m}: {err}", coordinate=m) from err
        offset = m * rc.n_weights
        per_qubit = build_reuploading(m_dims, layers, qubit=m, n_qubits=m_dims)
        gates.extend(_shifted_gates(per_qubit.circuit.gates, offset))
        all_weights.append(result.weights)
        fit_losses.append(result.final_loss)
    circuit = ParameterizedCircuit(m_dims, tuple(gates), data_dim=m_dims)
    observables = [_flipped_z_on(m, m_dims) for m in range(m_dims)]
    return EvsModel(
        kind="circuit",
        n_qubits=m_dims,
        input_dim=m_dims,
        output_dim=m_dims,
        observables=observables,
        circuit=circuit,
        weights=np.concatenate(all_weights),
        density=density,
        tri_map=tri,
        meta={"encoder": "product", "layers": layers, "fit_losses": fit_losses},
    )


def build_dense_encoder(density: GridDensity,
                        prep_mode: str = "exact_injection") -> EvsModel:
    """Log-many qubits: M outputs on ceil(log2(M+1)) qubits via amplitude injection."""
    if prep_mode not in PREP_MODES:
        raise ValidationError(f"unknown preparation mode {prep_mode!r}")
    m_dims = density.dims
    n_qubits = max(1, math.ceil(math.log2(m_dims + 1)))
    dim = 2**n_qubits
    observables = []
    for m in range(m_dims):
        diag = -np.ones(dim)
        diag[m] = 2.0 * m_dims - 1.0
        observables.append(Observable.from_diagonal(diag, label=f"P[{m}]"))
    return EvsModel(
        kind="dense",
        n_qubits=n_qubits,
        input_dim=m_dims,
        output_dim=m_dims,
        observables=observables,
        density=density,
        prep_mode=prep_mode,
        meta={"encoder": "dense"},
    )


def build_simplex_encoder(density: GridDensity,
                          prep_mode: str = "exact_injection") -> EvsModel:
    """Probability-valued outputs on the unit simplex; M = density.dims + 1 = 2**n.

    `density` describes the first M-1 simplex coordinates (the last one is
    determined); grid mass at midpoints outside the simplex (a negative
    coordinate, or coordinates summing above 1) must not exceed 1e-6.
    """
    if prep_mode not in PREP_MODES:
        raise ValidationError(f"unknown preparation mode {prep_mode!r}")
    m_out = density.dims + 1
    n_qubits = int(round(math.log2(m_out)))
    if 2**n_qubits != m_out:
        raise ValidationError(
            f"simplex encoder needs output_dim = 2**n, got {m_out} "
            f"(density over {density.dims} coordinates)"
        )
    mids = _simplex_midpoints(density)
    off_mass = density.cell_masses().ravel()[
        np.any(mids < 0.0, axis=1) | (mids.sum(axis=1) > 1.0)
    ].sum()
    if off_mass > _SIMPLEX_MASS_TOL:
        raise ValidationError(
            f"density has mass {off_mass:.3e} off the unit simplex "
            f"(tolerance {_SIMPLEX_MASS_TOL:g})"
        )
    observables = []
    for m in range(m_out):
        diag = np.zeros(m_out)
        diag[m] = 1.0
        observables.append(Observable.from_diagonal(diag, label=f"proj[{m}]"))
    return EvsModel(
        kind="simplex",
        n_qubits=n_qubits,
        input_dim=density.dims,
        output_dim=m_out,
        observables=observables,
        density=density,
        prep_mode=prep_mode,
        meta={"encoder": "simplex"},
    )


def _simplex_midpoints(density: GridDensity) -> np.ndarray:
    e = density.edges()
    mids = 0.5 * (e[:-1] + e[1:])
    grids = np.meshgrid(*([mids] * density.dims), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


# ---------------------------------------------------------------------------
# serialization


def _observable_to_dict(obs: Observable) -> dict:
    if obs.terms is not None:
        return {"n_qubits": obs.n_qubits, "label": obs.label,
                "paulis": [[c, p] for c, p in obs.terms]}
    diag = obs.diagonal
    if diag is not None:
        return {"n_qubits": obs.n_qubits, "label": obs.label, "diagonal": diag.tolist()}
    dense = obs.dense
    return {"n_qubits": obs.n_qubits, "label": obs.label,
            "dense_re": dense.real.tolist(), "dense_im": dense.imag.tolist()}


def _observable_from_dict(d: dict) -> Observable:
    if "paulis" in d:
        return Observable.from_paulis(d["n_qubits"], [(c, p) for c, p in d["paulis"]],
                                      label=d.get("label"))
    if "diagonal" in d:
        return Observable.from_diagonal(np.asarray(d["diagonal"], dtype=float),
                                        label=d.get("label"))
    dense = np.asarray(d["dense_re"], dtype=float) + 1j * np.asarray(d["dense_im"], dtype=float)
    return Observable.from_dense(dense, label=d.get("label"))


def _gate_to_dict(gate: GateOp) -> dict:
    out = {"kind": gate.kind, "targets": list(gate.targets)}
    if gate.binding is not None:
        b = gate.binding
        out["binding"] = {"kind": b.kind, "angle": b.angle,
                          "weight_index": b.weight_index, "data_index": b.data_index}
    if gate.matrix is not None:
        out["matrix_re"] = gate.matrix.real.tolist()
        out["matrix_im"] = gate.matrix.imag.tolist()
    return out


def _gate_from_dict(d: dict) -> GateOp:
    binding = None
    if "binding" in d:
        b = d["binding"]
        binding = Binding(b["kind"], angle=b["angle"],
                          weight_index=b["weight_index"], data_index=b["data_index"])
    matrix = None
    if "matrix_re" in d:
        matrix = np.asarray(d["matrix_re"]) + 1j * np.asarray(d["matrix_im"])
    return GateOp(d["kind"], tuple(d["targets"]), binding, matrix)


def model_to_dict(model: EvsModel) -> dict:
    out = {
        "format_version": 1,
        "kind": model.kind,
        "n_qubits": model.n_qubits,
        "input_dim": model.input_dim,
        "output_dim": model.output_dim,
        "prep_mode": model.prep_mode,
        "observables": [_observable_to_dict(o) for o in model.observables],
        "meta": model.meta,
    }
    if model.kind == "circuit":
        out["circuit"] = {
            "n_qubits": model.circuit.n_qubits,
            "data_dim": model.circuit.data_dim,
            "gates": [_gate_to_dict(g) for g in model.circuit.gates],
        }
        out["weights"] = model.weights.tolist()
    else:
        out["density"] = {
            "dims": model.density.dims,
            "resolution": model.density.resolution,
            "values": model.density.values.ravel().tolist(),
            "affine_shift": model.density.affine_shift.tolist(),
            "affine_scale": model.density.affine_scale.tolist(),
        }
    return out


def model_from_dict(d: dict) -> EvsModel:
    if d.get("format_version") != 1:
        raise ValidationError(f"unsupported model format {d.get('format_version')!r}")
    observables = [_observable_from_dict(o) for o in d["observables"]]
    circuit = weights = density = None
    if d["kind"] == "circuit":
        c = d["circuit"]
        circuit = ParameterizedCircuit(
            c["n_qubits"], tuple(_gate_from_dict(g) for g in c["gates"]),
            data_dim=c["data_dim"],
        )
        weights = np.asarray(d["weights"], dtype=float)
    else:
        dd = d["density"]
        density = GridDensity(
            dd["dims"], dd["resolution"],
            np.asarray(dd["values"], dtype=float).reshape((dd["resolution"],) * dd["dims"]),
            affine_shift=np.asarray(dd["affine_shift"], dtype=float),
            affine_scale=np.asarray(dd["affine_scale"], dtype=float),
        )
    return EvsModel(
        kind=d["kind"],
        n_qubits=d["n_qubits"],
        input_dim=d["input_dim"],
        output_dim=d["output_dim"],
        observables=observables,
        circuit=circuit,
        weights=weights,
        density=density,
        prep_mode=d.get("prep_mode", "exact_injection"),
        meta=d.get("meta", {}),
    )


def save_model(model: EvsModel, path: str, extra_meta: dict | None = None) -> None:
    payload = model_to_dict(model)
    if extra_meta:
        payload["file_meta"] = extra_meta
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: str) -> EvsModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
