"""Single-qubit data-reuploading circuits and least-squares fitting.

The circuit family has L layers acting on one qubit.  Layer l applies, in
order: a constant RZ, one data RZ per input coordinate with angle
x_m * theta_{m,l}, and finally an RY.  The weight vector is laid out
layer-major as w[l*(M+2) + j] with j=0 the RY angle, j=1..M the data
coefficients and j=M+1 the constant RZ angle, so a circuit with M inputs and
L layers carries exactly (M+2)*L weights and M data gates per layer.

Sign convention: targets g and amplitudes f are related by f = sqrt((g+1)/2),
i.e. g is the expectation of FLIPPED_Z = diag(-1, +1) for a state with real
amplitude f on |1>.  With the standard Z = diag(+1, -1) the same state gives
<Z> = 1 - 2 f**2 = -g.  Fitting against a target g therefore uses FLIPPED_Z
(equivalently: fit -<Z>); the unit tests pin this mapping down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import (
    Binding,
    GateOp,
    Observable,
    ParameterizedCircuit,
    expectation,
    expectation_batch,
    run_circuit,
)
from .errors import FitDivergenceError, ValidationError
from .rng import keyed_generator

#: diag(-1, +1): expectation 2 f**2 - 1 for amplitude f on |1>
FLIPPED_Z = Observable.from_diagonal(np.array([-1.0, 1.0]), label="flipped_z")

#: standard diag(+1, -1)
PAULI_Z = Observable.from_paulis(1, [(1.0, "Z")], label="Z")

_STALL_WINDOW = 50
_MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class ReuploadingCircuit:
    """L-layer single-qubit reuploading circuit over M input coordinates."""

    data_dim: int
    layers: int
    circuit: ParameterizedCircuit

    @property
    def n_weights(self) -> int:
        return (self.data_dim + 2) * self.layers

    def ry_weight_index(self, layer: int) -> int:
        return layer * (self.data_dim + 2)

    def data_weight_index(self, layer: int, coord: int) -> int:
        return layer * (self.data_dim + 2) + 1 + coord

    def const_weight_index(self, layer: int) -> int:
        return layer * (self.data_dim + 2) + 1 + self.data_dim

    def data_weight_indices(self) -> np.ndarray:
        """Indices of all data-product weights (the encoding frequencies)."""
        return np.asarray(
            [self.data_weight_index(l, m)
             for l in range(self.layers) for m in range(self.data_dim)],
            dtype=int,
        )


def build_reuploading(data_dim: int, layers: int, qubit: int = 0,
                      n_qubits: int = 1) -> ReuploadingCircuit:
    """Construct the circuit; gates are listed in application order."""
    if data_dim < 1:
        raise ValidationError(f"data_dim must be >= 1, got {data_dim}")
    if layers < 1:
        raise ValidationError(f"layers must be >= 1, got {layers}")
    gates = []
    stride = data_dim + 2
    for l in range(layers):
        gates.append(GateOp("RZ", (qubit,), Binding.trainable(l * stride + 1 + data_dim)))
        for m in range(data_dim):
            gates.append(GateOp("RZ", (qubit,), Binding.data_product(m, l * stride + 1 + m)))
        gates.append(GateOp("RY", (qubit,), Binding.trainable(l * stride)))
    circuit = ParameterizedCircuit(n_qubits, tuple(gates), data_dim=data_dim)
    return ReuploadingCircuit(data_dim, layers, circuit)


def _check_weights(rc: ReuploadingCircuit, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (rc.n_weights,):
        raise ValidationError(
            f"weight vector has shape {weights.shape}, circuit needs ({rc.n_weights},)"
        )
    return weights


def evaluate_model(rc: ReuploadingCircuit, weights, x, obs: Observable) -> float:
    """<obs> of the circuit at a single input point (reference path)."""
    weights = _check_weights(rc, weights)
    state = run_circuit(rc.circuit, weights, np.atleast_1d(np.asarray(x, dtype=float)))
    return expectation(state, obs)


def states_on_grid(rc: ReuploadingCircuit, weights, points: np.ndarray) -> np.ndarray:
    """Batched statevectors (N, 2) for rows of `points`.

    Uses the fact that all RZ angles in one layer commute and add, so a layer
    is one fused phase plus one RY; agrees with running the gate list.
    """
    weights = _check_weights(rc, weights)
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != rc.data_dim:
        raise ValidationError(
            f"points must have shape (N, {rc.data_dim}), got {points.shape}"
        )
    w = weights.reshape(rc.layers, rc.data_dim + 2)
    psi = np.zeros((points.shape[0], 2), dtype=complex)
    psi[:, 0] = 1.0
    for l in range(rc.layers):
        phi = w[l, rc.data_dim + 1] + points @ w[l, 1:rc.data_dim + 1]
        psi[:, 0] *= np.exp(-0.5j * phi)
        psi[:, 1] *= np.exp(0.5j * phi)
        half = 0.5 * w[l, 0]
        c, s = math.cos(half), math.sin(half)
        psi = psi @ np.array([[c, s], [-s, c]])
    return psi


def values_on_grid(rc: ReuploadingCircuit, weights, points: np.ndarray,
                   obs: Observable) -> np.ndarray:
    return expectation_batch(states_on_grid(rc, weights, points), obs)


def model_gradient(rc: ReuploadingCircuit, weights, x, obs: Observable,
                   mode: str = "central", fd_step: float = 1e-5) -> np.ndarray:
    """d<obs>/dw at one input point, by central differences or parameter shift."""
    weights = _check_weights(rc, weights)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if mode == "central":
        grad = np.empty(rc.n_weights)
        for j in range(rc.n_weights):
            wp, wm = weights.copy(), weights.copy()
            wp[j] += fd_step
            wm[j] -= fd_step
            grad[j] = (values_on_grid(rc, wp, x, obs)[0]
                       - values_on_grid(rc, wm, x, obs)[0]) / (2 * fd_step)
        return grad
    if mode == "parameter_shift":
        return _grid_gradient_shift(rc, weights, x, obs)[0]
    raise ValidationError(f"unknown gradient mode {mode!r}")


def _grid_gradient_shift(rc: ReuploadingCircuit, weights, points: np.ndarray,
                         obs: Observable) -> np.ndarray:
    """Exact gradient rows (N, n_weights) via the +-pi/2 shift rule.

    Each layer contributes two scalar angles: the fused phase phi_l (shifting
    the constant RZ weight shifts phi_l by the same amount; a data weight
    shifts it by x_m) and the RY angle.  Both produce expectations of the form
    a + b cos(theta) + c sin(theta), so the shift rule is exact.
    """
    w = weights.reshape(rc.layers, rc.data_dim + 2)
    n = points.shape[0]
    grad = np.empty((n, rc.n_weights))
    for l in range(rc.layers):
        for kind in ("phase", "ry"):
            col = rc.const_weight_index(l) if kind == "phase" else rc.ry_weight_index(l)
            shift = np.pi / 2
            wp, wm = w.copy(), w.copy()
            idx = (l, rc.data_dim + 1) if kind == "phase" else (l, 0)
            wp[idx] += shift
            wm[idx] -= shift
            ep = values_on_grid(rc, wp.ravel(), points, obs)
            em = values_on_grid(rc, wm.ravel(), points, obs)
            deriv = 0.5 * (ep - em)
            grad[:, col] = deriv
            if kind == "phase":
                for m in range(rc.data_dim):
                    grad[:, rc.data_weight_index(l, m)] = deriv * points[:, m]
    return grad


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitConfig:
    grid_points_per_dim: int = 64
    max_iters: int = 600
    step_size: float = 0.25
    gradient_mode: str = "central"  # or "parameter_shift"
    tolerance: float = 1e-12
    seed: int = 0
    restarts: int = 4

    def __post_init__(self):
        if self.grid_points_per_dim < 2:
            raise ValidationError("grid_points_per_dim must be >= 2")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.step_size <= 0:
            raise ValidationError("step_size must be > 0")
        if self.gradient_mode not in ("central", "parameter_shift"):
            raise ValidationError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")


@dataclass(frozen=True)
class FitResult:
    weights: np.ndarray
    final_loss: float
    loss_history: np.ndarray  # per-iteration loss of the winning restart
    restart_losses: tuple[float, ...] = ()


def fit_grid_points(dims: int, points_per_dim: int) -> np.ndarray:
    """Cell-midpoint grid of [0,1]^dims, row-major, shape (g**dims, dims)."""
    mids = (np.arange(points_per_dim) + 0.5) / points_per_dim
    grids = np.meshgrid(*([mids] * dims), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _fd_loss_gradient(rc, w, points, targets, obs, h=1e-5):
    grad = np.empty(w.shape[0])
    for j in range(w.shape[0]):
        wp, wm = w.copy(), w.copy()
        wp[j] += h
        wm[j] -= h
        lp = np.mean((values_on_grid(rc, wp, points, obs) - targets) ** 2)
        lm = np.mean((values_on_grid(rc, wm, points, obs) - targets) ** 2)
        grad[j] = (lp - lm) / (2 * h)
    return grad


def _shift_loss_gradient(rc, w, points, targets, obs):
    resid = values_on_grid(rc, w, points, obs) - targets
    model_grad = _grid_gradient_shift(rc, w, points, obs)
    return 2.0 * (resid @ model_grad) / points.shape[0]


def _descend(rc, w0, points, targets, obs, cfg) -> tuple[np.ndarray, list[float]]:
    w = w0.copy()
    loss = float(np.mean((values_on_grid(rc, w, points, obs) - targets) ** 2))
    history = [loss]
    step = cfg.step_size
    for _ in range(cfg.max_iters):
        if cfg.gradient_mode == "central":
            grad = _fd_loss_gradient(rc, w, points, targets, obs)
        else:
            grad = _shift_loss_gradient(rc, w, points, targets, obs)
        if not np.any(grad):
            break  # stationary point (e.g. the all-zero start): nothing to follow
        trial = step
        improved = False
        for _ in range(_MAX_BACKTRACKS):
            w_new = w - trial * grad
            loss_new = float(np.mean((values_on_grid(rc, w_new, points, obs) - targets) ** 2))
            if not np.isfinite(loss_new):
                raise FitDivergenceError("loss became non-finite during descent")
            if loss_new <= loss:
                improved = True
                break
            trial *= 0.5
        if not improved:
            break
        w, loss = w_new, loss_new
        history.append(loss)
        step = min(trial * 1.5, 20.0 * cfg.step_size)
        if len(history) > _STALL_WINDOW and \
                history[-_STALL_WINDOW - 1] - loss < cfg.tolerance:
            break
    return w, history


def fit_to_function(rc: ReuploadingCircuit, targets, obs: Observable,
                    cfg: FitConfig) -> FitResult:
    """Least-squares fit of <obs> to target values tabulated on the fit grid.

    `targets` are the values of the target function at fit_grid_points(M, g),
    flattened row-major (an (g,)*M array is accepted).  Restart 0 starts from
    all-zero weights (the constant circuit); the remaining restarts draw
    initial weights uniformly from [-pi, pi] with keyed seeds.  The best
    restart by final loss wins.
    """
    targets = np.asarray(targets, dtype=float).ravel()
    expected = cfg.grid_points_per_dim**rc.data_dim
    if targets.shape[0] != expected:
        raise ValidationError(
            f"got {targets.shape[0]} target values, expected {expected} "
            f"(= grid_points_per_dim ** data_dim)"
        )
    if np.any(np.abs(targets) > 1.0 + 1e-12):
        raise ValidationError("target values must lie in [-1, 1]")
    points = fit_grid_points(rc.data_dim, cfg.grid_points_per_dim)
    best_w, best_hist = None, None
    restart_losses = []
    for r in range(cfg.restarts):
        if r == 0:
            w0 = np.zeros(rc.n_weights)
        else:
            w0 = keyed_generator(cfg.seed, r).uniform(-np.pi, np.pi, rc.n_weights)
        w, hist = _descend(rc, w0, points, targets, obs, cfg)
        restart_losses.append(hist[-1])
        if best_hist is None or hist[-1] < best_hist[-1]:
            best_w, best_hist = w, hist
    return FitResult(
        weights=best_w,
        final_loss=float(best_hist[-1]),
        loss_history=np.asarray(best_hist),
        restart_losses=tuple(restart_losses),
    )


# ---------------------------------------------------------------------------
# amplitude/target transform


def amplitude_target_transform(g) -> np.ndarray:
    """Amplitude f = sqrt((g+1)/2) for targets g in [-1, 1] (clipped at 1e-12 slack)."""
    g = np.asarray(g, dtype=float)
    if np.any(np.abs(g) > 1.0 + 1e-12):
        raise ValidationError("targets must lie in [-1, 1]")
    return np.sqrt(np.clip((g + 1.0) / 2.0, 0.0, 1.0))


def target_from_amplitude(f) -> np.ndarray:
    """Inverse transform g = 2 f**2 - 1 for amplitudes f in [0, 1]."""
    f = np.asarray(f, dtype=float)
    if np.any(f < -1e-12) or np.any(f > 1.0 + 1e-12):
        raise ValidationError("amplitudes must lie in [0, 1]")
    return 2.0 * np.clip(f, 0.0, 1.0) ** 2 - 1.0
