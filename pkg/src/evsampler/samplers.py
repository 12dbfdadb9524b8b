"""Sampling front-ends: exact expectations, finite-shot estimates, noise models.

A sample row is produced by drawing an input x uniformly from the unit cube,
preparing the model state at x, and reading each observable out either exactly
or as an average of t projective-measurement draws.  All randomness is keyed:
the input stream uses child seed (seed, 0); the shot stream for observable m
and row i uses (seed, 1 + m, i); additive Gaussian noise uses (seed, 2).
Because every stream is a pure function of those indices, results do not
depend on chunking or evaluation order.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .circuits import Observable, StateVector, expectation_batch
from .errors import ValidationError
from .rng import keyed_generator

_CSV_FMT = "%.17g"


@dataclass(frozen=True)
class ShotConfig:
    """Finite-shot readout: `shots` projective draws per observable per row."""

    shots: int

    def __post_init__(self):
        if self.shots < 1:
            raise ValidationError(f"shots must be >= 1, got {self.shots}")


@dataclass(frozen=True)
class SampleSet:
    """A batch of model outputs with the provenance needed to reproduce it."""

    values: np.ndarray  # (n_samples, output_dim)
    seed: int
    mode: str  # "exact" | "shots:<t>" | "gaussian:<eps>" | "map"
    source: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValidationError(f"sample values must be 2-d, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def output_dim(self) -> int:
        return self.values.shape[1]


def sample_exact(model, n_samples: int, seed: int) -> SampleSet:
    """Noise-free sampling: rows are exact expectation vectors at uniform inputs."""
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    inputs = keyed_generator(seed, 0).random((n_samples, model.input_dim))
    states = model.states(inputs)
    out = np.empty((n_samples, model.output_dim))
    for m, obs in enumerate(model.observables):
        out[:, m] = expectation_batch(states, obs)
    return SampleSet(out, seed=seed, mode="exact", source=model.model_id())


def _born_probabilities(states: np.ndarray, obs: Observable) -> tuple[np.ndarray, np.ndarray]:
    """(eigenvalues, per-row Born probabilities) for a batch of states."""
    vals, vecs = obs.eigensystem()
    probs = np.abs(states @ vecs.conj()) ** 2
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    return vals, probs


def sample_with_shots(model, n_samples: int, cfg: ShotConfig, seed: int) -> SampleSet:
    """Finite-shot sampling: each entry is the mean of `cfg.shots` eigenvalue draws.

    Inputs are drawn from the same keyed stream as `sample_exact`, so for equal
    seeds the two sample sets differ only by measurement noise.
    """
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    t = cfg.shots
    inputs = keyed_generator(seed, 0).random((n_samples, model.input_dim))
    states = model.states(inputs)
    out = np.empty((n_samples, model.output_dim))
    for m, obs in enumerate(model.observables):
        vals, probs = _born_probabilities(states, obs)
        for i in range(n_samples):
            counts = keyed_generator(seed, 1 + m, i).multinomial(t, probs[i])
            out[i, m] = counts @ vals / t
    return SampleSet(
        out,
        seed=seed,
        mode=f"shots:{t}",
        source=model.model_id(),
        extra={"total_shots": t * model.output_dim},
    )


def shot_estimates(state: StateVector, obs: Observable, shots: int,
                   n_repeats: int, seed: int) -> np.ndarray:
    """Repeated t-shot estimates of <O> for one fixed state (for calibration tests)."""
    vals, probs = _born_probabilities(state.amplitudes[None, :], obs)
    counts = keyed_generator(seed).multinomial(shots, probs[0], size=n_repeats)
    return counts @ vals / shots


def gaussian_noise_model(samples: SampleSet, epsilon: float, seed: int) -> SampleSet:
    """Additive N(0, epsilon**2) surrogate for shot noise; epsilon=0 is the identity."""
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    values = samples.values.copy()
    if epsilon > 0:
        values += keyed_generator(seed, 2).normal(0.0, epsilon, size=values.shape)
    return replace(samples, values=values, mode=f"gaussian:{epsilon:g}")


def required_shots(output_dim: int, spectral_norm: float, epsilon: float,
                   c: float = 1.0) -> int:
    """Total shot budget T = ceil(c * M * norm / epsilon**2) for accuracy epsilon."""
    if output_dim < 1:
        raise ValidationError(f"output_dim must be >= 1, got {output_dim}")
    if spectral_norm <= 0:
        raise ValidationError(f"spectral_norm must be > 0, got {spectral_norm}")
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    return math.ceil(c * output_dim * spectral_norm / epsilon**2)


# ---------------------------------------------------------------------------
# serialization


def save_samples(samples: SampleSet, csv_path: str, extra_meta: dict | None = None) -> None:
    """Write values as CSV (header y1..yM, 17 significant digits) plus a sidecar.

    The sidecar `<csv_path>.meta.json` records seed, mode, source and row count.
    Writes are atomic (temp file + rename).
    """
    n, m = samples.values.shape
    header = ",".join(f"y{j + 1}" for j in range(m))
    body = "\n".join(",".join(_CSV_FMT % v for v in row) for row in samples.values)
    _atomic_write(csv_path, header + "\n" + body + "\n")
    meta = {
        "format_version": 1,
        "n_samples": n,
        "output_dim": m,
        "seed": samples.seed,
        "mode": samples.mode,
        "source": samples.source,
    }
    meta.update(samples.extra)
    if extra_meta:
        meta.update(extra_meta)
    _atomic_write(csv_path + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_samples(csv_path: str) -> SampleSet:
    """Read a CSV written by `save_samples`; the sidecar is optional."""
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("y1"):
            raise ValidationError(f"{csv_path} does not look like a sample CSV")
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    meta_path = csv_path + ".meta.json"
    seed, mode, source, extra = 0, "unknown", "", {}
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        seed = meta.get("seed", 0)
        mode = meta.get("mode", "unknown")
        source = meta.get("source", "")
        extra = {k: v for k, v in meta.items()
                 if k not in ("format_version", "n_samples", "output_dim", "seed", "mode", "source")}
    return SampleSet(values, seed=seed, mode=mode, source=source, extra=extra)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
