"""Empirical distances between sample sets: Wasserstein-1 variants and KS.

w1_1d sorts both samples and couples quantiles; for unequal sizes both
empirical quantile functions are evaluated at max(n_a, n_b) midpoints.
w1_exact solves the optimal assignment (cubic cost, capped at 512 points).
w1_sliced averages w1_1d over keyed random unit projections; in one dimension
every projection is +-1, so it reproduces w1_1d exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .rng import keyed_generator

W1_EXACT_CAP = 512


@dataclass(frozen=True)
class MetricReport:
    """Metric name, value and the parameters needed to reproduce it."""

    metric: str
    value: float
    n_a: int
    n_b: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "value": self.value,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _as_1d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1 or x.shape[0] < 1:
        raise ValidationError(f"expected a nonempty 1-d sample, got shape {np.shape(x)}")
    return x


def _as_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValidationError(f"expected a nonempty 2-d sample, got shape {np.shape(x)}")
    return x


def w1_1d(a, b) -> float:
    """Wasserstein-1 between two 1-d empirical distributions."""
    a = np.sort(_as_1d(a))
    b = np.sort(_as_1d(b))
    if a.shape[0] == b.shape[0]:
        return float(np.mean(np.abs(a - b)))
    k = max(a.shape[0], b.shape[0])
    p = (np.arange(k) + 0.5) / k
    qa = a[np.minimum((p * a.shape[0]).astype(int), a.shape[0] - 1)]
    qb = b[np.minimum((p * b.shape[0]).astype(int), b.shape[0] - 1)]
    return float(np.mean(np.abs(qa - qb)))


def w1_exact(a, b) -> float:
    """Exact W1 via optimal assignment; requires equal sizes <= 512.

    For larger sets use w1_sliced.  Matched costs are summed in sorted order so
    the result is exactly symmetric in (a, b).
    """
    a, b = _as_2d(a), _as_2d(b)
    if a.shape[0] != b.shape[0]:
        raise ValidationError(
            f"w1_exact needs equal sample sizes, got {a.shape[0]} and {b.shape[0]}"
        )
    if a.shape[1] != b.shape[1]:
        raise ValidationError("sample dimensions differ")
    if a.shape[0] > W1_EXACT_CAP:
        raise ValidationError(
            f"w1_exact is capped at {W1_EXACT_CAP} points (got {a.shape[0]}); "
            "use w1_sliced for larger sets"
        )
    diff = a[:, None, :] - b[None, :, :]
    cost = np.sqrt(np.sum(diff**2, axis=2))
    rows, cols = linear_sum_assignment(cost)
    matched = np.sort(cost[rows, cols])
    return float(matched.sum() / a.shape[0])


def w1_sliced(a, b, n_projections: int = 256, seed: int = 0) -> float:
    """Average of w1_1d over keyed random unit-vector projections."""
    a, b = _as_2d(a), _as_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ValidationError("sample dimensions differ")
    if n_projections < 1:
        raise ValidationError(f"n_projections must be >= 1, got {n_projections}")
    dims = a.shape[1]
    gen = keyed_generator(seed, 3)
    dirs = gen.normal(size=(n_projections, dims))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    dirs /= norms
    total = 0.0
    for u in dirs:
        total += w1_1d(a @ u, b @ u)
    return total / n_projections


def ks_marginals(a, b) -> np.ndarray:
    """Two-sample Kolmogorov-Smirnov statistic per coordinate."""
    a, b = _as_2d(a), _as_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ValidationError("sample dimensions differ")
    out = np.empty(a.shape[1])
    for k in range(a.shape[1]):
        out[k] = _ks_two_sample(a[:, k], b[:, k])
    return out


def _ks_two_sample(x: np.ndarray, y: np.ndarray) -> float:
    xs, ys = np.sort(x), np.sort(y)
    grid = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, grid, side="right") / xs.shape[0]
    fy = np.searchsorted(ys, grid, side="right") / ys.shape[0]
    return float(np.max(np.abs(fx - fy)))
