"""Synthetic benchmark instances used by tests and the example scripts."""

from __future__ import annotations

import numpy as np

from .dataset import DataSet
from .seeding import rng_for


def _assemble(x_pos: np.ndarray, x_neg: np.ndarray, rng: np.random.Generator) -> DataSet:
    n_pos, n_neg = len(x_pos), len(x_neg)
    X = np.vstack([x_pos, x_neg])
    y = np.concatenate([np.ones(n_pos, dtype=np.int64), -np.ones(n_neg, dtype=np.int64)])
    perm = rng.permutation(n_pos + n_neg)
    return DataSet(
        features=X[perm],
        labels=y[perm],
        n_pos=n_pos,
        n_neg=n_neg,
        label_names=("+1", "-1"),
    )


def twonorm(n: int = 7400, d: int = 20, seed: int = 0) -> DataSet:
    """Two unit-covariance Gaussians with means at +/- (2/sqrt(d)) * 1."""
    rng = rng_for(seed, "twonorm")
    a = 2.0 / np.sqrt(d)
    n_pos = n // 2
    n_neg = n - n_pos
    x_pos = rng.standard_normal((n_pos, d)) + a
    x_neg = rng.standard_normal((n_neg, d)) - a
    return _assemble(x_pos, x_neg, rng)


def ringnorm(n: int = 7400, d: int = 20, seed: int = 0) -> DataSet:
    """One class ~ N((2/sqrt(d)) * 1, I) inside the other ~ N(0, 4I)."""
    rng = rng_for(seed, "ringnorm")
    a = 2.0 / np.sqrt(d)
    n_pos = n // 2
    n_neg = n - n_pos
    x_pos = rng.standard_normal((n_pos, d)) + a
    x_neg = 2.0 * rng.standard_normal((n_neg, d))
    return _assemble(x_pos, x_neg, rng)


def blobs(
    n_pos: int,
    n_neg: int,
    d: int = 8,
    separation: float = 8.0,
    seed: int = 0,
) -> DataSet:
    """Two spherical unit-variance Gaussians whose means are ``separation``
    apart (in units of the common standard deviation)."""
    rng = rng_for(seed, "blobs")
    offset = separation / (2.0 * np.sqrt(d))
    x_pos = rng.standard_normal((n_pos, d)) + offset
    x_neg = rng.standard_normal((n_neg, d)) - offset
    return _assemble(x_pos, x_neg, rng)
