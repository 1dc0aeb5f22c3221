"""Parameter search, model evaluation and classification metrics.

The (C, gamma) search is a two-sweep uniform-design style pattern in log2
space: a fixed 9-point first sweep spread over the whole search rectangle,
then a 4-point second sweep in a quarter-width window around the best point
so far.  Models are compared by G-mean with a fewer-support-vectors tie rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import DataSet
from .svm import ModelParams, SvmModel

# Candidates whose G-mean lies within this of the maximum count as "roughly
# the same"; among them the model with fewer support vectors wins.
GMEAN_TIE = 0.01

VALIDATION_FRACTION = 0.1

# First sweep: 3x3 factorial at {1/6, 1/2, 5/6} per axis of the unit square.
# Deterministic, maximally spread (minimum pairwise distance 1/3).
_FIRST_SWEEP_UNIT = tuple(
    (a, b) for a in (1 / 6, 1 / 2, 5 / 6) for b in (1 / 6, 1 / 2, 5 / 6)
)


@dataclass(frozen=True)
class ParamGrid:
    """log2 search rectangle for (C, gamma)."""

    log2_c_range: tuple[float, float] = (-5.0, 15.0)
    log2_gamma_range: tuple[float, float] = (-15.0, 3.0)

    def __post_init__(self):
        for lo, hi in (self.log2_c_range, self.log2_gamma_range):
            if hi < lo:
                raise ValueError("range must satisfy lo <= hi")


@dataclass(frozen=True)
class Metrics:
    tp: int
    fn: int
    tn: int
    fp: int
    sn: float
    sp: float
    gmean: float
    accuracy: float

    @classmethod
    def from_counts(cls, tp: int, fn: int, tn: int, fp: int) -> "Metrics":
        sn = tp / (tp + fn) if tp + fn > 0 else 0.0
        sp = tn / (tn + fp) if tn + fp > 0 else 0.0
        total = tp + fn + tn + fp
        acc = (tp + tn) / total if total > 0 else 0.0
        return cls(tp, fn, tn, fp, sn, sp, math.sqrt(sp * sn), acc)


@dataclass(frozen=True)
class EvaluatedModel:
    model: SvmModel
    metrics: Metrics
    num_svs: int
    level: int


def compute_metrics(predictions: np.ndarray, truth: np.ndarray) -> Metrics:
    """Confusion counts and rates; +1 is the positive (minority) class.

    Zero-denominator rates are defined as 0, so a degenerate predictor
    scores G-mean 0.
    """
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValueError("predictions and truth must have equal length")
    if predictions.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    pos_t = truth > 0
    pos_p = predictions > 0
    tp = int((pos_t & pos_p).sum())
    fn = int((pos_t & ~pos_p).sum())
    tn = int((~pos_t & ~pos_p).sum())
    fp = int((~pos_t & pos_p).sum())
    return Metrics.from_counts(tp, fn, tn, fp)


def metrics_line(m: Metrics, num_svs: int, level: int) -> str:
    """Machine-readable evaluation line: ``sn sp gmean acc n_sv level``."""
    return f"{m.sn:.6f} {m.sp:.6f} {m.gmean:.6f} {m.accuracy:.6f} {num_svs} {level}"


def metrics_table(m: Metrics) -> str:
    return (
        f"{'':>10} {'SN':>8} {'SP':>8} {'G-mean':>8} {'ACC':>8}\n"
        f"{'rates':>10} {m.sn:>8.4f} {m.sp:>8.4f} {m.gmean:>8.4f} {m.accuracy:>8.4f}\n"
        f"{'counts':>10} tp={m.tp} fn={m.fn} tn={m.tn} fp={m.fp}"
    )


# ---------------------------------------------------------------------------
# Parameter sweeps


def ud_first_sweep(grid: ParamGrid = ParamGrid()) -> list[tuple[float, float]]:
    """Nine (log2 C, log2 gamma) pairs spread over the search rectangle."""
    c_lo, c_hi = grid.log2_c_range
    g_lo, g_hi = grid.log2_gamma_range
    return [
        (c_lo + a * (c_hi - c_lo), g_lo + b * (g_hi - g_lo))
        for a, b in _FIRST_SWEEP_UNIT
    ]


def ud_second_sweep(
    center: tuple[float, float], grid: ParamGrid = ParamGrid()
) -> list[tuple[float, float]]:
    """Up to four refinement points around ``center``.

    A 2x2 factorial at offsets of half the window half-width, where the
    window half-width is a quarter of each range.  Points are clipped into
    the global ranges; clipped duplicates of the center (possible only when
    the center sits on a range boundary) are dropped.
    """
    c_lo, c_hi = grid.log2_c_range
    g_lo, g_hi = grid.log2_gamma_range
    cc, cg = center
    if not (c_lo <= cc <= c_hi and g_lo <= cg <= g_hi):
        raise ValueError(f"center {center} outside the configured ranges")
    step_c = (c_hi - c_lo) / 8.0
    step_g = (g_hi - g_lo) / 8.0
    points = []
    for dc in (-step_c, step_c):
        for dg in (-step_g, step_g):
            p = (
                min(max(cc + dc, c_lo), c_hi),
                min(max(cg + dg, g_lo), g_hi),
            )
            if p != center and p not in points:
                points.append(p)
    return points


def params_from_log2(point: tuple[float, float]) -> ModelParams:
    return ModelParams(c=2.0 ** point[0], gamma=2.0 ** point[1])


def log2_of_params(params: ModelParams) -> tuple[float, float]:
    return (math.log2(params.c), math.log2(params.gamma))


# ---------------------------------------------------------------------------
# Selection


def select_model(candidates: list[EvaluatedModel]) -> EvaluatedModel:
    """Best G-mean wins; within :data:`GMEAN_TIE` of the maximum the model
    with fewer support vectors wins; remaining ties keep the earlier
    candidate."""
    if not candidates:
        raise ValueError("no candidates to select from")
    g_star = max(c.metrics.gmean for c in candidates)
    best = min(
        (i for i, c in enumerate(candidates) if g_star - c.metrics.gmean <= GMEAN_TIE),
        key=lambda i: (candidates[i].num_svs, i),
    )
    return candidates[best]


def make_validation_set(training: DataSet, seed: int) -> np.ndarray:
    """Sorted indices of a uniform 10% subset of the training data.

    If one class is missing from the draw, a uniformly chosen point of that
    class replaces a uniformly chosen drawn point; a single-element draw is
    extended to two instead, so both classes are always covered when the
    training data has both.
    """
    n = training.n
    if n == 0:
        raise ValueError("training data is empty")
    m = math.ceil(VALIDATION_FRACTION * n)
    rng = np.random.default_rng(seed)
    idx = rng.permutation(n)[:m]
    if training.n_pos > 0 and training.n_neg > 0:
        drawn = training.labels[idx]
        missing = 0
        if not (drawn > 0).any():
            missing = 1
        elif not (drawn < 0).any():
            missing = -1
        if missing:
            pool = np.flatnonzero(training.labels == missing)
            pick = rng.choice(pool)
            if m == 1:
                idx = np.append(idx, pick)
            else:
                idx[rng.integers(m)] = pick
    return np.sort(idx)
