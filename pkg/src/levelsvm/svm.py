"""Soft-margin binary C-SVM with RBF kernel.

The dual problem

    min  1/2 a^T Q a - e^T a   s.t.  0 <= a_i <= C,  y^T a = 0,
    Q_ij = y_i y_j k(x_i, x_j),  k(x, z) = exp(-gamma ||x - z||^2)

is solved by sequential minimal optimization with maximal-violating-pair
working-set selection.  The decision value of a point is
sum_i a_i y_i k(x_i, x) + b; the weight vector is never materialized.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, TrainingError

_TAU = 1e-12  # curvature floor for degenerate pair subproblems

MODEL_MAGIC = "levelsvm-model 1"


@dataclass(frozen=True)
class ModelParams:
    """Penalty C and RBF width gamma, both strictly positive and finite."""

    c: float
    gamma: float

    def __post_init__(self):
        for name, v in (("c", self.c), ("gamma", self.gamma)):
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class SolverConfig:
    """SMO solver knobs.

    ``seed`` is reserved for interface stability; pair selection is fully
    deterministic and consumes no randomness.
    """

    kkt_tolerance: float = 1e-3
    max_iterations: int = 10_000_000
    kernel_cache_bytes: int = 256 * 1024 * 1024
    seed: int = 0

    def __post_init__(self):
        if not self.kkt_tolerance > 0:
            raise ValueError("kkt_tolerance must be positive")


@dataclass
class SvmModel:
    """Dual-form model: support vectors with signed coefficients and bias.

    ``alphas_signed[i]`` is alpha_i * y_i with 0 < alpha_i <= C, and the
    coefficients satisfy sum(alphas_signed) = 0 up to solver tolerance.
    ``sv_indices`` locates the support vectors in the training set of the
    ``train`` call that produced the model (not serialized).
    """

    support_vectors: np.ndarray
    alphas_signed: np.ndarray
    bias: float
    params: ModelParams
    training_size: int
    converged: bool = True
    label_names: tuple[str, str] = ("+1", "-1")
    sv_indices: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_svs(self) -> int:
        return self.support_vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]


# ---------------------------------------------------------------------------
# Kernel


def rbf_kernel(x: np.ndarray, z: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2); exactly 1 when x == z."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d = x - z
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_kernel_matrix(X: np.ndarray, Z: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise RBF kernel values, shape (len(X), len(Z))."""
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    sq_x = np.einsum("ij,ij->i", X, X)
    sq_z = np.einsum("ij,ij->i", Z, Z)
    d2 = sq_x[:, None] + sq_z[None, :] - 2.0 * (X @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2, out=d2)


class _KernelCache:
    """Kernel rows for one training run.

    Materializes the full matrix when it fits the byte budget, otherwise
    keeps a least-recently-used row cache.  Purely a speed device; results
    are identical either way.
    """

    def __init__(self, X: np.ndarray, gamma: float, budget_bytes: int):
        self.X = X
        self.gamma = gamma
        n = X.shape[0]
        self.sq = np.einsum("ij,ij->i", X, X)
        self.full: np.ndarray | None = None
        if n * n * 8 <= budget_bytes:
            self.full = rbf_kernel_matrix(X, X, gamma)
            self.rows = None
        else:
            self.rows: OrderedDict[int, np.ndarray] = OrderedDict()
            self.capacity = max(2, budget_bytes // (n * 8))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        row = self.rows.get(i)
        if row is not None:
            self.rows.move_to_end(i)
            return row
        d2 = self.sq + self.sq[i] - 2.0 * (self.X @ self.X[i])
        np.maximum(d2, 0.0, out=d2)
        row = np.exp(-self.gamma * d2, out=d2)
        self.rows[i] = row
        while len(self.rows) > self.capacity:
            self.rows.popitem(last=False)
        return row


# ---------------------------------------------------------------------------
# Training


def train(
    X: np.ndarray,
    y: np.ndarray,
    params: ModelParams,
    cfg: SolverConfig = SolverConfig(),
    *,
    label_names: tuple[str, str] = ("+1", "-1"),
) -> SvmModel:
    """Train on (X, y) with y in {+1, -1}; both classes must be present.

    Stops when the maximal KKT violation drops to ``cfg.kkt_tolerance``.  If
    the pair-update budget runs out first, the best-so-far model is returned
    with ``converged=False``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    if y.shape != (n,):
        raise ValueError("labels must match feature rows")
    pos = y > 0
    if not pos.any() or pos.all():
        raise TrainingError("training data must contain both classes")

    C = float(params.c)
    tol = cfg.kkt_tolerance
    yf = np.where(pos, 1.0, -1.0)
    cache = _KernelCache(X, params.gamma, cfg.kernel_cache_bytes)

    alpha = np.zeros(n)
    grad = np.full(n, -1.0)  # gradient of the dual objective at alpha = 0
    # I_up / I_low membership as additive penalties: member entries carry 0,
    # non-members a huge offset that keeps them out of the arg-extreme.  This
    # avoids boolean-mask materialization in the hot loop; the penalties are
    # patched in place at the two indices each update touches.
    _BIG = 1e308
    penal_up = np.where(pos, 0.0, -_BIG)  # alpha=0: y=+1 can grow
    penal_low = np.where(pos, _BIG, 0.0)
    # Scratch buffers reused across iterations.
    minus_yg = np.empty(n)
    sel_vals = np.empty(n)
    scratch = np.empty(n)

    m_val = np.inf
    big_m_val = -np.inf
    converged = False
    for _ in range(cfg.max_iterations):
        np.multiply(yf, grad, out=minus_yg)
        np.negative(minus_yg, out=minus_yg)
        np.add(minus_yg, penal_up, out=sel_vals)
        i = int(np.argmax(sel_vals))
        m_val = minus_yg[i] if penal_up[i] == 0.0 else -np.inf
        np.add(minus_yg, penal_low, out=sel_vals)
        j = int(np.argmin(sel_vals))
        big_m_val = minus_yg[j] if penal_low[j] == 0.0 else np.inf
        if m_val - big_m_val <= tol:
            converged = True
            break

        ki = cache.row(i)
        kj = cache.row(j)
        yi = yf[i]
        yj = yf[j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        # In kernel terms the curvature is K_ii + K_jj - 2 K_ij in both
        # branches; only the step direction depends on the label pair.
        quad = ki[i] + kj[j] - 2.0 * ki[j]
        if quad <= 0:
            quad = _TAU
        if yi != yj:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total

        d_ai = ai - ai_old
        d_aj = aj - aj_old
        if d_ai == 0.0 and d_aj == 0.0:
            # The most violating pair cannot move: numerically stuck.
            break
        alpha[i] = ai
        alpha[j] = aj
        if d_ai != 0.0:
            np.multiply(yf, ki, out=scratch)
            scratch *= d_ai * yi
            grad += scratch
        if d_aj != 0.0:
            np.multiply(yf, kj, out=scratch)
            scratch *= d_aj * yj
            grad += scratch
        penal_up[i] = 0.0 if ((ai < C) if yi > 0 else (ai > 0)) else -_BIG
        penal_low[i] = 0.0 if ((ai < C) if yi < 0 else (ai > 0)) else _BIG
        penal_up[j] = 0.0 if ((aj < C) if yj > 0 else (aj > 0)) else -_BIG
        penal_low[j] = 0.0 if ((aj < C) if yj < 0 else (aj > 0)) else _BIG

    yg = yf * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = -float(yg[free].mean())
    else:
        bias = float(m_val + big_m_val) / 2.0

    alpha[alpha <= 1e-12 * C] = 0.0
    sv = np.flatnonzero(alpha > 0)
    if sv.size == 0:
        raise TrainingError("solver stopped before producing any support vector")
    return SvmModel(
        support_vectors=X[sv].copy(),
        alphas_signed=alpha[sv] * yf[sv],
        bias=bias,
        params=params,
        training_size=n,
        converged=converged,
        label_names=label_names,
        sv_indices=sv,
    )


# ---------------------------------------------------------------------------
# Prediction


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """sum_i alphas_signed[i] * k(sv_i, x) + b for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"dimension mismatch: model d={model.dim}, data {X.shape}")
    out = np.empty(X.shape[0])
    chunk = max(1, 4_194_304 // max(model.num_svs, 1))
    for s in range(0, X.shape[0], chunk):
        e = min(X.shape[0], s + chunk)
        k = rbf_kernel_matrix(X[s:e], model.support_vectors, model.params.gamma)
        out[s:e] = k @ model.alphas_signed + model.bias
    return out


def decision_value(model: SvmModel, x: np.ndarray) -> float:
    return float(decision_values(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def predict_many(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Labels +1/-1 by the sign of the decision value; an exact zero is +1."""
    vals = decision_values(model, X)
    return np.where(vals >= 0.0, 1, -1).astype(np.int64)


def predict(model: SvmModel, x: np.ndarray) -> int:
    return int(predict_many(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def dual_objective(model: SvmModel) -> float:
    """Value of 1/2 a^T Q a - e^T a at the model's dual solution."""
    s = model.alphas_signed
    k = rbf_kernel_matrix(model.support_vectors, model.support_vectors, model.params.gamma)
    return float(0.5 * s @ k @ s - np.abs(s).sum())


# ---------------------------------------------------------------------------
# Serialization

_F = "{:.17g}".format


def save_model(model: SvmModel, f) -> None:
    """Text serialization; 17 significant digits round-trip float64 exactly."""
    f.write(MODEL_MAGIC + "\n")
    f.write(f"d {model.dim}\n")
    f.write(f"m {model.num_svs}\n")
    f.write(f"c {_F(model.params.c)}\n")
    f.write(f"gamma {_F(model.params.gamma)}\n")
    f.write(f"bias {_F(model.bias)}\n")
    f.write(f"labels {model.label_names[0]} {model.label_names[1]}\n")
    f.write(f"training_size {model.training_size}\n")
    f.write(f"converged {int(model.converged)}\n")
    for a, row in zip(model.alphas_signed, model.support_vectors):
        f.write(_F(a) + " " + " ".join(_F(v) for v in row) + "\n")


def load_model(f) -> SvmModel:
    lines = f.read().splitlines()
    try:
        if lines[0] != MODEL_MAGIC:
            raise DataError(f"not a model file (got header {lines[0]!r})")
        header = {}
        for ln in lines[1:9]:
            key, _, val = ln.partition(" ")
            header[key] = val
        d = int(header["d"])
        m = int(header["m"])
        params = ModelParams(c=float(header["c"]), gamma=float(header["gamma"]))
        bias = float(header["bias"])
        pos_name, neg_name = header["labels"].split(" ", 1)
        training_size = int(header["training_size"])
        converged = bool(int(header["converged"]))
        body = lines[9 : 9 + m]
        if len(body) != m:
            raise DataError(f"model file truncated: expected {m} rows, got {len(body)}")
        alphas = np.empty(m)
        svs = np.empty((m, d))
        for r, ln in enumerate(body):
            vals = ln.split()
            if len(vals) != d + 1:
                raise DataError(f"model row {r}: expected {d + 1} values, got {len(vals)}")
            alphas[r] = float(vals[0])
            svs[r] = [float(v) for v in vals[1:]]
    except DataError:
        raise
    except (IndexError, KeyError, ValueError) as exc:
        raise DataError(f"malformed model file: {exc}") from exc
    return SvmModel(
        support_vectors=svs,
        alphas_signed=alphas,
        bias=bias,
        params=params,
        training_size=training_size,
        converged=converged,
        label_names=(pos_name, neg_name),
    )


def save_model_to_path(model: SvmModel, path: str | Path) -> None:
    with open(path, "w") as f:
        save_model(model, f)


def load_model_from_path(path: str | Path) -> SvmModel:
    with open(path) as f:
        return load_model(f)
