"""Multilevel training orchestration.

One run: optionally sample, split the training data by class, build one k-NN
graph and one contraction hierarchy per class, train with parameter search on
the union of the coarsest levels, then walk both hierarchies fineward,
retraining on the uncontracted support vectors of the previous model.  Every
trained model is scored on a fixed validation subset of the training data and
the best of all levels wins.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import dataset as ds
from .clustering import LABEL_PROPAGATION, LOW_DIAMETER, LdConfig, LpConfig, label_propagation, low_diameter
from .errors import TrainingError
from .hierarchy import Hierarchy, build_hierarchy, uncontract_sv
from .knn_graph import build_knn_graph
from .model_select import (
    EvaluatedModel,
    Metrics,
    ParamGrid,
    compute_metrics,
    log2_of_params,
    make_validation_set,
    metrics_line,
    params_from_log2,
    select_model,
    ud_first_sweep,
    ud_second_sweep,
)
from .seeding import child_seed
from .svm import ModelParams, SolverConfig, SvmModel, predict_many, train

logger = logging.getLogger("levelsvm")

MODE_QUALITY = "quality"
MODE_FAST = "fast"

DEFAULT_MS_SKIP = 10_000


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of one multilevel training run.

    ``fixed_params`` disables parameter search entirely; ``mode="fast"``
    returns the initial (coarsest-level) model without refinement.
    """

    mode: str = MODE_QUALITY
    clustering: str = LABEL_PROPAGATION
    lp_rounds: int = 10
    ld_beta: float = 0.4
    k_neighbors: int = 10
    coarsest_threshold: int = 500
    ms_skip_threshold: int = DEFAULT_MS_SKIP
    sample_fraction: float | None = None
    fixed_params: ModelParams | None = None
    grid: ParamGrid = field(default_factory=ParamGrid)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_QUALITY, MODE_FAST):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.clustering not in (LABEL_PROPAGATION, LOW_DIAMETER):
            raise ValueError(f"unknown clustering {self.clustering!r}")
        if self.coarsest_threshold <= 0 or self.ms_skip_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if self.sample_fraction is not None and not 0 < self.sample_fraction <= 1:
            raise ValueError("sample_fraction must be in (0, 1]")


@dataclass
class TrainReport:
    """Everything one run produced, for selection, reporting and tests."""

    best: EvaluatedModel
    initial: EvaluatedModel
    per_level: list[EvaluatedModel]
    hierarchy_summaries: dict[str, list[tuple[int, int, int, float]]]
    wall_times: dict[str, float]
    validation_indices: np.ndarray
    alignment_steps: int
    refinement_sizes: list[tuple[int, int, int]]  # (level, n_train, n_covered)
    n_train: int


def _cluster_fn(cfg: TrainConfig, class_tag: str):
    if cfg.clustering == LABEL_PROPAGATION:

        def fn(graph, level):
            seed = child_seed(cfg.seed, "lp", class_tag, level)
            return label_propagation(graph, LpConfig(rounds=cfg.lp_rounds, seed=seed))

    else:

        def fn(graph, level):
            seed = child_seed(cfg.seed, "lowdia", class_tag, level)
            return low_diameter(graph, LdConfig(beta=cfg.ld_beta, seed=seed))

    return fn


def _evaluate(
    model: SvmModel, val_x: np.ndarray, val_y: np.ndarray, level: int
) -> EvaluatedModel:
    preds = predict_many(model, val_x)
    metrics = compute_metrics(preds, val_y)
    em = EvaluatedModel(model=model, metrics=metrics, num_svs=model.num_svs, level=level)
    logger.debug("eval: %s", metrics_line(metrics, em.num_svs, level))
    return em


def _fit_candidates(
    X: np.ndarray,
    y: np.ndarray,
    params_list: list[ModelParams],
    cfg: TrainConfig,
    val_x: np.ndarray,
    val_y: np.ndarray,
    level: int,
    label_names: tuple[str, str],
) -> list[EvaluatedModel]:
    out = []
    for params in params_list:
        model = train(X, y, params, cfg.solver, label_names=label_names)
        out.append(_evaluate(model, val_x, val_y, level))
    return out


def train_multilevel(training: ds.DataSet, cfg: TrainConfig) -> TrainReport:
    """Run the full multilevel pipeline on one training set."""
    times: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    if cfg.sample_fraction is not None and cfg.sample_fraction < 1.0:
        training = ds.sample(training, cfg.sample_fraction, child_seed(cfg.seed, "sample"))
    times["sample"] = time.perf_counter() - t0
    if training.n_pos == 0 or training.n_neg == 0:
        raise TrainingError("training data must contain both classes")

    val_idx = make_validation_set(training, child_seed(cfg.seed, "validation"))
    val_x = training.features[val_idx]
    val_y = training.labels[val_idx]
    label_names = training.label_names

    pos_rows = np.flatnonzero(training.labels > 0)
    neg_rows = np.flatnonzero(training.labels < 0)

    t0 = time.perf_counter()
    g_pos = build_knn_graph(training.features[pos_rows], cfg.k_neighbors)
    g_neg = build_knn_graph(training.features[neg_rows], cfg.k_neighbors)
    times["knn"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h_pos = build_hierarchy(g_pos, _cluster_fn(cfg, "pos"), cfg.coarsest_threshold)
    h_neg = build_hierarchy(g_neg, _cluster_fn(cfg, "neg"), cfg.coarsest_threshold)
    times["hierarchy"] = time.perf_counter() - t0
    summaries = {"pos": h_pos.summary(), "neg": h_neg.summary()}

    # Initial training on the union of the coarsest node feature vectors.
    t0 = time.perf_counter()
    lev_pos = h_pos.num_levels - 1
    lev_neg = h_neg.num_levels - 1
    pos_nodes = np.arange(h_pos.coarsest.graph.n)
    neg_nodes = np.arange(h_neg.coarsest.graph.n)
    level_tag = max(lev_pos, lev_neg)
    X, y = _stack_training_set(h_pos, lev_pos, pos_nodes, h_neg, lev_neg, neg_nodes)

    if cfg.fixed_params is not None:
        initial_cands = _fit_candidates(
            X, y, [cfg.fixed_params], cfg, val_x, val_y, level_tag, label_names
        )
    else:
        first = [params_from_log2(p) for p in ud_first_sweep(cfg.grid)]
        initial_cands = _fit_candidates(X, y, first, cfg, val_x, val_y, level_tag, label_names)
        center = log2_of_params(select_model(initial_cands).model.params)
        second = [params_from_log2(p) for p in ud_second_sweep(center, cfg.grid)]
        initial_cands += _fit_candidates(X, y, second, cfg, val_x, val_y, level_tag, label_names)
    initial = select_model(initial_cands)
    times["initial"] = time.perf_counter() - t0
    logger.info(
        "initial model: level=%d C=%g gamma=%g gmean=%.4f svs=%d",
        level_tag, initial.model.params.c, initial.model.params.gamma,
        initial.metrics.gmean, initial.num_svs,
    )

    per_level: list[EvaluatedModel] = []
    refinement_sizes: list[tuple[int, int, int]] = []
    alignment_steps = 0
    t0 = time.perf_counter()
    if cfg.mode == MODE_QUALITY:
        current = initial
        cur_params = initial.model.params
        pos_sv, neg_sv = _split_sv_nodes(current.model, len(pos_nodes))
        pos_sv = pos_nodes[pos_sv]
        neg_sv = neg_nodes[neg_sv]
        while lev_pos > 0 or lev_neg > 0:
            step_pos = lev_pos > 0 and lev_pos >= lev_neg
            step_neg = lev_neg > 0 and lev_neg >= lev_pos
            if step_pos != step_neg:
                alignment_steps += 1
            if step_pos:
                pos_sv = uncontract_sv(h_pos, lev_pos, pos_sv)
                lev_pos -= 1
            if step_neg:
                neg_sv = uncontract_sv(h_neg, lev_neg, neg_sv)
                lev_neg -= 1
            level_tag = max(lev_pos, lev_neg)
            X, y = _stack_training_set(h_pos, lev_pos, pos_sv, h_neg, lev_neg, neg_sv)
            refinement_sizes.append((level_tag, len(y), len(pos_sv) + len(neg_sv)))

            if cfg.fixed_params is not None:
                params_list = [cfg.fixed_params]
            elif len(y) <= cfg.ms_skip_threshold:
                center = log2_of_params(cur_params)
                params_list = [cur_params] + [
                    params_from_log2(p) for p in ud_second_sweep(center, cfg.grid)
                ]
            else:
                # Too large for another sweep: inherit the parameters as-is.
                params_list = [cur_params]
            cands = _fit_candidates(X, y, params_list, cfg, val_x, val_y, level_tag, label_names)
            current = select_model(cands)
            cur_params = current.model.params
            per_level.append(current)
            logger.info(
                "level %d: n=%d C=%g gamma=%g gmean=%.4f svs=%d",
                level_tag, len(y), cur_params.c, cur_params.gamma,
                current.metrics.gmean, current.num_svs,
            )
            p_idx, n_idx = _split_sv_nodes(current.model, len(pos_sv))
            pos_sv = pos_sv[p_idx]
            neg_sv = neg_sv[n_idx]
    times["refinement"] = time.perf_counter() - t0
    times["total"] = time.perf_counter() - t_total

    best = select_model([initial] + per_level)
    return TrainReport(
        best=best,
        initial=initial,
        per_level=per_level,
        hierarchy_summaries=summaries,
        wall_times=times,
        validation_indices=val_idx,
        alignment_steps=alignment_steps,
        refinement_sizes=refinement_sizes,
        n_train=training.n,
    )


def _stack_training_set(h_pos, lev_pos, pos_nodes, h_neg, lev_neg, neg_nodes):
    """Training matrix from per-class hierarchy nodes; +1 rows come first so
    support vectors map back to (class, node id) by position."""
    xp = h_pos.levels[lev_pos].graph.node_features[pos_nodes]
    xn = h_neg.levels[lev_neg].graph.node_features[neg_nodes]
    X = np.vstack([xp, xn])
    y = np.concatenate([np.ones(len(xp), dtype=np.int64), -np.ones(len(xn), dtype=np.int64)])
    return X, y


def _split_sv_nodes(model: SvmModel, n_pos_rows: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a model's support-vector row indices into per-class positions."""
    sv = model.sv_indices
    pos_part = sv[sv < n_pos_rows]
    neg_part = sv[sv >= n_pos_rows] - n_pos_rows
    return pos_part, neg_part


# ---------------------------------------------------------------------------
# Evaluation over datasets and cross-validation


def predict_dataset(model: SvmModel, data: ds.DataSet) -> Metrics:
    """Per-row predictions aggregated into metrics."""
    if data.n == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = predict_many(model, data.features)
    return compute_metrics(preds, data.labels)


@dataclass
class RunResult:
    rep: int
    fold: int
    metrics: Metrics
    report: TrainReport
    test_indices: np.ndarray
    validation_indices_original: np.ndarray


@dataclass
class CvReport:
    runs: list[RunResult]
    k: int
    repetitions: int
    mean_sn: float
    mean_sp: float
    mean_gmean: float
    mean_accuracy: float
    mean_wall_times: dict[str, float]


def _run_fold(data: ds.DataSet, cfg: TrainConfig, rep: int, fold: int, plan) -> RunResult:
    test_mask = plan.test_mask(fold)
    train_rows = np.flatnonzero(~test_mask)
    test_rows = np.flatnonzero(test_mask)
    train_raw = ds.subset(data, train_rows)
    test_raw = ds.subset(data, test_rows)
    train_std, [test_std] = ds.standardize(train_raw, [test_raw])
    run_cfg = replace(cfg, seed=child_seed(cfg.seed, "run", rep, fold))
    report = train_multilevel(train_std, run_cfg)
    metrics = predict_dataset(report.best.model, test_std)
    return RunResult(
        rep=rep,
        fold=fold,
        metrics=metrics,
        report=report,
        test_indices=test_rows,
        validation_indices_original=train_rows[report.validation_indices],
    )


def cross_validate(
    data: ds.DataSet,
    cfg: TrainConfig,
    k: int = 5,
    repetitions: int = 5,
    *,
    threads: int = 1,
) -> CvReport:
    """Repeated k-fold cross-validation.

    Each repetition reshuffles the folds with its own derived seed; each fold
    standardizes with training-fold statistics, trains, and evaluates on the
    untouched test fold.  Reported rates are arithmetic means over all
    k * repetitions runs.  ``threads`` only parallelizes independent runs;
    results are identical for any thread count.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    tasks = []
    for rep in range(repetitions):
        plan = ds.split_folds(data, k, child_seed(cfg.seed, "folds", rep))
        for fold in range(k):
            tasks.append((rep, fold, plan))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(
                pool.map(lambda t: _run_fold(data, cfg, t[0], t[1], t[2]), tasks)
            )
    else:
        runs = [_run_fold(data, cfg, rep, fold, plan) for rep, fold, plan in tasks]

    mean = lambda vals: float(np.mean(vals))
    phase_keys = runs[0].report.wall_times.keys()
    return CvReport(
        runs=runs,
        k=k,
        repetitions=repetitions,
        mean_sn=mean([r.metrics.sn for r in runs]),
        mean_sp=mean([r.metrics.sp for r in runs]),
        mean_gmean=mean([r.metrics.gmean for r in runs]),
        mean_accuracy=mean([r.metrics.accuracy for r in runs]),
        mean_wall_times={
            key: mean([r.report.wall_times[key] for r in runs]) for key in phase_keys
        },
    )
