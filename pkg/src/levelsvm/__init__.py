"""Multilevel RBF C-SVM training via per-class k-NN graph coarsening."""

from .clustering import Clustering, LdConfig, LpConfig, compact, label_propagation, low_diameter
from .dataset import DataSet, FoldPlan, load_dataset, sample, split_folds, standardize
from .driver import CvReport, TrainConfig, TrainReport, cross_validate, predict_dataset, train_multilevel
from .errors import DataError, TrainingError
from .hierarchy import Hierarchy, Level, build_hierarchy, contract, uncontract_sv
from .knn_graph import WeightedGraph, build_knn_graph
from .model_select import (
    EvaluatedModel,
    Metrics,
    ParamGrid,
    compute_metrics,
    make_validation_set,
    select_model,
    ud_first_sweep,
    ud_second_sweep,
)
from .svm import ModelParams, SolverConfig, SvmModel, decision_value, predict, rbf_kernel, train

__version__ = "0.1.0"

__all__ = [
    "Clustering",
    "CvReport",
    "DataError",
    "DataSet",
    "EvaluatedModel",
    "FoldPlan",
    "Hierarchy",
    "LdConfig",
    "Level",
    "LpConfig",
    "Metrics",
    "ModelParams",
    "ParamGrid",
    "SolverConfig",
    "SvmModel",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "WeightedGraph",
    "build_hierarchy",
    "build_knn_graph",
    "compact",
    "compute_metrics",
    "contract",
    "cross_validate",
    "decision_value",
    "label_propagation",
    "load_dataset",
    "low_diameter",
    "make_validation_set",
    "predict",
    "predict_dataset",
    "rbf_kernel",
    "sample",
    "select_model",
    "split_folds",
    "standardize",
    "train",
    "train_multilevel",
    "ud_first_sweep",
    "ud_second_sweep",
    "uncontract_sv",
]
