"""Command-line interface.

Subcommands: ``cv`` (repeated k-fold cross-validation), ``train`` (fit one
model and write it with its scaling statistics), ``predict`` (apply a saved
model), ``inspect`` (print per-class hierarchy summaries and debug dumps).

Exit codes: 0 success, 2 configuration errors, 3 data errors, 4 training
errors.  Output files are written atomically (temp file + rename), so a
failed run leaves no partial artifacts.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import svm
from .clustering import LABEL_PROPAGATION, LOW_DIAMETER, dump_clustering
from .driver import MODE_FAST, MODE_QUALITY, TrainConfig, cross_validate, predict_dataset, train_multilevel
from .errors import DataError, TrainingError
from .hierarchy import build_hierarchy, format_summary
from .knn_graph import build_knn_graph, dump_graph
from .model_select import ParamGrid, metrics_table
from .seeding import child_seed
from .svm import ModelParams

THREADS_ENV = "LEVELSVM_THREADS"

_CLUSTERING_NAMES = {
    "lp": LABEL_PROPAGATION,
    "label_propagation": LABEL_PROPAGATION,
    "lowdia": LOW_DIAMETER,
    "low_diameter": LOW_DIAMETER,
}


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _atomic_write(path: str | Path, render) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as f:
            render(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _add_data_args(p: argparse.ArgumentParser, *, required: bool = True) -> None:
    p.add_argument("--data", required=required, help="input data file")
    p.add_argument("--format", choices=["csv", "sparse"], default="csv",
                   help="input format (default csv)")
    p.add_argument("--header", action="store_true", help="csv file has a header row")
    p.add_argument("--label-column", default="0",
                   help="label column index, or name when --header is set (default 0)")
    p.add_argument("--categorical", default="",
                   help="comma-separated indices of columns to force categorical")


def _add_train_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[MODE_QUALITY, MODE_FAST], default=MODE_QUALITY)
    p.add_argument("--clustering", choices=sorted(_CLUSTERING_NAMES), default="lp")
    p.add_argument("--lp-rounds", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.4, help="low-diameter shift parameter")
    p.add_argument("--k-neighbors", type=int, default=10)
    p.add_argument("--coarsest", type=int, default=500,
                   help="stop coarsening below this node count")
    p.add_argument("--ms-skip", type=int, default=10000,
                   help="skip model selection above this problem size")
    p.add_argument("--sample", type=float, default=None,
                   help="train on this fraction of the data")
    p.add_argument("--fixed-c", type=float, default=None,
                   help="fix C (requires --fixed-gamma; disables model selection)")
    p.add_argument("--fixed-gamma", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def _parse_label_column(arg: str) -> int | str:
    try:
        return int(arg)
    except ValueError:
        return arg


def _parse_categorical(arg: str) -> tuple[int, ...]:
    if not arg.strip():
        return ()
    try:
        return tuple(int(tok) for tok in arg.split(","))
    except ValueError:
        raise _Exit(2, f"--categorical must be comma-separated integers, got {arg!r}")


def _load_data(args) -> ds.DataSet:
    path = Path(args.data)
    if not path.exists():
        raise _Exit(3, f"data file not found: {path}")
    fmt = "sparse_text" if args.format == "sparse" else "csv"
    return ds.load_dataset(
        path,
        fmt,
        header=args.header,
        label_column=_parse_label_column(args.label_column),
        categorical_columns=_parse_categorical(args.categorical),
    )


def _train_config(args) -> TrainConfig:
    fixed = None
    if (args.fixed_c is None) != (args.fixed_gamma is None):
        raise _Exit(2, "--fixed-c and --fixed-gamma must be given together")
    if args.fixed_c is not None:
        try:
            fixed = ModelParams(c=args.fixed_c, gamma=args.fixed_gamma)
        except ValueError as exc:
            raise _Exit(2, str(exc))
    try:
        return TrainConfig(
            mode=args.mode,
            clustering=_CLUSTERING_NAMES[args.clustering],
            lp_rounds=args.lp_rounds,
            ld_beta=args.beta,
            k_neighbors=args.k_neighbors,
            coarsest_threshold=args.coarsest,
            ms_skip_threshold=args.ms_skip,
            sample_fraction=args.sample,
            fixed_params=fixed,
            grid=ParamGrid(),
            seed=args.seed,
        )
    except ValueError as exc:
        raise _Exit(2, str(exc))


def _default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return 1


# ---------------------------------------------------------------------------
# Subcommands


def run_cv(args) -> int:
    data = _load_data(args)
    cfg = _train_config(args)
    report = cross_validate(data, cfg, k=args.k, repetitions=args.reps, threads=args.threads)

    print(
        f"cv: {args.data} n={data.n} d={data.dim} k={args.k} reps={args.reps} "
        f"mode={cfg.mode} clustering={cfg.clustering} seed={cfg.seed}"
    )
    print(f"{'rep':>4} {'fold':>4} {'sn':>9} {'sp':>9} {'gmean':>9} {'acc':>9}")
    for r in report.runs:
        m = r.metrics
        print(f"{r.rep:>4} {r.fold:>4} {m.sn:>9.6f} {m.sp:>9.6f} {m.gmean:>9.6f} {m.accuracy:>9.6f}")
    print(
        f"aggregate: SN {report.mean_sn:.6f} SP {report.mean_sp:.6f} "
        f"G-mean {report.mean_gmean:.6f} ACC {report.mean_accuracy:.6f}"
    )
    phases = " ".join(f"{k} {v:.3f}" for k, v in report.mean_wall_times.items())
    print(f"phase times (mean s): {phases}")

    if args.out:
        def render(f):
            f.write("rep fold sn sp gmean acc\n")
            for r in report.runs:
                m = r.metrics
                f.write(
                    f"{r.rep} {r.fold} {m.sn:.6f} {m.sp:.6f} {m.gmean:.6f} {m.accuracy:.6f}\n"
                )
            f.write(
                f"mean - {report.mean_sn:.6f} {report.mean_sp:.6f} "
                f"{report.mean_gmean:.6f} {report.mean_accuracy:.6f}\n"
            )

        _atomic_write(args.out, render)
    return 0


def run_train(args) -> int:
    data = _load_data(args)
    cfg = _train_config(args)
    scaled, _ = ds.standardize(data)
    report = train_multilevel(scaled, cfg)
    model = report.best.model

    _atomic_write(args.model, lambda f: svm.save_model(model, f))
    scaling_path = args.scaling or args.model + ".scaling"
    _atomic_write(
        scaling_path,
        lambda f: ds.save_scaling(f, scaled.column_means, scaled.column_stds),
    )
    train_metrics = predict_dataset(model, scaled)
    print(f"model: {args.model} (svs={model.num_svs} C={model.params.c:g} "
          f"gamma={model.params.gamma:g} level={report.best.level})")
    print(f"scaling: {scaling_path}")
    print("training-set metrics:")
    print(metrics_table(train_metrics))
    return 0


def run_predict(args) -> int:
    model_path = Path(args.model)
    if not model_path.exists():
        raise _Exit(3, f"model file not found: {model_path}")
    with open(model_path) as f:
        model = svm.load_model(f)

    path = Path(args.data)
    if not path.exists():
        raise _Exit(3, f"data file not found: {path}")
    fmt = "sparse_text" if args.format == "sparse" else "csv"
    text = path.read_text()

    if args.no_labels:
        if fmt == "csv":
            # Treat every column as a feature by parsing with a synthetic
            # label column appended.
            rows = [ln for ln in text.splitlines() if ln.strip()]
            text = "\n".join(row + ",0" for row in rows)
            table = ds.parse(text, "csv", header=args.header, label_column=-1)
        else:
            lines = [ln for ln in text.splitlines() if ln.strip()]
            text = "\n".join("0 " + ln for ln in lines)
            table = ds.parse(text, "sparse_text")
        truth = None
    else:
        table = ds.parse(
            text,
            fmt,
            header=args.header,
            label_column=_parse_label_column(args.label_column),
            categorical_columns=_parse_categorical(args.categorical),
        )
        truth = _labels_via_model(ds.label_strings(table), model)
    features = ds.feature_matrix(ds.one_hot_encode(table))

    if args.scaling:
        with open(args.scaling) as f:
            means, stds = ds.load_scaling(f)
        features = ds.apply_scaling(features, means, stds)
    if features.shape[1] != model.dim:
        raise _Exit(3, f"model expects {model.dim} features, data has {features.shape[1]}")

    preds = svm.predict_many(model, features)
    pos_name, neg_name = model.label_names
    lines = [pos_name if p > 0 else neg_name for p in preds]

    if args.out:
        _atomic_write(args.out, lambda f: f.write("\n".join(lines) + "\n"))
    else:
        for line in lines:
            print(line)
    if truth is not None:
        from .model_select import compute_metrics

        print(metrics_table(compute_metrics(preds, truth)))
    return 0


def _labels_via_model(raw: list[str], model: svm.SvmModel) -> np.ndarray:
    """Map label strings onto +1/-1 using the model's label vocabulary."""
    pos_name, neg_name = model.label_names

    def match(tok: str, name: str) -> bool:
        if tok == name:
            return True
        try:
            return float(tok) == float(name)
        except ValueError:
            return False

    out = np.empty(len(raw), dtype=np.int64)
    for i, tok in enumerate(raw):
        if match(tok, pos_name):
            out[i] = 1
        elif match(tok, neg_name):
            out[i] = -1
        else:
            raise _Exit(3, f"label {tok!r} not in the model vocabulary "
                           f"({pos_name!r}, {neg_name!r})")
    return out


def run_inspect(args) -> int:
    data = _load_data(args)
    cfg = _train_config(args)
    scaled, _ = ds.standardize(data)
    from .driver import _cluster_fn  # same clustering wiring as training

    for tag, rows in (("pos", np.flatnonzero(scaled.labels > 0)),
                      ("neg", np.flatnonzero(scaled.labels < 0))):
        graph = build_knn_graph(scaled.features[rows], cfg.k_neighbors)
        hierarchy = build_hierarchy(graph, _cluster_fn(cfg, tag), cfg.coarsest_threshold)
        print(f"class {tag} ({'+1' if tag == 'pos' else '-1'}): "
              f"{len(rows)} points, {hierarchy.num_levels} levels")
        print(format_summary(hierarchy.summary()))
        if args.dump_graph:
            _atomic_write(f"{args.dump_graph}.{tag}.txt", lambda f: dump_graph(graph, f))
        if args.dump_clustering:
            clustering = _cluster_fn(cfg, tag)(graph, 0)
            _atomic_write(
                f"{args.dump_clustering}.{tag}.txt",
                lambda f: dump_clustering(clustering, f),
            )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levelsvm",
        description="Multilevel RBF C-SVM training on k-NN graph hierarchies",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v per-level progress, -vv per-candidate evaluations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cv = sub.add_parser("cv", help="repeated k-fold cross-validation")
    _add_data_args(p_cv)
    _add_train_config_args(p_cv)
    p_cv.add_argument("--k", type=int, default=5, help="number of folds")
    p_cv.add_argument("--reps", type=int, default=5, help="number of repetitions")
    p_cv.add_argument("--threads", type=int, default=_default_threads(),
                      help=f"concurrent runs (default ${THREADS_ENV} or 1)")
    p_cv.add_argument("--out", default=None, help="machine-readable results file")
    p_cv.set_defaults(func=run_cv)

    p_tr = sub.add_parser("train", help="train one model on a labeled file")
    _add_data_args(p_tr)
    _add_train_config_args(p_tr)
    p_tr.add_argument("--model", required=True, help="output model file")
    p_tr.add_argument("--scaling", default=None,
                      help="output scaling statistics file (default <model>.scaling)")
    p_tr.set_defaults(func=run_train)

    p_pr = sub.add_parser("predict", help="apply a saved model to a data file")
    _add_data_args(p_pr)
    p_pr.add_argument("--model", required=True, help="model file to load")
    p_pr.add_argument("--scaling", default=None, help="scaling statistics file")
    p_pr.add_argument("--no-labels", action="store_true",
                      help="data file has no label column")
    p_pr.add_argument("--out", default=None, help="predictions output file")
    p_pr.set_defaults(func=run_predict)

    p_in = sub.add_parser("inspect", help="print per-class hierarchy summaries")
    _add_data_args(p_in)
    _add_train_config_args(p_in)
    p_in.add_argument("--dump-graph", default=None,
                      help="write per-class edge lists to <prefix>.{pos,neg}.txt")
    p_in.add_argument("--dump-clustering", default=None,
                      help="write per-class level-0 clusterings to <prefix>.{pos,neg}.txt")
    p_in.set_defaults(func=run_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr)
    logging.getLogger("levelsvm").setLevel(level)
    try:
        return args.func(args)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
