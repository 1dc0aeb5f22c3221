"""Tabular data loading, encoding, scaling, sampling and fold splitting.

The canonical in-memory representation is :class:`DataSet`: a dense float64
feature matrix with labels in {+1, -1}, where +1 is the minority class at load
time.  The original label values are kept so predictions can be reported in
the input's own vocabulary.
"""

from __future__ import annotations

import csv as _csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# Columns whose (population) standard deviation falls below this are treated
# as constant: they are centered but not divided.
CONSTANT_STD = 1e-12


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # NUMERIC or CATEGORICAL


@dataclass
class RawTable:
    """Parsed table before encoding; cells keep their original text tokens."""

    rows: list[list[str]]
    columns: list[ColumnSpec]
    label_column: int

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class DataSet:
    """Dense labeled data with scaling provenance.

    ``labels`` are +1/-1 with +1 the minority class of the source table.
    ``column_means``/``column_stds`` are the statistics the features were
    scaled with (``None`` before standardization).  ``label_names`` maps
    (+1, -1) back to the original label values.
    """

    features: np.ndarray
    labels: np.ndarray
    n_pos: int
    n_neg: int
    column_means: np.ndarray | None = None
    column_stds: np.ndarray | None = None
    label_names: tuple[str, str] = ("+1", "-1")

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match feature rows")
        if self.n_pos + self.n_neg != self.features.shape[0]:
            raise ValueError("n_pos + n_neg must equal the row count")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every row to one of ``k`` folds."""

    k: int
    assignment: np.ndarray
    seed: int

    def test_mask(self, fold: int) -> np.ndarray:
        return self.assignment == fold


# ---------------------------------------------------------------------------
# Parsing


def _is_numeric(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return token.strip() != ""


def _parse_csv(text, *, header, label_column, categorical_columns):
    reader = _csv.reader(io.StringIO(text))
    raw = [(lineno, row) for lineno, row in enumerate(reader, 1) if row]
    if header:
        if not raw:
            raise DataError("csv: empty input")
        names = [c.strip() for c in raw[0][1]]
        raw = raw[1:]
    else:
        names = None
    if not raw:
        raise DataError("csv: no data rows")
    ncol = len(raw[0][1])
    if names is None:
        names = [f"c{j}" for j in range(ncol)]
    elif len(names) != ncol:
        raise DataError(
            f"csv: header has {len(names)} fields but data rows have {ncol}"
        )
    rows = []
    for lineno, row in raw:
        if len(row) != ncol:
            raise DataError(
                f"csv line {lineno}: expected {ncol} fields, got {len(row)}"
            )
        rows.append([c.strip() for c in row])

    if isinstance(label_column, str):
        if not header:
            raise DataError("csv: label column by name requires a header")
        try:
            label_idx = names.index(label_column)
        except ValueError:
            raise DataError(f"csv: no column named {label_column!r}") from None
    else:
        label_idx = int(label_column)
        if not -ncol <= label_idx < ncol:
            raise DataError(f"csv: label column {label_idx} out of range")
        label_idx %= ncol

    declared = set(categorical_columns)
    columns = []
    for j in range(ncol):
        if j in declared:
            kind = CATEGORICAL
        else:
            kind = NUMERIC if all(_is_numeric(r[j]) for r in rows) else CATEGORICAL
        columns.append(ColumnSpec(names[j], kind))
    return RawTable(rows, columns, label_idx)


def _parse_sparse(text):
    entries = []
    max_idx = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        label = parts[0]
        if ":" in label:
            raise DataError(f"sparse line {lineno}: missing label token")
        prev = 0
        row = []
        for tok in parts[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataError(f"sparse line {lineno}: bad entry {tok!r}")
            try:
                idx = int(idx_s)
                float(val_s)
            except ValueError:
                raise DataError(f"sparse line {lineno}: bad entry {tok!r}") from None
            if idx <= prev:
                raise DataError(
                    f"sparse line {lineno}: indices must be strictly increasing"
                )
            prev = idx
            row.append((idx, val_s))
        max_idx = max(max_idx, prev)
        entries.append((label, row))
    if not entries:
        raise DataError("sparse_text: no data rows")
    rows = []
    for label, row in entries:
        cells = [label] + ["0"] * max_idx
        for idx, val in row:
            cells[idx] = val
        rows.append(cells)
    columns = [ColumnSpec("label", NUMERIC)] + [
        ColumnSpec(f"f{j}", NUMERIC) for j in range(1, max_idx + 1)
    ]
    return RawTable(rows, columns, 0)


def parse(
    data: str | bytes,
    fmt: str,
    *,
    header: bool = False,
    label_column: int | str = 0,
    categorical_columns: tuple[int, ...] = (),
) -> RawTable:
    """Parse ``csv`` or ``sparse_text`` input into a :class:`RawTable`.

    csv: one record per line; a column is categorical iff any value fails
    numeric parsing or its index is listed in ``categorical_columns``.
    sparse_text: ``<label> <idx>:<val> ...`` with 1-based strictly increasing
    indices; absent indices are zero.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if fmt == "csv":
        return _parse_csv(
            text,
            header=header,
            label_column=label_column,
            categorical_columns=categorical_columns,
        )
    if fmt == "sparse_text":
        return _parse_sparse(text)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# Encoding


def one_hot_encode(table: RawTable) -> RawTable:
    """Replace each categorical feature column by one indicator column per
    category, in first-seen order, at the original column's position.

    Numeric columns and the label column pass through unchanged; the result
    never contains categorical feature columns, so the operation is
    idempotent on its own output.
    """
    plans = []  # per input column: None (copy) or list of categories
    for j, col in enumerate(table.columns):
        if j == table.label_column or col.kind == NUMERIC:
            plans.append(None)
        else:
            cats = list(dict.fromkeys(row[j] for row in table.rows))
            plans.append(cats)
    if all(p is None for p in plans):
        return RawTable([list(r) for r in table.rows], list(table.columns), table.label_column)

    columns = []
    new_label = -1
    for j, col in enumerate(table.columns):
        if j == table.label_column:
            new_label = len(columns)
            columns.append(col)
        elif plans[j] is None:
            columns.append(col)
        else:
            for cat in plans[j]:
                columns.append(ColumnSpec(f"{col.name}={cat}", NUMERIC))
    rows = []
    for row in table.rows:
        out = []
        for j, cell in enumerate(row):
            if plans[j] is None:
                out.append(cell)
            else:
                for cat in plans[j]:
                    out.append("1" if cell == cat else "0")
        rows.append(out)
    return RawTable(rows, columns, new_label)


def feature_matrix(table: RawTable) -> np.ndarray:
    """Dense float64 matrix of the feature columns (label column dropped)."""
    feat_idx = [j for j in range(table.n_cols) if j != table.label_column]
    for j in feat_idx:
        if table.columns[j].kind == CATEGORICAL:
            raise DataError(
                f"column {table.columns[j].name!r} is categorical; one-hot encode first"
            )
    return np.array(
        [[float(row[j]) for j in feat_idx] for row in table.rows], dtype=np.float64
    )


def label_strings(table: RawTable) -> list[str]:
    return [row[table.label_column] for row in table.rows]


def to_dataset(table: RawTable) -> DataSet:
    """Convert an encoded table to the canonical representation.

    The minority label becomes +1; on an exact tie the first-seen label wins.
    """
    labels_raw = label_strings(table)
    distinct = list(dict.fromkeys(labels_raw))
    if len(distinct) != 2:
        raise DataError(
            f"expected exactly two distinct labels, found {len(distinct)}: {distinct[:5]}"
        )
    counts = {v: 0 for v in distinct}
    for v in labels_raw:
        counts[v] += 1
    a, b = distinct
    pos, neg = (a, b) if counts[a] <= counts[b] else (b, a)
    y = np.where(np.array(labels_raw) == pos, 1, -1).astype(np.int64)
    X = feature_matrix(table)
    return DataSet(
        features=X,
        labels=y,
        n_pos=int(counts[pos]),
        n_neg=int(counts[neg]),
        label_names=(pos, neg),
    )


def load_dataset(
    path: str | Path,
    fmt: str,
    *,
    header: bool = False,
    label_column: int | str = 0,
    categorical_columns: tuple[int, ...] = (),
) -> DataSet:
    """Read, parse, one-hot encode and orient a labeled data file."""
    text = Path(path).read_text()
    table = parse(
        text,
        fmt,
        header=header,
        label_column=label_column,
        categorical_columns=categorical_columns,
    )
    return to_dataset(one_hot_encode(table))


# ---------------------------------------------------------------------------
# Scaling, folding, sampling


def standardize(train: DataSet, others: list[DataSet] | tuple = ()) -> tuple[DataSet, list[DataSet]]:
    """Zero-mean/unit-variance scaling with statistics from ``train`` only.

    Population standard deviation; columns with std below
    :data:`CONSTANT_STD` keep divisor 1.  Every dataset in ``others`` is
    transformed with the training statistics (never its own).
    """
    if train.n == 0:
        raise DataError("cannot standardize an empty dataset")
    means = train.features.mean(axis=0)
    stds = train.features.std(axis=0)
    divisors = np.where(stds < CONSTANT_STD, 1.0, stds)

    def _transform(ds: DataSet) -> DataSet:
        if ds.dim != train.dim:
            raise DataError(
                f"dimension mismatch: train has {train.dim} features, got {ds.dim}"
            )
        scaled = (ds.features - means) / divisors
        return replace(ds, features=scaled, column_means=means.copy(), column_stds=divisors.copy())

    return _transform(train), [_transform(o) for o in others]


def apply_scaling(features: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    if features.shape[1] != means.shape[0]:
        raise DataError(
            f"dimension mismatch: scaling has {means.shape[0]} columns, data has {features.shape[1]}"
        )
    return (features - means) / stds


def split_folds(data: DataSet, k: int, seed: int) -> FoldPlan:
    """Shuffle rows and assign them round-robin to ``k`` balanced folds."""
    n = data.n
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % k
    return FoldPlan(k=k, assignment=assignment, seed=seed)


def subset(data: DataSet, indices: np.ndarray) -> DataSet:
    """Row subset preserving scaling provenance and label names."""
    idx = np.asarray(indices)
    y = data.labels[idx]
    return DataSet(
        features=data.features[idx],
        labels=y,
        n_pos=int((y > 0).sum()),
        n_neg=int((y < 0).sum()),
        column_means=data.column_means,
        column_stds=data.column_stds,
        label_names=data.label_names,
    )


def sample(data: DataSet, p: float, seed: int) -> DataSet:
    """Draw ``ceil(p*n)`` rows uniformly without replacement.

    If the source contains both classes, the draw has at least two rows and
    one class is absent from it, one uniformly chosen point of the missing
    class replaces one uniformly chosen point of the drawn class.
    """
    if data.n == 0:
        raise DataError("cannot sample from an empty dataset")
    if not 0.0 < p <= 1.0:
        raise ValueError("sample fraction must be in (0, 1]")
    m = math.ceil(p * data.n)
    rng = np.random.default_rng(seed)
    idx = rng.permutation(data.n)[:m]
    if data.n_pos > 0 and data.n_neg > 0 and m >= 2:
        drawn = data.labels[idx]
        missing = 0
        if not (drawn > 0).any():
            missing = 1
        elif not (drawn < 0).any():
            missing = -1
        if missing:
            pool = np.flatnonzero(data.labels == missing)
            idx[rng.integers(m)] = rng.choice(pool)
    return subset(data, idx)


# ---------------------------------------------------------------------------
# Text round-trips

FLOAT_FMT = "{:.17g}"


def write_sparse_text(data: DataSet, f) -> None:
    """Write rows as ``<label> 1:v1 2:v2 ...`` with all indices explicit.

    17 significant digits make the feature round-trip bit-exact; explicit
    zeros keep the column count stable through a reparse.
    """
    pos_name, neg_name = data.label_names
    for i in range(data.n):
        label = pos_name if data.labels[i] > 0 else neg_name
        cells = " ".join(
            f"{j + 1}:{FLOAT_FMT.format(v)}" for j, v in enumerate(data.features[i])
        )
        f.write(f"{label} {cells}\n")


def write_csv(data: DataSet, f, *, label_first: bool = True) -> None:
    """Write rows as comma-separated values with the label in column 0."""
    pos_name, neg_name = data.label_names
    for i in range(data.n):
        label = pos_name if data.labels[i] > 0 else neg_name
        feats = [FLOAT_FMT.format(v) for v in data.features[i]]
        cells = [label] + feats if label_first else feats + [label]
        f.write(",".join(cells) + "\n")


def save_scaling(f, means: np.ndarray, stds: np.ndarray) -> None:
    """Two-line text export of scaling statistics (means, then divisors)."""
    f.write(" ".join(FLOAT_FMT.format(v) for v in means) + "\n")
    f.write(" ".join(FLOAT_FMT.format(v) for v in stds) + "\n")


def load_scaling(f) -> tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if len(lines) != 2:
        raise DataError("scaling file must contain exactly two lines")
    means = np.array([float(v) for v in lines[0].split()], dtype=np.float64)
    stds = np.array([float(v) for v in lines[1].split()], dtype=np.float64)
    if means.shape != stds.shape:
        raise DataError("scaling file lines have different lengths")
    if (stds <= 0).any():
        raise DataError("scaling divisors must be positive")
    return means, stds
