"""Dataset ingestion, schemas, health gates, association matrices, splitting.

Datasets are immutable numeric tables with named, unit-carrying feature
columns and a single target column.  All shuffling is driven by the shared
splitmix generator so splits and folds are pure functions of (inputs, seed).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, SchemaError, ValidationError
from .rng import Rng

FEATURE_KINDS = ("continuous", "discrete-grid", "categorical-coded")


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    unit: str = ""
    kind: str = "continuous"
    codes: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.name:
            raise ValidationError("feature name must be non-empty")
        if self.kind not in FEATURE_KINDS:
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        if self.kind == "categorical-coded" and not self.codes:
            raise ValidationError(
                f"categorical-coded feature {self.name!r} must enumerate its codes"
            )


@dataclass(frozen=True)
class Dataset:
    """n x (p+1) numeric table: feature matrix X plus target vector y."""

    name: str
    features: tuple[FeatureSpec, ...]
    target: FeatureSpec
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if X.ndim != 2 or y.ndim != 1:
            raise ValidationError("X must be 2-d and y 1-d")
        if X.shape[0] != y.shape[0]:
            raise ValidationError("X and y row counts differ")
        if X.shape[1] != len(self.features):
            raise ValidationError("X column count does not match feature specs")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValidationError("feature names must be unique")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValidationError("all values must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "features", tuple(self.features))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def rows(self) -> np.ndarray:
        """The raw n x (p+1) table, target appended as the final column."""
        return np.column_stack([self.X, self.y])

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise SchemaError(f"dataset has no feature named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        if name == self.target.name:
            return self.y
        return self.X[:, self.feature_index(name)]

    def subset(self, mask_or_indices, name: str | None = None) -> "Dataset":
        idx = np.asarray(mask_or_indices)
        return Dataset(
            name=name or self.name,
            features=self.features,
            target=self.target,
            X=self.X[idx],
            y=self.y[idx],
        )

    def select_features(self, names: list[str], name: str | None = None) -> "Dataset":
        cols = [self.feature_index(n) for n in names]
        return Dataset(
            name=name or self.name,
            features=tuple(self.features[c] for c in cols),
            target=self.target,
            X=self.X[:, cols],
            y=self.y,
        )


@dataclass(frozen=True)
class HealthReport:
    """Observations-per-feature gates for dataset adequacy."""

    n_rows: int
    n_features: int
    obs_per_feature: float
    pass_vansmeden_10: bool
    pass_riley_23: bool
    pass_ratio_3: bool
    pass_ratio_5: bool

    @property
    def all_pass(self) -> bool:
        return (
            self.pass_vansmeden_10
            and self.pass_riley_23
            and self.pass_ratio_3
            and self.pass_ratio_5
        )

    def to_json_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_features": self.n_features,
            "obs_per_feature": self.obs_per_feature,
            "pass_vansmeden_10": self.pass_vansmeden_10,
            "pass_riley_23": self.pass_riley_23,
            "pass_ratio_3": self.pass_ratio_3,
            "pass_ratio_5": self.pass_ratio_5,
            "all_pass": self.all_pass,
        }


@dataclass(frozen=True)
class AssociationReport:
    """Pearson/Spearman/mutual-information matrices over features + target.

    Matrices are (p+1) x (p+1) with the target as the final row/column.
    Constant columns report 0 association and are listed in degenerate_columns.
    """

    variable_names: tuple[str, ...]
    pearson: np.ndarray
    spearman: np.ndarray
    mutual_info: np.ndarray
    degenerate_columns: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "variables": list(self.variable_names),
            "pearson": self.pearson.tolist(),
            "spearman": self.spearman.tolist(),
            "mutual_info": self.mutual_info.tolist(),
            "degenerate_columns": list(self.degenerate_columns),
        }


@dataclass(frozen=True)
class SplitIndices:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "train": list(self.train),
            "validation": list(self.validation),
            "test": list(self.test),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of_row: tuple[int, ...]
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        arr = np.asarray(self.fold_of_row)
        return np.flatnonzero(arr == fold)


DEFAULT_SPLIT_RATIOS = (0.70, 0.15, 0.15)


# ---------------------------------------------------------------------------
# Canonical schemas


def _schema_from_dict(doc: dict) -> tuple[tuple[FeatureSpec, ...], FeatureSpec]:
    def spec(d):
        return FeatureSpec(
            name=d["name"],
            unit=d.get("unit", ""),
            kind=d.get("kind", "continuous"),
            codes=tuple(d["codes"]) if d.get("codes") else None,
        )

    features = tuple(spec(d) for d in doc["features"])
    return features, spec(doc["target"])


def load_schema(name_or_path: str) -> tuple[tuple[FeatureSpec, ...], FeatureSpec]:
    """Load a canonical schema by name, or any schema from a JSON file path."""
    candidate = Path(name_or_path)
    if candidate.suffix == ".json" and candidate.exists():
        doc = json.loads(candidate.read_text())
    else:
        ref = importlib_resources.files("strucml.resources").joinpath(
            f"{name_or_path}_schema.json"
        )
        if not ref.is_file():
            raise SchemaError(f"unknown schema {name_or_path!r}")
        doc = json.loads(ref.read_text())
    return _schema_from_dict(doc)


# ---------------------------------------------------------------------------
# Operations


def load_dataset(
    path: str | Path,
    features: tuple[FeatureSpec, ...],
    target: FeatureSpec,
    name: str | None = None,
) -> Dataset:
    """Read a comma-delimited file with a header row matching the schema.

    Columns may appear in any order; they are reordered to schema order.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"file not found: {path}")
    wanted = [f.name for f in features] + [target.name]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        extra = [c for c in header if c not in wanted]
        if extra:
            raise SchemaError(f"{path}: unexpected column {extra[0]!r}")
        order = [header.index(c) for c in wanted]
        table = []
        for rownum, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}",
                    row=rownum,
                )
            values = []
            for col in order:
                cell = row[col].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r} at row {rownum}, "
                        f"column {header[col]!r}",
                        row=rownum,
                        column=header[col],
                    ) from None
                if not math.isfinite(v):
                    raise ValidationError(
                        f"{path}: non-finite value at row {rownum}, column {header[col]!r}"
                    )
                values.append(v)
            table.append(values)
    arr = (
        np.asarray(table, dtype=np.float64)
        if table
        else np.empty((0, len(wanted)), dtype=np.float64)
    )
    return Dataset(
        name=name or path.stem,
        features=features,
        target=target,
        X=arr[:, : len(features)],
        y=arr[:, len(features)],
    )


def save_dataset(d: Dataset, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.feature_names + [d.target.name])
        for xrow, yval in zip(d.X, d.y):
            writer.writerow([repr(float(v)) for v in xrow] + [repr(float(yval))])


def health_check(d: Dataset) -> HealthReport:
    """Observations-per-feature report against the 10/23 and 3/5 thresholds."""
    p = d.n_features
    if p < 1:
        raise DomainError("health check requires at least one feature")
    ratio = d.n_rows / p
    return HealthReport(
        n_rows=d.n_rows,
        n_features=p,
        obs_per_feature=ratio,
        pass_vansmeden_10=ratio >= 10,
        pass_riley_23=ratio >= 23,
        pass_ratio_3=ratio >= 3,
        pass_ratio_5=ratio >= 5,
    )


def _rank_average_ties(x: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based), ties get the average of their positions."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson_matrix(columns: np.ndarray, constant: np.ndarray) -> np.ndarray:
    m = columns.shape[1]
    centered = columns - columns.mean(axis=0)
    norms = np.sqrt(np.sum(centered**2, axis=0))
    safe = np.where(constant, 1.0, norms)
    unit = centered / safe
    corr = unit.T @ unit
    corr = np.clip(corr, -1.0, 1.0)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr


def _equal_frequency_bins(x: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin labels from quantile edges; duplicate edges collapse bins."""
    edges = np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1])
    edges = np.unique(edges)
    return np.searchsorted(edges, x, side="right")


def _mutual_info_matrix(columns: np.ndarray) -> np.ndarray:
    n, m = columns.shape
    n_bins = min(16, max(1, math.isqrt(n - 1) + 1))  # ceil(sqrt(n)), capped
    labels = [_equal_frequency_bins(columns[:, j], n_bins) for j in range(m)]
    mi = np.zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            li, lj = labels[i], labels[j]
            ki, kj = li.max() + 1, lj.max() + 1
            joint = np.zeros((ki, kj))
            np.add.at(joint, (li, lj), 1.0)
            joint /= n
            pi = joint.sum(axis=1, keepdims=True)
            pj = joint.sum(axis=0, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = joint * np.log(joint / (pi * pj))
            value = float(np.nansum(terms))
            mi[i, j] = mi[j, i] = max(0.0, value)
    return mi


def association_matrices(d: Dataset) -> AssociationReport:
    """Pearson, Spearman, and mutual-information matrices (target appended)."""
    if d.n_rows < 3:
        raise DomainError("association matrices need at least 3 rows")
    columns = np.column_stack([d.X, d.y])
    names = tuple(d.feature_names + [d.target.name])
    constant = np.array([np.all(c == c[0]) for c in columns.T])
    pearson = _pearson_matrix(columns, constant)
    ranked = np.column_stack([_rank_average_ties(c) for c in columns.T])
    spearman = _pearson_matrix(ranked, constant)
    mutual = _mutual_info_matrix(columns)
    degenerate = tuple(n for n, c in zip(names, constant) if c)
    return AssociationReport(
        variable_names=names,
        pearson=pearson,
        spearman=spearman,
        mutual_info=mutual,
        degenerate_columns=degenerate,
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_dataset(d: Dataset, ratios=DEFAULT_SPLIT_RATIOS, seed: int = 42) -> SplitIndices:
    """Deterministic shuffled three-way split; remainder rows go to train."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise DomainError("need three positive split ratios")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DomainError(f"split ratios must sum to 1, got {sum(ratios)}")
    n = d.n_rows
    n_val = _round_half_up(n * ratios[1])
    n_test = _round_half_up(n * ratios[2])
    n_train = n - n_val - n_test
    if n >= 3 and min(n_train, n_val, n_test) == 0:
        raise DomainError(f"split of {n} rows with ratios {ratios} leaves an empty set")
    if n_train < 0:
        raise DomainError("rounding produced a negative train share")
    perm = Rng(seed).permutation(n)
    return SplitIndices(
        train=tuple(int(i) for i in perm[:n_train]),
        validation=tuple(int(i) for i in perm[n_train : n_train + n_val]),
        test=tuple(int(i) for i in perm[n_train + n_val :]),
        seed=seed,
    )


def kfold_indices(n: int, k: int, seed: int = 42) -> FoldAssignment:
    """Shuffled k-fold assignment; fold sizes differ by at most one."""
    if k < 2:
        raise DomainError("k must be at least 2")
    if k > n:
        raise DomainError(f"k={k} exceeds the number of rows ({n})")
    perm = Rng(seed).permutation(n)
    fold_of_row = np.empty(n, dtype=np.int64)
    base, extra = divmod(n, k)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        fold_of_row[perm[start : start + size]] = fold
        start += size
    return FoldAssignment(k=k, fold_of_row=tuple(int(f) for f in fold_of_row), seed=seed)
