"""Regression surrogates: decision tree, random forest, k-NN, linear, ridge.

Training always standardizes features with statistics taken at fit time, so
callers never pass pre-scaled data.  Trees split on variance reduction with
midpoint thresholds and deterministic tie-breaks (lowest feature index, then
lowest threshold), which makes split structure testable and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, kfold_indices, split_dataset, DEFAULT_SPLIT_RATIOS
from .errors import DomainError, UnsupportedMethodError, ValidationError
from .metrics import MetricReport, metric_report, rmse
from .rng import Rng

MODEL_KINDS = ("tree", "forest", "knn", "linear", "ridge")

_DEFAULT_HYPERPARAMS = {
    "tree": {"max_depth": 0, "min_leaf": 2},  # max_depth 0 = unlimited
    "forest": {
        "n_trees": 200,
        "features_per_split": 0,  # 0 = ceil(p / 3)
        "bootstrap": True,
        "max_depth": 0,
        "min_leaf": 2,
    },
    "knn": {"k": 5},
    "linear": {},
    "ridge": {"lam": 1.0},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}")
        unknown = set(self.hyperparams) - set(_DEFAULT_HYPERPARAMS[self.kind])
        if unknown:
            raise ValidationError(
                f"unknown hyperparams for {self.kind}: {sorted(unknown)}"
            )

    def resolved(self, n_features: int) -> dict:
        hp = dict(_DEFAULT_HYPERPARAMS[self.kind])
        hp.update(self.hyperparams)
        if self.kind == "forest" and hp["features_per_split"] == 0:
            hp["features_per_split"] = max(1, math.ceil(n_features / 3))
        for key in ("n_trees", "min_leaf", "k"):
            if key in hp and hp[key] < 1:
                raise ValidationError(f"{key} must be >= 1")
        if hp.get("max_depth", 0) < 0 or hp.get("lam", 0.0) < 0:
            raise ValidationError("max_depth and lam must be non-negative")
        return hp


@dataclass(frozen=True)
class Attribution:
    """Per-feature signed importance values from one attribution method."""

    feature_names: tuple[str, ...]
    values: np.ndarray
    method: str
    base_value: float | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != len(self.feature_names):
            raise ValidationError("attribution length must equal feature count")
        if not np.all(np.isfinite(v)):
            raise ValidationError("attribution values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "base_value": self.base_value,
            "flags": list(self.flags),
            "features": {
                name: float(v) for name, v in zip(self.feature_names, self.values)
            },
        }


# ---------------------------------------------------------------------------
# Standardization


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray  # zero-variance columns carry divisor 1
    zero_variance: tuple[bool, ...]

    @staticmethod
    def fit(X: np.ndarray) -> "Scaler":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        zero = std == 0.0
        return Scaler(
            mean=mean,
            std=np.where(zero, 1.0, std),
            zero_variance=tuple(bool(z) for z in zero),
        )

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


# ---------------------------------------------------------------------------
# CART trees


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value", "importance")

    def __init__(self, feature, threshold, left, right, value, importance):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.importance = importance  # per-feature summed SSE decrease


def _best_split(Xc: np.ndarray, yv: np.ndarray, min_leaf: int):
    """Best (local feature, threshold, child SSE) by variance reduction.

    Columns are scanned in order and thresholds ascending, so np.argmin's
    first-minimum rule gives the lowest-feature / lowest-threshold tie-break.
    For tie-free columns the scan is invariant to row order; rows tied on a
    split value keep their input order within the tie run.
    """
    m, q = Xc.shape
    if m < 2 * min_leaf:
        return None
    order = np.argsort(Xc, axis=0, kind="stable")
    xs = np.take_along_axis(Xc, order, axis=0)
    ys = yv[order]
    csum = np.cumsum(ys, axis=0)
    csq = np.cumsum(ys * ys, axis=0)
    nl = np.arange(1, m, dtype=np.float64)[:, None]
    nr = m - nl
    ls, lq = csum[:-1], csq[:-1]
    sse = (lq - ls * ls / nl) + ((csq[-1] - lq) - (csum[-1] - ls) ** 2 / nr)
    valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    sse = np.where(valid, sse, np.inf)
    flat = sse.T.ravel()
    best = int(np.argmin(flat))
    if not np.isfinite(flat[best]):
        return None
    j, pos = divmod(best, m - 1)
    threshold = 0.5 * (xs[pos, j] + xs[pos + 1, j])
    return j, float(threshold), float(flat[best])


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    min_leaf: int,
    max_depth: int,
    rng: Rng | None,
    features_per_split: int,
) -> _Tree:
    p = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []
    importance = np.zeros(p)

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    all_features = np.arange(p)

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        yv = y[idx]
        m = idx.size
        total = float(yv.sum())
        value[node] = total / m
        parent_sse = float(yv @ yv) - total * total / m
        if (
            m < 2 * min_leaf
            or parent_sse <= 1e-12
            or (max_depth and depth >= max_depth)
        ):
            return node
        if features_per_split < p:
            cand = np.sort(rng.choice(p, features_per_split, replace=False))
        else:
            cand = all_features
        found = _best_split(X[idx[:, None], cand[None, :]], yv, min_leaf)
        if found is None:
            return node
        j_local, thr, child_sse = found
        gf = int(cand[j_local])
        importance[gf] += max(0.0, parent_sse - child_sse)
        feature[node] = gf
        threshold[node] = thr
        mask = X[idx, gf] <= thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return _Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
        importance=importance,
    )


def _tree_predict(tree: _Tree, X: np.ndarray) -> np.ndarray:
    idx = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        f = tree.feature[idx]
        rows = np.flatnonzero(f >= 0)
        if rows.size == 0:
            break
        at = idx[rows]
        go_left = X[rows, f[rows]] <= tree.threshold[at]
        idx[rows] = np.where(go_left, tree.left[at], tree.right[at])
    return tree.value[idx]


# ---------------------------------------------------------------------------
# TrainedModel


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    scaler: Scaler
    feature_names: tuple[str, ...]
    y_min: float
    y_max: float
    state: dict

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"expected {self.n_features} feature columns, got {X.shape[1]}"
            )
        Z = self.scaler.transform(X)
        kind = self.spec.kind
        if kind == "tree":
            out = _tree_predict(self.state["tree"], Z)
        elif kind == "forest":
            out = np.zeros(Z.shape[0])
            for tree in self.state["trees"]:
                out += _tree_predict(tree, Z)
            out /= len(self.state["trees"])
        elif kind == "knn":
            out = self._knn_predict(Z)
        else:  # linear / ridge share the affine form
            out = self.state["intercept"] + Z @ self.state["coef"]
        return float(out[0]) if single else out

    def _knn_predict(self, Z: np.ndarray) -> np.ndarray:
        train = self.state["train_X"]
        ytr = self.state["train_y"]
        k = self.state["k"]
        d2 = ((Z[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return ytr[nearest].mean(axis=1)

    @property
    def coefficients(self) -> tuple[float, np.ndarray]:
        """(intercept, slopes) in original feature units; linear/ridge only."""
        if self.spec.kind not in ("linear", "ridge"):
            raise UnsupportedMethodError("coefficients require a linear-family model")
        beta = self.state["coef"]
        slopes = beta / self.scaler.std
        intercept = self.state["intercept"] - float(
            np.sum(beta * self.scaler.mean / self.scaler.std)
        )
        return intercept, slopes

    def to_json_dict(self) -> dict:
        doc = {
            "format_version": 1,
            "spec": {
                "kind": self.spec.kind,
                "hyperparams": self.spec.hyperparams,
                "seed": self.spec.seed,
            },
            "feature_names": list(self.feature_names),
            "scaler": {
                "mean": self.scaler.mean.tolist(),
                "std": self.scaler.std.tolist(),
                "zero_variance": list(self.scaler.zero_variance),
            },
            "y_min": self.y_min,
            "y_max": self.y_max,
        }
        kind = self.spec.kind
        if kind in ("tree", "forest"):
            trees = [self.state["tree"]] if kind == "tree" else self.state["trees"]
            doc["trees"] = [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                    "importance": t.importance.tolist(),
                }
                for t in trees
            ]
        elif kind == "knn":
            doc["knn"] = {
                "k": self.state["k"],
                "train_X": self.state["train_X"].tolist(),
                "train_y": self.state["train_y"].tolist(),
            }
        else:
            doc["coef"] = self.state["coef"].tolist()
            doc["intercept"] = self.state["intercept"]
        return doc

    @staticmethod
    def from_json_dict(doc: dict) -> "TrainedModel":
        if doc.get("format_version") != 1:
            raise ValidationError("unsupported model format version")
        spec = ModelSpec(
            kind=doc["spec"]["kind"],
            hyperparams=doc["spec"]["hyperparams"],
            seed=doc["spec"]["seed"],
        )
        scaler = Scaler(
            mean=np.asarray(doc["scaler"]["mean"]),
            std=np.asarray(doc["scaler"]["std"]),
            zero_variance=tuple(doc["scaler"]["zero_variance"]),
        )
        kind = spec.kind
        if kind in ("tree", "forest"):
            trees = [
                _Tree(
                    feature=np.asarray(t["feature"], dtype=np.int64),
                    threshold=np.asarray(t["threshold"]),
                    left=np.asarray(t["left"], dtype=np.int64),
                    right=np.asarray(t["right"], dtype=np.int64),
                    value=np.asarray(t["value"]),
                    importance=np.asarray(t["importance"]),
                )
                for t in doc["trees"]
            ]
            state = {"tree": trees[0]} if kind == "tree" else {"trees": trees}
        elif kind == "knn":
            state = {
                "k": doc["knn"]["k"],
                "train_X": np.asarray(doc["knn"]["train_X"]),
                "train_y": np.asarray(doc["knn"]["train_y"]),
            }
        else:
            state = {
                "coef": np.asarray(doc["coef"]),
                "intercept": float(doc["intercept"]),
            }
        return TrainedModel(
            spec=spec,
            scaler=scaler,
            feature_names=tuple(doc["feature_names"]),
            y_min=doc["y_min"],
            y_max=doc["y_max"],
            state=state,
        )


# ---------------------------------------------------------------------------
# Fitting


def fit(spec: ModelSpec, X, y, feature_names: tuple[str, ...] | None = None) -> TrainedModel:
    """Fit a surrogate on standardized features; reproducible per spec.seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError("X must be (n, p) and y (n,) with matching n")
    n, p = X.shape
    if n < 2:
        raise DomainError("fitting requires at least 2 rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("training data must be finite")
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(p))
    hp = spec.resolved(p)
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    rng = Rng(spec.seed)
    kind = spec.kind

    if kind == "tree":
        tree = _grow_tree(Z, y, hp["min_leaf"], hp["max_depth"], None, p)
        state = {"tree": tree}
    elif kind == "forest":
        trees = []
        for i in range(hp["n_trees"]):
            tree_rng = rng.derive(f"tree-{i}")
            if hp["bootstrap"]:
                idx = tree_rng.integers(n, n)
                Zi, yi = Z[idx], y[idx]
            else:
                Zi, yi = Z, y
            trees.append(
                _grow_tree(
                    Zi, yi, hp["min_leaf"], hp["max_depth"], tree_rng,
                    min(hp["features_per_split"], p),
                )
            )
        state = {"trees": trees}
    elif kind == "knn":
        if hp["k"] > n:
            raise DomainError(f"k={hp['k']} exceeds the number of training rows")
        state = {"k": hp["k"], "train_X": Z, "train_y": y.copy()}
    elif kind == "linear":
        design = np.column_stack([np.ones(n), Z])
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        state = {"intercept": float(beta[0]), "coef": beta[1:]}
    else:  # ridge
        ybar = float(y.mean())
        gram = Z.T @ Z + hp["lam"] * np.eye(p)
        coef = np.linalg.solve(gram, Z.T @ (y - ybar))
        state = {"intercept": ybar, "coef": coef}

    return TrainedModel(
        spec=spec,
        scaler=scaler,
        feature_names=tuple(feature_names),
        y_min=float(y.min()),
        y_max=float(y.max()),
        state=state,
    )


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)


# ---------------------------------------------------------------------------
# Training protocol


@dataclass(frozen=True)
class CVReport:
    """Per-fold validation metrics plus train/held-out test metrics."""

    k: int
    fold_reports: tuple[MetricReport, ...]
    train: MetricReport
    test: MetricReport
    seed: int

    def _agg(self, attr: str) -> tuple[float, float]:
        vals = np.array([getattr(r, attr) for r in self.fold_reports])
        return float(vals.mean()), float(vals.std(ddof=1) if vals.size > 1 else 0.0)

    @property
    def mean_mae(self):
        return self._agg("mae")[0]

    @property
    def mean_rmse(self):
        return self._agg("rmse")[0]

    @property
    def mean_r2(self):
        return self._agg("r2")[0]

    def to_json_dict(self) -> dict:
        stats = {
            name: {"mean": self._agg(name)[0], "std": self._agg(name)[1]}
            for name in ("mae", "rmse", "r2")
        }
        return {
            "k": self.k,
            "folds": [r.to_json_dict() for r in self.fold_reports],
            "fold_stats": stats,
            "train": self.train.to_json_dict(),
            "test": self.test.to_json_dict(),
            "seed": self.seed,
        }


def train_protocol(
    spec: ModelSpec,
    d: Dataset,
    k: int = 10,
    seed: int = 42,
    ratios=DEFAULT_SPLIT_RATIOS,
) -> tuple[CVReport, TrainedModel]:
    """Three-way split, k-fold CV on train+validation, final held-out test.

    Returns the CV report together with the final model fitted on the pooled
    train+validation rows.
    """
    split = split_dataset(d, ratios=ratios, seed=Rng(seed).derive("split").seed)
    pooled = np.asarray(split.train + split.validation, dtype=np.int64)
    test_idx = np.asarray(split.test, dtype=np.int64)
    folds = kfold_indices(pooled.size, k, seed=Rng(seed).derive("folds").seed)
    fold_of_row = np.asarray(folds.fold_of_row)
    names = tuple(d.feature_names)

    fold_reports = []
    for fold in range(k):
        val_mask = fold_of_row == fold
        tr = pooled[~val_mask]
        va = pooled[val_mask]
        fold_spec = replace(spec, seed=Rng(spec.seed).derive(f"fold-{fold}").seed)
        model = fit(fold_spec, d.X[tr], d.y[tr], feature_names=names)
        fold_reports.append(metric_report(d.y[va], model.predict(d.X[va])))

    final = fit(spec, d.X[pooled], d.y[pooled], feature_names=names)
    train_rep = metric_report(d.y[pooled], final.predict(d.X[pooled]))
    test_rep = metric_report(d.y[test_idx], final.predict(d.X[test_idx]))
    report = CVReport(
        k=k,
        fold_reports=tuple(fold_reports),
        train=train_rep,
        test=test_rep,
        seed=seed,
    )
    return report, final


def cross_validate(
    spec: ModelSpec, d: Dataset, k: int = 10, seed: int = 42, ratios=DEFAULT_SPLIT_RATIOS
) -> CVReport:
    report, _ = train_protocol(spec, d, k=k, seed=seed, ratios=ratios)
    return report


# ---------------------------------------------------------------------------
# Feature importance


def gini_importance(model: TrainedModel) -> Attribution:
    """Summed variance reduction per feature across all splits, normalized."""
    kind = model.spec.kind
    if kind == "tree":
        total = model.state["tree"].importance.copy()
    elif kind == "forest":
        total = np.zeros(model.n_features)
        for tree in model.state["trees"]:
            total += tree.importance
    else:
        raise UnsupportedMethodError("impurity importance requires a tree or forest")
    s = total.sum()
    if s > 0:
        total = total / s
    return Attribution(
        feature_names=model.feature_names, values=total, method="gini"
    )


def permutation_importance(
    model: TrainedModel, X, y, repeats: int = 5, seed: int = 0
) -> Attribution:
    """Mean RMSE increase after shuffling each feature column."""
    if repeats < 1:
        raise DomainError("repeats must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    baseline = rmse(y, model.predict(X))
    rng = Rng(seed)
    deltas = np.zeros(X.shape[1])
    for r in range(repeats):
        for j in range(X.shape[1]):
            perm = rng.permutation(X.shape[0])
            shuffled = X.copy()
            shuffled[:, j] = X[perm, j]
            deltas[j] += rmse(y, model.predict(shuffled)) - baseline
    return Attribution(
        feature_names=model.feature_names,
        values=deltas / repeats,
        method="permutation",
    )
