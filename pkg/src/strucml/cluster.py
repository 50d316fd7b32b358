"""K-means hypothesis generation: clustering, k selection, cluster profiles,
and centroid-perturbation sampling of new design configurations.

Features are z-scored before clustering so no single unit system dominates
the distance metric; profiles and perturbations are reported in original
units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DomainError, ValidationError
from .rng import Rng

_MAX_LLOYD_ITERATIONS = 300
_RESTARTS = 10


@dataclass(frozen=True)
class Clustering:
    """Converged k-means result in standardized feature space."""

    k: int
    centroids: np.ndarray  # (k, p), standardized space
    labels: np.ndarray  # (n,)
    inertia: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    seed: int

    def centroids_original_units(self) -> np.ndarray:
        return self.centroids * self.feature_std + self.feature_mean

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "inertia": self.inertia,
            "labels": self.labels.tolist(),
            "centroids_standardized": self.centroids.tolist(),
            "centroids_original": self.centroids_original_units().tolist(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ClusterProfile:
    """Per-cluster feature means in original units plus the mean target."""

    cluster: int
    member_count: int
    feature_names: tuple[str, ...]
    feature_means: np.ndarray
    feature_stds: np.ndarray
    mean_target: float

    def to_json_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "member_count": self.member_count,
            "feature_means": {
                n: float(v) for n, v in zip(self.feature_names, self.feature_means)
            },
            "mean_target": self.mean_target,
        }


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (X - mean) / std, mean, std


def _kmeans_pp_init(Z: np.ndarray, k: int, rng: Rng) -> np.ndarray:
    n = Z.shape[0]
    centers = [int(rng.integers(n))]
    d2 = np.sum((Z - Z[centers[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total == 0.0:
            centers.append(int(rng.integers(n)))
        else:
            target = rng.random() * total
            centers.append(int(np.searchsorted(np.cumsum(d2), target)))
        d2 = np.minimum(d2, np.sum((Z - Z[centers[-1]]) ** 2, axis=1))
    return Z[centers].copy()


def _lloyd(Z: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    labels = None
    for _ in range(_MAX_LLOYD_ITERATIONS):
        d2 = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(centroids.shape[0]):
            members = Z[labels == c]
            if members.shape[0]:
                centroids[c] = members.mean(axis=0)
    d2 = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(Z.shape[0]), labels].sum())
    return centroids, labels, inertia


def kmeans(X, k: int, seed: int = 0) -> Clustering:
    """Best of 10 seeded k-means++ runs by inertia; Lloyd to a fixpoint."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 2 <= k <= n:
        raise DomainError(f"k must satisfy 2 <= k <= {n}, got {k}")
    Z, mean, std = _standardize(X)
    base = Rng(seed)
    best = None
    for restart in range(_RESTARTS):
        rng = base.derive(f"kmeans-{restart}")
        centroids, labels, inertia = _lloyd(Z, _kmeans_pp_init(Z, k, rng))
        key = (inertia, restart)
        if best is None or key < best[0]:
            best = (key, centroids, labels, inertia)
    _, centroids, labels, inertia = best
    return Clustering(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        feature_mean=mean,
        feature_std=std,
        seed=seed,
    )


def silhouette(X, labels) -> float:
    """Mean silhouette coefficient over all points, euclidean distance.

    X is standardized internally with the same z-score convention as kmeans.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    Z, _, _ = _standardize(X)
    ids = np.unique(labels)
    if ids.size < 2:
        raise DomainError("silhouette requires at least two clusters")
    for c in ids:
        if not np.any(labels == c):
            raise DomainError(f"cluster {c} is empty")
    n = Z.shape[0]
    dist = np.sqrt(((Z[:, None, :] - Z[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        same = (labels == own) & (np.arange(n) != i)
        if not same.any():
            scores[i] = 0.0  # singleton cluster contributes 0 by convention
            continue
        a = dist[i, same].mean()
        b = min(dist[i, labels == c].mean() for c in ids if c != own)
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def select_k(X, k_min: int = 2, k_max: int = 10, seed: int = 0) -> dict:
    """Pick k with maximal silhouette (ties toward smaller k).

    Returns {"k", "table"} where table rows carry per-k silhouette and
    inertia for elbow inspection.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 2 <= k_min <= k_max <= n - 1:
        raise DomainError("need 2 <= k_min <= k_max <= n - 1")
    table = []
    best_k, best_s = None, -np.inf
    for k in range(k_min, k_max + 1):
        clustering = kmeans(X, k, seed=seed)
        s = silhouette(X, clustering.labels)
        table.append({"k": k, "silhouette": s, "inertia": clustering.inertia})
        if s > best_s + 1e-12:
            best_k, best_s = k, s
    return {"k": best_k, "table": table}


def characterize_clusters(d: Dataset, clustering: Clustering) -> list[ClusterProfile]:
    """Original-unit means per cluster, member counts, and mean target."""
    labels = clustering.labels
    if labels.shape[0] != d.n_rows:
        raise ValidationError("labels do not match the dataset's row count")
    profiles = []
    for c in range(clustering.k):
        members = labels == c
        count = int(members.sum())
        if count:
            means = d.X[members].mean(axis=0)
            stds = d.X[members].std(axis=0)
            target = float(d.y[members].mean())
        else:
            means = np.zeros(d.n_features)
            stds = np.zeros(d.n_features)
            target = float("nan")
        profiles.append(
            ClusterProfile(
                cluster=c,
                member_count=count,
                feature_names=tuple(d.feature_names),
                feature_means=means,
                feature_stds=stds,
                mean_target=target,
            )
        )
    return profiles


def max_deviation_features(d: Dataset, profiles: list[ClusterProfile]) -> dict[str, int]:
    """Per feature, the cluster whose mean deviates most from the global mean."""
    global_mean = d.X.mean(axis=0)
    result = {}
    for j, name in enumerate(d.feature_names):
        gaps = [
            abs(p.feature_means[j] - global_mean[j]) if p.member_count else -1.0
            for p in profiles
        ]
        result[name] = int(np.argmax(gaps))
    return result


def perturb_around_centroid(
    profile: ClusterProfile,
    constraints: dict,
    n: int,
    scale: float = 0.15,
    seed: int = 0,
) -> list[dict]:
    """Sample lattice-valid configurations near a cluster's mean profile.

    Gaussian noise with std = scale * within-cluster feature std is added to
    the cluster mean, then each value is snapped to its grid constraint
    (nearest lattice point or enumerated value, clamped to bounds).
    """
    from .abduction import GridConstraint, snap_value  # local import, no cycle

    if not 0.0 < scale <= 1.0:
        raise DomainError("scale must lie in (0, 1]")
    rules = {
        name: rule if isinstance(rule, GridConstraint) else GridConstraint.from_dict(rule)
        for name, rule in constraints.items()
    }
    for name in profile.feature_names:
        if name not in rules:
            raise ValidationError(f"no grid constraint for feature {name!r}")
    rng = Rng(seed).derive("perturb")
    p = len(profile.feature_names)
    configs = []
    for _ in range(n):
        noise = rng.normal(p)
        config = {}
        for j, name in enumerate(profile.feature_names):
            raw = profile.feature_means[j] + noise[j] * scale * profile.feature_stds[j]
            config[name] = snap_value(rules[name], raw)
        configs.append(config)
    return configs
