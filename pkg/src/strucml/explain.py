"""Model-agnostic attributions and the explanation-disagreement audit.

Two attribution routes are provided: a Shapley-kernel weighted least squares
estimator with the efficiency constraint enforced exactly (base plus the sum
of attributions always equals the prediction), and a local distance-weighted
linear surrogate.  Normalized attributions from both routes feed the
sign-disagreement diagnostic and the physics-consistency audit.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources as importlib_resources

import numpy as np

from .errors import DomainError, ValidationError
from .rng import Rng
from .surrogate import Attribution, TrainedModel

_MAX_BACKGROUND = 64


@dataclass(frozen=True)
class ExplainConfig:
    """Shared settings for both attribution routes.

    background rows provide the reference distribution for masked features
    and the deviation origin for local-surrogate attributions.
    """

    background: np.ndarray
    n_coalitions: int = 0  # 0 = enumerate up to 2048, else sample that many
    lime_n_samples: int = 0  # 0 = max(10 p, 1000)
    lime_kernel_width: float = 0.0  # 0 = 0.75 * sqrt(p)
    seed: int = 0

    def __post_init__(self):
        bg = np.asarray(self.background, dtype=np.float64)
        if bg.ndim != 2 or bg.shape[0] == 0:
            raise ValidationError("background must be a non-empty 2-d row sample")
        object.__setattr__(self, "background", bg)

    def resolved_background(self) -> np.ndarray:
        """At most 64 rows, evenly spaced; deterministic."""
        bg = self.background
        if bg.shape[0] <= _MAX_BACKGROUND:
            return bg
        pick = np.linspace(0, bg.shape[0] - 1, _MAX_BACKGROUND).round().astype(int)
        return bg[np.unique(pick)]

    def resolved_coalitions(self, p: int) -> int:
        if self.n_coalitions:
            if self.n_coalitions < p + 2:
                raise ValidationError("n_coalitions must be at least p + 2")
            return self.n_coalitions
        return 2048

    def resolved_lime_samples(self, p: int) -> int:
        n = self.lime_n_samples or max(10 * p, 1000)
        if n < 10 * p:
            raise ValidationError("lime_n_samples must be at least 10 * p")
        return n

    def resolved_width(self, p: int) -> float:
        return self.lime_kernel_width or 0.75 * math.sqrt(p)


def _kernel_size_mass(p: int) -> np.ndarray:
    """Total Shapley-kernel mass per coalition size s = 1 .. p-1."""
    s = np.arange(1, p)
    return (p - 1) / (s * (p - s))


def _coalition_rows(model, x, bg, masks):
    """Mean model output over the background with masked features set to x."""
    b = bg.shape[0]
    tiled = np.tile(bg, (len(masks), 1))
    for i, mask in enumerate(masks):
        block = tiled[i * b : (i + 1) * b]
        block[:, mask] = x[mask]
    preds = model.predict(tiled)
    return preds.reshape(len(masks), b).mean(axis=1)


def kernel_shap(model: TrainedModel, x, cfg: ExplainConfig) -> Attribution:
    """Shapley-kernel WLS attribution with the efficiency constraint exact.

    The empty and full coalitions are folded into the constraint itself
    (base value and total attribution respectively), so local accuracy
    base + sum(phi) = f(x) holds to solver precision.  When all 2^p - 2
    proper coalitions fit the budget they are enumerated with exact kernel
    weights; otherwise singleton and complement coalitions are always
    included and the remainder is sampled from the kernel's size mass.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    p = x.size
    if p != model.n_features:
        raise ValidationError("row length does not match the model's feature count")
    bg = cfg.resolved_background()
    if bg.shape[1] != p:
        raise ValidationError("background column count does not match the row")
    base = float(np.mean(model.predict(bg)))
    fx = float(model.predict(x[None, :])[0])

    if p == 1:
        return Attribution(
            feature_names=model.feature_names,
            values=np.array([fx - base]),
            method="shap",
            base_value=base,
        )

    budget = cfg.resolved_coalitions(p)
    total = 2**p - 2
    masks = []
    weights = []
    if total <= budget:
        for size in range(1, p):
            w = (p - 1) / (math.comb(p, size) * size * (p - size))
            for combo in itertools.combinations(range(p), size):
                mask = np.zeros(p, dtype=bool)
                mask[list(combo)] = True
                masks.append(mask)
                weights.append(w)
    else:
        mass = _kernel_size_mass(p)
        for j in range(p):  # all singletons and complements, exact kernel weight
            for size, w in ((1, mass[0] / p), (p - 1, mass[p - 2] / p)):
                mask = np.zeros(p, dtype=bool)
                if size == 1:
                    mask[j] = True
                else:
                    mask[:] = True
                    mask[j] = False
                masks.append(mask)
                weights.append(w)
        rng = Rng(cfg.seed).derive("shap-coalitions")
        sizes = np.arange(2, p - 1)
        if sizes.size:
            block_mass = mass[1:-1] / mass[1:-1].sum()
            cumulative = np.cumsum(block_mass)
            n_fill = budget - len(masks)
            per_draw = float(mass[1:-1].sum()) / max(n_fill, 1)
            for _ in range(n_fill):
                s = int(sizes[np.searchsorted(cumulative, rng.random())])
                mask = np.zeros(p, dtype=bool)
                mask[rng.choice(p, s, replace=False)] = True
                masks.append(mask)
                weights.append(per_draw)

    f_vals = _coalition_rows(model, x, bg, masks)
    Zm = np.asarray(masks, dtype=np.float64)
    w = np.asarray(weights)

    # Eliminate phi_p via the efficiency constraint, then weighted lstsq.
    delta = fx - base
    y = f_vals - base - Zm[:, -1] * delta
    A = Zm[:, :-1] - Zm[:, -1:][:, [0] * (p - 1)]
    sw = np.sqrt(w)
    sol, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    phi = np.empty(p)
    phi[:-1] = sol
    phi[-1] = delta - sol.sum()
    return Attribution(
        feature_names=model.feature_names,
        values=phi,
        method="shap",
        base_value=base,
    )


def lime_explain(model: TrainedModel, x, cfg: ExplainConfig) -> Attribution:
    """Local linear surrogate fitted on gaussian perturbations around x.

    Perturbation scale per feature is the model's training standard
    deviation; sample weights use a gaussian kernel on standardized
    distance.  The attribution for feature i is coefficient_i times the
    deviation of x_i from the background mean.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    p = x.size
    if p != model.n_features:
        raise ValidationError("row length does not match the model's feature count")
    n = cfg.resolved_lime_samples(p)
    width = cfg.resolved_width(p)
    rng = Rng(cfg.seed).derive("lime-perturb")
    noise = rng.normal(n * p).reshape(n, p)
    scale = model.scaler.std
    samples = x[None, :] + noise * scale[None, :]
    preds = model.predict(samples)

    z_dist = np.sqrt(np.sum(noise**2, axis=1))
    w = np.exp(-(z_dist**2) / (2.0 * width**2))
    design = np.column_stack([np.ones(n), samples])
    sw = np.sqrt(w)
    beta, _, rank, _ = np.linalg.lstsq(design * sw[:, None], preds * sw, rcond=None)
    flags = ()
    if rank < p + 1:
        gram = (design * w[:, None]).T @ design + 1e-6 * np.eye(p + 1)
        beta = np.linalg.solve(gram, (design * w[:, None]).T @ preds)
        flags = ("ridge-fallback",)
    coefs = beta[1:]
    bg_mean = cfg.resolved_background().mean(axis=0)
    return Attribution(
        feature_names=model.feature_names,
        values=coefs * (x - bg_mean),
        method="lime",
        flags=flags,
    )


def normalize_attribution(a: Attribution) -> Attribution:
    """Scale by the max absolute entry; result in [-1, 1] with one entry at 1."""
    peak = float(np.max(np.abs(a.values)))
    if peak == 0.0:
        raise DomainError("cannot normalize an all-zero attribution")
    return Attribution(
        feature_names=a.feature_names,
        values=a.values / peak,
        method=a.method,
        base_value=None,
        flags=a.flags + ("normalized",),
    )


@dataclass(frozen=True)
class FeatureDisagreement:
    feature: str
    shap_norm: float
    lime_norm: float
    opposed: bool


@dataclass(frozen=True)
class DisagreementReport:
    """Count of features whose two attributions carry opposite signs."""

    per_feature: tuple[FeatureDisagreement, ...]
    count: int
    epsilon: float

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "count": self.count,
            "per_feature": [
                {
                    "feature": f.feature,
                    "shap_norm": f.shap_norm,
                    "lime_norm": f.lime_norm,
                    "opposed": f.opposed,
                }
                for f in self.per_feature
            ],
        }


def _check_normalized(a: Attribution, label: str) -> None:
    peak = float(np.max(np.abs(a.values)))
    if abs(peak - 1.0) > 1e-9:
        raise ValidationError(f"{label} attribution is not normalized (max |v| = {peak})")


def rashomon_disagreement(
    shap_n: Attribution, lime_n: Attribution, epsilon: float = 0.05
) -> DisagreementReport:
    """Features where both methods exceed epsilon with opposite signs."""
    if shap_n.feature_names != lime_n.feature_names:
        raise ValidationError("attributions cover different feature lists")
    _check_normalized(shap_n, "first")
    _check_normalized(lime_n, "second")
    entries = []
    for name, s, l in zip(shap_n.feature_names, shap_n.values, lime_n.values):
        opposed = bool(abs(s) > epsilon and abs(l) > epsilon and (s > 0) != (l > 0))
        entries.append(
            FeatureDisagreement(
                feature=name, shap_norm=float(s), lime_norm=float(l), opposed=opposed
            )
        )
    return DisagreementReport(
        per_feature=tuple(entries),
        count=int(sum(e.opposed for e in entries)),
        epsilon=epsilon,
    )


@dataclass(frozen=True)
class PhysicsViolation:
    feature: str
    expected_sign: int
    value: float


def load_physics_expectations(name: str = "rc_fire") -> dict[str, int]:
    ref = importlib_resources.files("strucml.resources").joinpath(
        f"{name}_physics.json"
    )
    if not ref.is_file():
        raise ValidationError(f"no physics expectation table named {name!r}")
    return {k: int(v) for k, v in json.loads(ref.read_text()).items()}


def physics_consistency(
    a: Attribution, expect: dict[str, int], epsilon: float = 0.05
) -> list[PhysicsViolation]:
    """Attributed signs that contradict stated mechanical expectations.

    expect maps feature name to +1 / -1 / 0 (0 = no expectation).  Only
    entries above epsilon in magnitude count as violations.
    """
    _check_normalized(a, "input")
    known = set(a.feature_names)
    for name in expect:
        if name not in known:
            raise ValidationError(f"expectation names unknown feature {name!r}")
    violations = []
    for name, v in zip(a.feature_names, a.values):
        sign = expect.get(name, 0)
        if sign == 0 or abs(v) <= epsilon:
            continue
        if (v > 0) != (sign > 0):
            violations.append(
                PhysicsViolation(feature=name, expected_sign=sign, value=float(v))
            )
    return violations
