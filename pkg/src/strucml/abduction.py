"""Constrained design-space search against a target fire resistance.

Configurations are sampled on exact lattices (integer index times increment
plus offset) or from enumerated value sets, so membership checks are exact
integer arithmetic with no floating-point drift.  A trained surrogate screens
the samples; feasible candidates are ranked by a saturating margin score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources as importlib_resources

import numpy as np

from .errors import DomainError, SchemaError, ValidationError
from .rng import Rng
from .surrogate import TrainedModel

DEFAULT_FR_MAX = 300.0  # score saturation ceiling, above common code targets


@dataclass(frozen=True)
class GridConstraint:
    """Either an arithmetic lattice lo + i*step (i = 0..count) or a value set."""

    lo: float = 0.0
    step: float = 1.0
    count: int = 0  # lattice size minus 1
    values: tuple[float, ...] | None = None  # enumerated alternative

    @staticmethod
    def from_range(lo: float, hi: float, step: float) -> "GridConstraint":
        if step <= 0:
            raise ValidationError("increment must be positive")
        if hi < lo:
            raise ValidationError("range upper bound below lower bound")
        count = round((hi - lo) / step)
        if abs(lo + count * step - hi) > 1e-9:
            raise ValidationError(
                f"range ({lo}, {hi}) is not an integer multiple of step {step}"
            )
        return GridConstraint(lo=float(lo), step=float(step), count=int(count))

    @staticmethod
    def from_values(values) -> "GridConstraint":
        vals = tuple(sorted(float(v) for v in values))
        if not vals:
            raise ValidationError("enumerated constraint must be non-empty")
        return GridConstraint(values=vals)

    @staticmethod
    def from_dict(doc: dict) -> "GridConstraint":
        if "values" in doc:
            return GridConstraint.from_values(doc["values"])
        lo, hi = doc["range"]
        return GridConstraint.from_range(lo, hi, doc.get("step", 1))

    @property
    def n_points(self) -> int:
        return len(self.values) if self.values is not None else self.count + 1

    def value_at(self, index: int) -> float:
        if self.values is not None:
            return self.values[index]
        return self.lo + index * self.step

    def is_member(self, v: float) -> bool:
        if self.values is not None:
            return v in self.values
        i = round((v - self.lo) / self.step)
        return 0 <= i <= self.count and abs(self.lo + i * self.step - v) <= 1e-9


def snap_value(rule: GridConstraint, x: float) -> float:
    """Nearest constraint member; lattice values clamp to bounds, enumerated
    ties resolve to the lower value."""
    if rule.values is not None:
        arr = np.asarray(rule.values)
        return float(arr[int(np.argmin(np.abs(arr - x)))])
    i = int(np.clip(round((x - rule.lo) / rule.step), 0, rule.count))
    return rule.lo + i * rule.step


def load_grid(name_or_path: str = "rc_fire") -> dict[str, GridConstraint]:
    """Named packaged grid or a JSON file of per-feature rules."""
    from pathlib import Path

    candidate = Path(name_or_path)
    if candidate.suffix == ".json" and candidate.exists():
        doc = json.loads(candidate.read_text())
    else:
        ref = importlib_resources.files("strucml.resources").joinpath(
            f"{name_or_path}_grid.json"
        )
        if not ref.is_file():
            raise SchemaError(f"unknown grid {name_or_path!r}")
        doc = json.loads(ref.read_text())
    return {name: GridConstraint.from_dict(rule) for name, rule in doc.items()}


def validate_config(config: dict, constraints: dict[str, GridConstraint]) -> bool:
    return all(
        name in config and rule.is_member(config[name])
        for name, rule in constraints.items()
    )


def sample_configs(
    constraints: dict[str, GridConstraint], n: int, seed: int = 0
) -> list[dict]:
    """n lattice-valid configurations; deterministic and prefix-stable.

    Draws are consumed row-major (one block of uniforms per configuration),
    so increasing n with the same seed extends the sample without reshuffling
    earlier entries.  Duplicates are permitted.
    """
    names = list(constraints)
    for name in names:
        if constraints[name].n_points == 0:
            raise DomainError(f"constraint for {name!r} admits no values")
    if n == 0:
        return []
    rng = Rng(seed).derive("configs")
    f = len(names)
    u = rng.random(n * f).reshape(n, f)
    columns = {}
    for j, name in enumerate(names):
        rule = constraints[name]
        idx = np.minimum((u[:, j] * rule.n_points).astype(np.int64), rule.n_points - 1)
        if rule.values is not None:
            columns[name] = np.asarray(rule.values)[idx]
        else:
            columns[name] = rule.lo + idx * rule.step
    return [{name: float(columns[name][i]) for name in names} for i in range(n)]


@dataclass(frozen=True)
class ScreenResult:
    config: dict
    predicted_fr: float
    feasibility: float

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "predicted_fr": self.predicted_fr,
            "feasibility": self.feasibility,
        }


def feasibility_score(
    predicted_fr: float, target_fr: float, fr_max: float = DEFAULT_FR_MAX
) -> float:
    """0 below the target, then a linear margin saturating at fr_max."""
    if fr_max <= target_fr:
        raise DomainError("fr_max must exceed the target fire resistance")
    if predicted_fr < target_fr:
        return 0.0
    return min(1.0, (predicted_fr - target_fr) / (fr_max - target_fr))


def screen_configs(
    model: TrainedModel,
    configs: list[dict],
    target_fr: float,
    fr_max: float = DEFAULT_FR_MAX,
    tie_break: tuple[str, ...] = ("load_kn", "width_mm"),
) -> list[ScreenResult]:
    """Predict and rank every configuration.

    Sorted by feasibility descending; ties prefer lower values of the
    tie_break fields (material economy), then input order.
    """
    if not configs:
        return []
    names = model.feature_names
    for name in names:
        if name not in configs[0]:
            raise SchemaError(f"configs lack model feature {name!r}")
    X = np.array([[c[name] for name in names] for c in configs])
    preds = model.predict(X)
    results = [
        ScreenResult(
            config=c,
            predicted_fr=float(p),
            feasibility=feasibility_score(float(p), target_fr, fr_max),
        )
        for c, p in zip(configs, preds)
    ]
    keys = [k for k in tie_break if k in configs[0]]

    def sort_key(pair):
        i, r = pair
        return (-r.feasibility, *(r.config[k] for k in keys), i)

    return [r for _, r in sorted(enumerate(results), key=sort_key)]


def top_k_report(
    results: list[ScreenResult],
    k: int,
    model: TrainedModel,
    explain_cfg=None,
) -> dict:
    """The k best feasible results, plus an attribution for the top one."""
    if k < 1:
        raise DomainError("k must be at least 1")
    feasible = [r for r in results if r.feasibility > 0.0]
    if not feasible:
        return {"status": "empty-result", "top": [], "rank1_attribution": None}
    top = feasible[:k]
    attribution = None
    if explain_cfg is not None:
        from .explain import kernel_shap

        x = np.array([top[0].config[name] for name in model.feature_names])
        attribution = kernel_shap(model, x, explain_cfg).to_json_dict()
    return {
        "status": "ok",
        "top": [r.to_json_dict() for r in top],
        "rank1_attribution": attribution,
    }
