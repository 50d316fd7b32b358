"""Bi-objective CFST design search: maximize fire resistance, minimize volume.

The search runs over a diameter lattice that deliberately ignores the section
catalog, mirroring how continuous-minded optimization produces diameters no
mill rolls.  Front entries are annotated with catalog feasibility so the
optimal-yet-unbuildable condition is detectable, and snapping maps any design
to the nearest manufactured section.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources as importlib_resources
from pathlib import Path

import numpy as np

from .abduction import GridConstraint
from .errors import DomainError, ValidationError
from .formulas import Asce29Input, asce29_fire_resistance, cfst_volume
from .rng import Rng

SHAPES = ("circular", "square")
FILLINGS = ("plain", "fiber", "bar-reinforced")
AGGREGATES = ("silicate", "carbonate")


def load_f_factors(path: str | Path | None = None) -> dict:
    if path is not None:
        return json.loads(Path(path).read_text())
    ref = importlib_resources.files("strucml.resources").joinpath("f_factors.json")
    return json.loads(ref.read_text())


def load_fr_minimums(path: str | Path | None = None) -> dict:
    if path is not None:
        return json.loads(Path(path).read_text())
    ref = importlib_resources.files("strucml.resources").joinpath("fr_minimums.json")
    return json.loads(ref.read_text())


@dataclass(frozen=True)
class CfstDesign:
    """One concrete-filled steel tube design candidate."""

    fc: float  # MPa
    diameter: float  # mm
    length: float  # mm
    kl: float  # effective length, mm
    shape: str = "circular"
    filling: str = "plain"
    aggregate: str = "silicate"
    steel_pct_class: str = "<3%"
    cover_class: str = "<25mm"
    f_factor: float = 0.07
    c_load: float = 1000.0  # kN

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValidationError(f"unknown shape {self.shape!r}")
        if self.filling not in FILLINGS:
            raise ValidationError(f"unknown filling {self.filling!r}")
        if self.aggregate not in AGGREGATES:
            raise ValidationError(f"unknown aggregate {self.aggregate!r}")
        for field_name in ("fc", "diameter", "length", "kl", "c_load"):
            if getattr(self, field_name) <= 0:
                raise ValidationError(f"{field_name} must be positive")

    def to_json_dict(self) -> dict:
        return {
            "fc_mpa": self.fc,
            "d_mm": self.diameter,
            "length_mm": self.length,
            "kl_mm": self.kl,
            "shape": self.shape,
            "filling": self.filling,
            "aggregate": self.aggregate,
            "steel_pct_class": self.steel_pct_class,
            "cover_class": self.cover_class,
            "f_factor": self.f_factor,
            "load_kn": self.c_load,
        }


@dataclass(frozen=True)
class CatalogSection:
    designation: str
    diameter: float
    thicknesses: tuple[float, ...]


@dataclass(frozen=True)
class SectionCatalog:
    """Commercially manufactured sections; membership = constructability."""

    entries: tuple[CatalogSection, ...]

    def __post_init__(self):
        diameters = [e.diameter for e in self.entries]
        if sorted(set(diameters)) != diameters:
            raise ValidationError("catalog diameters must be strictly increasing")
        names = [e.designation for e in self.entries]
        if len(set(names)) != len(names):
            raise ValidationError("catalog designations must be unique")

    @property
    def diameters(self) -> np.ndarray:
        return np.array([e.diameter for e in self.entries])

    def contains_diameter(self, d: float) -> bool:
        return any(e.diameter == d for e in self.entries)

    def nearest(self, d: float) -> CatalogSection:
        """Nearest diameter; equidistant ties take the larger (conservative)."""
        if not self.entries:
            raise DomainError("catalog is empty")
        gaps = np.abs(self.diameters - d)
        best = float(gaps.min())
        candidates = [e for e, g in zip(self.entries, gaps) if g == best]
        return max(candidates, key=lambda e: e.diameter)


def load_catalog(path: str | Path | None = None) -> SectionCatalog:
    if path is not None:
        doc = json.loads(Path(path).read_text())
    else:
        ref = importlib_resources.files("strucml.resources").joinpath(
            "section_catalog.json"
        )
        doc = json.loads(ref.read_text())
    return SectionCatalog(
        entries=tuple(
            CatalogSection(
                designation=e["designation"],
                diameter=float(e["diameter"]),
                thicknesses=tuple(e.get("thicknesses", ())),
            )
            for e in doc["entries"]
        )
    )


# ---------------------------------------------------------------------------
# Evaluation and constraints


def evaluate_design(design: CfstDesign) -> dict:
    """Fire resistance (minutes) and material volume (mm^3).

    Square sections share the circular volume model; their volume is a
    documented approximation since the search optimum of record is circular.
    """
    r = asce29_fire_resistance(
        Asce29Input(
            f_factor=design.f_factor,
            fc=design.fc,
            kl=design.kl,
            diameter=design.diameter,
            c_load=design.c_load,
        )
    )
    return {"r": r, "volume": cfst_volume(design.diameter, design.length)}


@dataclass(frozen=True)
class ConstraintCheck:
    passed: bool
    r: float
    r_limit: float
    filling_minimum: float
    binding_threshold: float

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "r": self.r,
            "r_limit": self.r_limit,
            "filling_minimum": self.filling_minimum,
            "binding_threshold": self.binding_threshold,
        }


def check_constraints(
    design: CfstDesign, r: float, r_limit: float, fr_minimums: dict | None = None
) -> ConstraintCheck:
    """r must meet both the requested limit and the per-filling minimum."""
    if r_limit <= 0:
        raise DomainError("r_limit must be positive")
    minimums = fr_minimums if fr_minimums is not None else load_fr_minimums()
    filling_min = float(minimums.get(design.filling, 0.0))
    threshold = max(r_limit, filling_min)
    return ConstraintCheck(
        passed=r >= threshold,
        r=r,
        r_limit=r_limit,
        filling_minimum=filling_min,
        binding_threshold=threshold,
    )


def pareto_front(points: list[dict]) -> list[int]:
    """Indices of non-dominated points under (maximize r, minimize volume).

    Output sorted by volume ascending.  Exact duplicates are all retained
    (they do not strictly dominate each other).
    """
    if not points:
        raise DomainError("pareto_front requires at least one point")
    r = np.array([p["r"] for p in points], dtype=np.float64)
    v = np.array([p["volume"] for p in points], dtype=np.float64)
    order = sorted(range(len(points)), key=lambda i: (v[i], -r[i], i))
    front = []
    best_r = -np.inf
    best_v = np.nan
    for i in order:
        if r[i] > best_r:
            best_r, best_v = r[i], v[i]
            front.append(i)
        elif r[i] == best_r and v[i] == best_v:
            front.append(i)  # duplicate of a front point
    return front


@dataclass(frozen=True)
class OptResult:
    design: CfstDesign
    r: float
    volume: float
    constraints_passed: bool
    catalog_feasible: bool
    nearest_section: str
    nearest_diameter: float

    def to_json_dict(self) -> dict:
        return {
            "design": self.design.to_json_dict(),
            "r": self.r,
            "volume": self.volume,
            "constraints_passed": self.constraints_passed,
            "catalog_feasible": self.catalog_feasible,
            "nearest_section": self.nearest_section,
            "nearest_diameter": self.nearest_diameter,
        }


def load_design_space(path: str | Path | None = None) -> dict:
    if path is not None:
        return json.loads(Path(path).read_text())
    ref = importlib_resources.files("strucml.resources").joinpath("design_space.json")
    return json.loads(ref.read_text())


def _space_rules(space: dict) -> dict[str, GridConstraint]:
    return {
        key: GridConstraint.from_dict(space[key])
        for key in ("fc_mpa", "d_mm", "length_mm", "load_kn", "k_factors")
    }


def sample_design(space: dict, rng: Rng, f_factors: dict) -> CfstDesign:
    """One design candidate; consumes a fixed number of draws (prefix-stable)."""
    rules = _space_rules(space)
    u = rng.random(9)

    def pick_rule(key, uu):
        rule = rules[key]
        idx = min(int(uu * rule.n_points), rule.n_points - 1)
        return rule.value_at(idx)

    def pick_list(items, uu):
        return items[min(int(uu * len(items)), len(items) - 1)]

    fc = pick_rule("fc_mpa", u[0])
    d = pick_rule("d_mm", u[1])
    length = pick_rule("length_mm", u[2])
    load = pick_rule("load_kn", u[3])
    k_factor = pick_rule("k_factors", u[4])
    shape = pick_list(space["shapes"], u[5])
    filling = pick_list(space["fillings"], u[6])
    aggregate = pick_list(space["aggregates"], u[7])
    steel = pick_list(space["steel_pct_classes"], u[8])
    cover = space["cover_classes"][0]
    return CfstDesign(
        fc=fc,
        diameter=d,
        length=length,
        kl=k_factor * length,
        shape=shape,
        filling=filling,
        aggregate=aggregate,
        steel_pct_class=steel,
        cover_class=cover,
        f_factor=float(f_factors[filling][aggregate]),
        c_load=load,
    )


def optimize_design(
    space: dict,
    catalog: SectionCatalog,
    r_limit: float = 120.0,
    budget: int = 10000,
    seed: int = 0,
    fr_minimums: dict | None = None,
    f_factors: dict | None = None,
) -> list[OptResult]:
    """Seeded random search, constraint filter, Pareto reduction, annotation.

    The sampler is prefix-stable in the budget: a larger run with the same
    seed evaluates a superset of candidates, so its front weakly dominates.
    Returns the annotated front sorted by volume ascending; empty when no
    candidate satisfies the constraints.
    """
    if budget < 100:
        raise DomainError("budget must be at least 100 evaluations")
    factors = f_factors if f_factors is not None else load_f_factors()
    minimums = fr_minimums if fr_minimums is not None else load_fr_minimums()
    rng = Rng(seed).derive("design-search")
    survivors = []
    points = []
    for _ in range(budget):
        design = sample_design(space, rng, factors)
        out = evaluate_design(design)
        check = check_constraints(design, out["r"], r_limit, fr_minimums=minimums)
        if check.passed:
            survivors.append(design)
            points.append(out)
    if not survivors:
        return []
    front = pareto_front(points)
    results = []
    for i in front:
        design = survivors[i]
        nearest = catalog.nearest(design.diameter)
        results.append(
            OptResult(
                design=design,
                r=points[i]["r"],
                volume=points[i]["volume"],
                constraints_passed=True,
                catalog_feasible=catalog.contains_diameter(design.diameter),
                nearest_section=nearest.designation,
                nearest_diameter=nearest.diameter,
            )
        )
    return results


def top_r_entry(front: list[OptResult]) -> OptResult:
    """The front member with maximal fire resistance (ties: lower volume)."""
    if not front:
        raise DomainError("empty front")
    return max(front, key=lambda e: (e.r, -e.volume))


def paradox_detected(front: list[OptResult]) -> bool:
    """True when the best-R front member is not a manufacturable section."""
    return bool(front) and not top_r_entry(front).catalog_feasible


def snap_to_catalog(design: CfstDesign, catalog: SectionCatalog) -> dict:
    """Replace the diameter with the nearest catalog section; report deltas."""
    before = evaluate_design(design)
    section = catalog.nearest(design.diameter)
    snapped = replace(design, diameter=section.diameter)
    after = evaluate_design(snapped)
    return {
        "design": snapped,
        "section": section.designation,
        "diameter_before": design.diameter,
        "diameter_after": section.diameter,
        "r_before": before["r"],
        "r_after": after["r"],
        "volume_before": before["volume"],
        "volume_after": after["volume"],
    }
