"""Closed-form engineering formula pack.

Concrete strength laws (the water/cement inverse law plus three fitted
expressions over mix proportions), Euler column buckling, a fitted axial
capacity expression for concrete-filled steel tubes, and the ASCE 29
fire-resistance equation used as the design-optimization objective.

Each formula is evaluated exactly as printed in its source; no re-fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# Empirical (A, B) constants for the strength/water-cement law.  The source
# lists "63.45 and 96.55, and 14 and 8.2" for 7- and 28-day strength without
# an explicit pairing; the default pairing below gives physically plausible
# strengths (~34 MPa at w/c = 0.5 for 28-day).  The alternate pairing is kept
# selectable for completeness.
ABRAM_PAIRINGS = {
    "plausible": {"7-day": (63.45, 14.0), "28-day": (96.55, 8.2)},
    "alternate": {"7-day": (96.55, 14.0), "28-day": (63.45, 8.2)},
}


@dataclass(frozen=True)
class AbramConstants:
    """Empirical constants of the strength/water-cement law, a / b^(w/c)."""

    a: float  # MPa
    b: float  # dimensionless
    age_class: str  # "7-day" | "28-day"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 1:
            raise DomainError("require a > 0 and b > 1")


def abram_constants(age_class: str, pairing: str = "plausible") -> AbramConstants:
    if pairing not in ABRAM_PAIRINGS:
        raise DomainError(f"unknown pairing {pairing!r}")
    table = ABRAM_PAIRINGS[pairing]
    if age_class not in table:
        raise DomainError(f"unknown age class {age_class!r}")
    a, b = table[age_class]
    return AbramConstants(a=a, b=b, age_class=age_class)


def abrams_strength(wc: float, constants: AbramConstants) -> float:
    """Compressive strength in MPa from the water/cement ratio, a / b^wc."""
    if wc < 0:
        raise DomainError("water-cement ratio must be non-negative")
    return constants.a / constants.b**wc


def eq3_strength(wc: float) -> float:
    """Single-feature fitted strength expression, 13.64 / 1.36^wc (MPa)."""
    if wc < 0:
        raise DomainError("water-cement ratio must be non-negative")
    return 13.64 / 1.36**wc


def eq4_strength(slag: float, fly_ash: float, sp: float, wc: float) -> float:
    """Four-feature fitted strength expression (MPa), evaluated as printed.

    |sqrt(slag) - 6.13 * exp(-fly_ash - sqrt(sp)) - 27.56 + 49.73 / sqrt(wc)|
    """
    if slag < 0 or fly_ash < 0 or sp < 0:
        raise DomainError("mix masses must be non-negative")
    if wc <= 0:
        raise DomainError("water-cement ratio must be positive (division by sqrt(wc))")
    return abs(
        math.sqrt(slag)
        - 6.13 * math.exp(-fly_ash - math.sqrt(sp))
        - 27.56
        + 49.73 / math.sqrt(wc)
    )


def eq5_strength(coarse_agg: float, wc: float, age: float, sp: float, slag: float) -> float:
    """Five-feature fitted strength expression (MPa), evaluated as printed.

    |log( coarse_agg * wc^27 / ( age^9 * ( sp + (slag - log(wc)^6)^2 ) ) )|
    with natural logarithms.
    """
    if coarse_agg <= 0:
        raise DomainError("coarse aggregate mass must be positive")
    if wc <= 0:
        raise DomainError("log(wc) requires a positive water-cement ratio")
    if age <= 0:
        raise DomainError("age must be positive")
    if sp < 0 or slag < 0:
        raise DomainError("mix masses must be non-negative")
    inner = sp + (slag - math.log(wc) ** 6) ** 2
    denominator = age**9 * inner
    if denominator == 0.0:
        raise DomainError(
            "zero denominator: sp + (slag - log(wc)^6)^2 vanished"
        )
    argument = coarse_agg * wc**27 / denominator
    if argument <= 0.0:
        raise DomainError("non-positive argument to the outer log")
    return abs(math.log(argument))


@dataclass(frozen=True)
class EulerColumn:
    """Elastic column for critical-load and slenderness evaluation.

    e_modulus in MPa, inertia in mm^4, length in mm; area (mm^2) is only
    needed for the slenderness ratio.
    """

    e_modulus: float
    inertia: float
    k_factor: float
    length: float
    area: float | None = None

    def __post_init__(self):
        if self.e_modulus <= 0 or self.inertia <= 0 or self.length <= 0:
            raise DomainError("E, I, and L must all be positive")
        if self.k_factor <= 0:
            raise DomainError("effective length factor K must be positive")

    @property
    def radius_of_gyration(self) -> float:
        if self.area is None or self.area <= 0:
            raise DomainError("radius of gyration needs a positive cross-section area")
        return math.sqrt(self.inertia / self.area)


def euler_critical_load(col: EulerColumn, as_printed: bool = False) -> float:
    """Critical buckling load in N, pi^2 * E * I / (K * L)^2.

    The source prints the numerator as pi * E * I; that omits the square on
    pi required by the governing differential equation.  The standard pi^2
    form is the default; as_printed=True evaluates the printed variant.
    """
    pi_term = math.pi if as_printed else math.pi**2
    return pi_term * col.e_modulus * col.inertia / (col.k_factor * col.length) ** 2


def slenderness(col: EulerColumn) -> float:
    """Slenderness ratio K*L / r with r = sqrt(I / Ar)."""
    return col.k_factor * col.length / col.radius_of_gyration


@dataclass(frozen=True)
class CfstAxialInput:
    """Circular concrete-filled steel tube under concentric axial load.

    diameter/thickness/eff_length in mm, strengths in MPa.
    """

    diameter: float
    thickness: float
    eff_length: float
    fy: float
    fc: float

    def __post_init__(self):
        for field in ("diameter", "thickness", "eff_length", "fy", "fc"):
            if getattr(self, field) <= 0:
                raise DomainError(f"{field} must be strictly positive")
        if self.thickness >= self.diameter / 2:
            raise DomainError("wall thickness must be less than D/2")


def cfst_axial_capacity(inp: CfstAxialInput) -> float:
    """Fitted axial capacity of a circular CFST column in kN, as printed.

    |0.00439*D*t*fy + 0.000727*t*D^2 + 0.000727*fc*D^2
     - 1.38e-5*D*Le*fc - 3.71e-7*D*t*Le*fy|
    """
    d, t, le, fy, fc = (
        inp.diameter,
        inp.thickness,
        inp.eff_length,
        inp.fy,
        inp.fc,
    )
    return abs(
        0.00439 * d * t * fy
        + 0.000727 * t * d**2
        + 0.000727 * fc * d**2
        - 1.38e-5 * d * le * fc
        - 3.71e-7 * d * t * le * fy
    )


@dataclass(frozen=True)
class Asce29Input:
    """Inputs to the ASCE 29 fire-resistance equation for CFST columns.

    f_factor encodes filling/aggregate type; kl is the effective length in mm;
    c_load is interpreted as the applied load in kN (the source leaves the
    symbol undefined; this follows ASCE 29 usage).
    """

    f_factor: float
    fc: float
    kl: float
    diameter: float
    c_load: float

    def __post_init__(self):
        if self.kl <= 1000:
            raise DomainError("effective length kl must exceed 1000 mm")
        if self.diameter <= 0 or self.c_load <= 0 or self.f_factor < 0:
            raise DomainError("D and C must be positive, f non-negative")


ASCE29_SYMBOLS = {
    "f": "filling/aggregate factor (dimensionless)",
    "fc": "concrete compressive strength (MPa)",
    "kl": "effective column length (mm)",
    "D": "outside tube diameter (mm)",
    "C": "applied load (kN); symbol undefined in the source, ASCE 29 usage adopted",
    "R": "fire resistance (minutes)",
}


def asce29_fire_resistance(inp: Asce29Input) -> float:
    """Fire resistance in minutes, f*(fc+20)/(60*(kl-1000)) * D^2 * sqrt(D/C)."""
    return (
        inp.f_factor
        * (inp.fc + 20.0)
        / (60.0 * (inp.kl - 1000.0))
        * inp.diameter**2
        * math.sqrt(inp.diameter / inp.c_load)
    )


def cfst_volume(diameter: float, length: float) -> float:
    """Gross circular-section material volume in mm^3, pi/4 * D^2 * L."""
    if diameter <= 0 or length <= 0:
        raise DomainError("diameter and length must be positive")
    return math.pi / 4.0 * diameter**2 * length


# Registry consumed by the `formula eval` CLI subcommand.
def _eval_abrams(params: dict) -> float:
    constants = abram_constants(
        params.pop("age_class", "28-day"), params.pop("pairing", "plausible")
    )
    return abrams_strength(params.pop("wc"), constants)


FORMULA_REGISTRY = {
    "abrams": {
        "fn": _eval_abrams,
        "symbols": {
            "wc": "water-cement ratio by weight",
            "age_class": "7-day | 28-day",
            "pairing": "plausible | alternate constant pairing",
            "result": "compressive strength (MPa)",
        },
    },
    "eq3": {
        "fn": lambda p: eq3_strength(p.pop("wc")),
        "symbols": {"wc": "water-cement ratio", "result": "strength (MPa)"},
    },
    "eq4": {
        "fn": lambda p: eq4_strength(
            p.pop("slag"), p.pop("fly_ash"), p.pop("sp"), p.pop("wc")
        ),
        "symbols": {
            "slag": "blast furnace slag (kg/m^3)",
            "fly_ash": "fly ash (kg/m^3)",
            "sp": "superplasticizer (kg/m^3)",
            "wc": "water-cement ratio",
            "result": "strength (MPa)",
        },
    },
    "eq5": {
        "fn": lambda p: eq5_strength(
            p.pop("coarse_agg"), p.pop("wc"), p.pop("age"), p.pop("sp"), p.pop("slag")
        ),
        "symbols": {
            "coarse_agg": "coarse aggregate (kg/m^3)",
            "wc": "water-cement ratio",
            "age": "age (days)",
            "sp": "superplasticizer (kg/m^3)",
            "slag": "blast furnace slag (kg/m^3)",
            "result": "strength (MPa)",
        },
    },
    "euler": {
        "fn": lambda p: euler_critical_load(
            EulerColumn(
                e_modulus=p.pop("e"),
                inertia=p.pop("i"),
                k_factor=p.pop("k", 1.0),
                length=p.pop("l"),
            ),
            as_printed=bool(p.pop("as_printed", 0)),
        ),
        "symbols": {
            "e": "Young's modulus (MPa)",
            "i": "moment of inertia (mm^4)",
            "k": "effective length factor",
            "l": "unsupported length (mm)",
            "as_printed": "1 evaluates the printed pi*E*I form instead of pi^2*E*I",
            "result": "critical buckling load (N)",
        },
    },
    "cfst_axial": {
        "fn": lambda p: cfst_axial_capacity(
            CfstAxialInput(
                diameter=p.pop("d"),
                thickness=p.pop("t"),
                eff_length=p.pop("le"),
                fy=p.pop("fy"),
                fc=p.pop("fc"),
            )
        ),
        "symbols": {
            "d": "tube diameter (mm)",
            "t": "wall thickness (mm)",
            "le": "effective length (mm)",
            "fy": "steel yield strength (MPa)",
            "fc": "concrete strength (MPa)",
            "result": "axial capacity (kN)",
        },
    },
    "asce29": {
        "fn": lambda p: asce29_fire_resistance(
            Asce29Input(
                f_factor=p.pop("f"),
                fc=p.pop("fc"),
                kl=p.pop("kl"),
                diameter=p.pop("d"),
                c_load=p.pop("c"),
            )
        ),
        "symbols": ASCE29_SYMBOLS,
    },
    "cfst_volume": {
        "fn": lambda p: cfst_volume(p.pop("d"), p.pop("l")),
        "symbols": {
            "d": "tube diameter (mm)",
            "l": "column length (mm)",
            "result": "gross section volume (mm^3)",
        },
    },
}


def evaluate_formula(name: str, params: dict) -> dict:
    """Evaluate a registered formula; returns value plus its symbol table."""
    if name not in FORMULA_REGISTRY:
        raise DomainError(
            f"unknown formula {name!r}; choose from {sorted(FORMULA_REGISTRY)}"
        )
    entry = FORMULA_REGISTRY[name]
    work = dict(params)
    value = entry["fn"](work)
    if work:
        raise DomainError(f"unused parameters for {name!r}: {sorted(work)}")
    return {"formula": name, "value": value, "symbols": entry["symbols"]}
