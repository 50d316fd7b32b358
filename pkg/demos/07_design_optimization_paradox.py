"""
Optimal yet unbuildable: the section-catalog paradox
====================================================

Search tube designs for maximal fire resistance at minimal material volume,
subject to a 120-minute code floor.  The search lattice steps the diameter
in clean 10 mm increments, but mills roll a short list of standard outside
diameters; the two never coincide, so the "optimal" diameters cannot be
bought.  Snapping to the catalog resolves each design at a quantified cost.
"""

from strucml.design_opt import (
    load_catalog,
    load_design_space,
    optimize_design,
    paradox_detected,
    snap_to_catalog,
    top_r_entry,
)

space = load_design_space()
catalog = load_catalog()
print("catalog diameters:", ", ".join(f"{d:g}" for d in catalog.diameters))

front = optimize_design(space, catalog, r_limit=120.0, budget=10000, seed=42)
print(f"\nPareto front ({len(front)} members, volume ascending):")
for e in front:
    tag = "catalog" if e.catalog_feasible else f"NOT IN CATALOG (nearest {e.nearest_section})"
    print(
        f"  D={e.design.diameter:4.0f} mm  fc={e.design.fc:2.0f}  {e.design.filling:>14s}"
        f"  R={e.r:6.1f} min  V={e.volume/1e6:7.1f}e6 mm^3  [{tag}]"
    )

print(f"\nparadox detected: {paradox_detected(front)}")
top = top_r_entry(front)
print(f"best-R design: D={top.design.diameter:.0f} mm, R={top.r:.1f} min")

snap = snap_to_catalog(top.design, catalog)
print(
    f"snapped to {snap['section']}: D {snap['diameter_before']:.0f} -> "
    f"{snap['diameter_after']:.1f} mm, R {snap['r_before']:.1f} -> {snap['r_after']:.1f} min,"
    f" V {snap['volume_before']/1e6:.1f}e6 -> {snap['volume_after']/1e6:.1f}e6 mm^3"
)
print("\nthe same run exits with code 4 from the command line:")
print("  strucml optimize --budget 10000 --seed 42")
