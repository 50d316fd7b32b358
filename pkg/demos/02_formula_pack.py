"""
Engineering formula pack
========================

Closed-form references used across the case studies: the inverse
water/cement strength law, the fitted concrete expressions, Euler buckling,
the fitted tube axial-capacity expression, and the ASCE 29 fire-resistance
equation that the design optimizer maximizes.
"""

from strucml.formulas import (
    Asce29Input,
    CfstAxialInput,
    EulerColumn,
    abram_constants,
    abrams_strength,
    asce29_fire_resistance,
    cfst_axial_capacity,
    cfst_volume,
    eq3_strength,
    eq4_strength,
    euler_critical_load,
    slenderness,
)

print("inverse water/cement law, 28-day constants (96.55, 8.2):")
for wc in (0.3, 0.4, 0.5, 0.6, 0.7):
    f28 = abrams_strength(wc, abram_constants("28-day"))
    f7 = abrams_strength(wc, abram_constants("7-day"))
    print(f"  w/c={wc:.1f}: 28-day {f28:6.1f} MPa   7-day {f7:6.1f} MPa   fitted single-feature {eq3_strength(wc):5.1f} MPa")

print("\nfour-feature fitted expression at slag=100, fly_ash=0, sp=5, wc=0.4:")
print(f"  {eq4_strength(100, 0, 5, 0.4):.2f} MPa")

col = EulerColumn(e_modulus=200000, inertia=8.5e6, k_factor=1.0, length=3500, area=7600)
print("\nelastic buckling of a 3.5 m pinned column:")
print(f"  critical load {euler_critical_load(col)/1e3:.0f} kN  (slenderness {slenderness(col):.0f})")
print(f"  as printed in the source (pi, not pi^2): {euler_critical_load(col, as_printed=True)/1e3:.0f} kN")

tube = CfstAxialInput(diameter=200, thickness=5, eff_length=2000, fy=350, fc=40)
print(f"\nfitted tube axial capacity (D=200, t=5, Le=2000): {cfst_axial_capacity(tube):.1f} kN")

fire = Asce29Input(f_factor=0.07, fc=35, kl=1100, diameter=380, c_load=190)
print(f"ASCE 29 fire resistance (D=380, braced kl=1100, C=190): {asce29_fire_resistance(fire):.1f} min")
print(f"gross volume of that column at L=3500: {cfst_volume(380, 3500):,.0f} mm^3")
