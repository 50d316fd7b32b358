import math

import pytest

from strucml.errors import DomainError
from strucml.formulas import (
    ABRAM_PAIRINGS,
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
    eq5_strength,
    euler_critical_load,
    evaluate_formula,
    slenderness,
)
from strucml.rng import Rng


class TestAbram:
    def test_zero_ratio_returns_a(self):
        constants = abram_constants("28-day")
        assert abrams_strength(0.0, constants) == constants.a

    def test_hand_values(self):
        assert abrams_strength(0.5, abram_constants("28-day")) == pytest.approx(
            96.55 / math.sqrt(8.2)
        )
        assert abrams_strength(0.5, abram_constants("7-day")) == pytest.approx(
            63.45 / math.sqrt(14.0)
        )

    def test_negative_ratio_errors(self):
        with pytest.raises(DomainError):
            abrams_strength(-0.1, abram_constants("28-day"))

    def test_alternate_pairing_selectable(self):
        alt = abram_constants("28-day", pairing="alternate")
        assert alt.a == ABRAM_PAIRINGS["alternate"]["28-day"][0]

    def test_strictly_decreasing_in_wc(self):
        constants = abram_constants("28-day")
        values = [abrams_strength(w / 100.0, constants) for w in range(100)]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestFittedExpressions:
    def test_eq3_values(self):
        assert eq3_strength(0.0) == 13.64
        assert eq3_strength(1.0) == pytest.approx(13.64 / 1.36)
        assert eq3_strength(0.5) == pytest.approx(13.64 / 1.36**0.5)

    def test_eq3_strictly_decreasing(self):
        values = [eq3_strength(w / 100.0) for w in range(100)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_eq4_hand_values(self):
        assert eq4_strength(0, 0, 0, 1.0) == pytest.approx(
            abs(-6.13 - 27.56 + 49.73)
        )
        assert eq4_strength(100, 0, 0, 0.25) == pytest.approx(
            abs(10 - 6.13 - 27.56 + 99.46)
        )

    def test_eq4_zero_wc_errors(self):
        with pytest.raises(DomainError):
            eq4_strength(0, 0, 0, 0.0)

    def test_eq5_log_collapse(self):
        # wc=1 makes log(wc)=0; sp=1, slag=0 leave a unit denominator
        assert eq5_strength(1000, 1.0, 1.0, 1.0, 0.0) == pytest.approx(
            math.log(1000)
        )

    def test_eq5_zero_denominator_errors(self):
        with pytest.raises(DomainError, match="denominator"):
            eq5_strength(1000, 1.0, 1.0, 0.0, 0.0)

    def test_eq5_non_negative(self):
        rng = Rng(2)
        for _ in range(200):
            v = eq5_strength(
                800 + rng.random() * 300,
                0.3 + rng.random(),
                1 + rng.random() * 100,
                rng.random() * 30 + 0.01,
                rng.random() * 300,
            )
            assert v >= 0.0 and math.isfinite(v)


class TestEuler:
    def test_hand_value(self):
        col = EulerColumn(e_modulus=200000, inertia=1e6, k_factor=1.0, length=1000)
        assert euler_critical_load(col) == pytest.approx(math.pi**2 * 200000)

    def test_inverse_square_in_length(self):
        col = EulerColumn(e_modulus=200000, inertia=1e6, k_factor=1.0, length=1000)
        col2 = EulerColumn(e_modulus=200000, inertia=1e6, k_factor=1.0, length=2000)
        assert euler_critical_load(col2) == pytest.approx(euler_critical_load(col) / 4)

    def test_k_scaling(self):
        col = EulerColumn(e_modulus=200000, inertia=1e6, k_factor=1.0, length=1000)
        col2 = EulerColumn(e_modulus=200000, inertia=1e6, k_factor=2.0, length=1000)
        assert euler_critical_load(col2) == pytest.approx(euler_critical_load(col) / 4)

    def test_linear_in_e_and_i(self):
        rng = Rng(5)
        for _ in range(50):
            e = 1000 + rng.random() * 2e5
            i = 1e4 + rng.random() * 1e7
            base = euler_critical_load(
                EulerColumn(e_modulus=e, inertia=i, k_factor=1.0, length=1500)
            )
            scaled = euler_critical_load(
                EulerColumn(e_modulus=3 * e, inertia=i, k_factor=1.0, length=1500)
            )
            assert scaled == pytest.approx(3 * base, rel=1e-9)

    def test_as_printed_variant_drops_pi_square(self):
        col = EulerColumn(e_modulus=200000, inertia=1e6, k_factor=1.0, length=1000)
        assert euler_critical_load(col, as_printed=True) == pytest.approx(
            euler_critical_load(col) / math.pi
        )

    def test_slenderness(self):
        col = EulerColumn(e_modulus=1, inertia=100, k_factor=1.0, length=100, area=1)
        assert slenderness(col) == pytest.approx(10.0)
        with pytest.raises(DomainError):
            slenderness(EulerColumn(e_modulus=1, inertia=1, k_factor=1, length=1))


class TestCfstAxial:
    def test_hand_value(self):
        inp = CfstAxialInput(diameter=200, thickness=5, eff_length=2000, fy=350, fc=40)
        assert cfst_axial_capacity(inp) == pytest.approx(2364.6, abs=1e-9)

    def test_non_negative_fuzz(self):
        rng = Rng(6)
        for _ in range(500):
            inp = CfstAxialInput(
                diameter=100 + rng.random() * 500,
                thickness=3 + rng.random() * 13,
                eff_length=500 + rng.random() * 4000,
                fy=235 + rng.random() * 225,
                fc=20 + rng.random() * 60,
            )
            v = cfst_axial_capacity(inp)
            assert v >= 0.0 and math.isfinite(v)

    def test_thickness_bound(self):
        with pytest.raises(DomainError):
            CfstAxialInput(diameter=100, thickness=50, eff_length=1000, fy=355, fc=40)


class TestAsce29:
    def test_hand_value(self):
        inp = Asce29Input(f_factor=1.0, fc=40, kl=2000, diameter=300, c_load=150)
        assert asce29_fire_resistance(inp) == pytest.approx(127.279, abs=1e-2)

    def test_zero_factor(self):
        inp = Asce29Input(f_factor=0.0, fc=40, kl=2000, diameter=300, c_load=150)
        assert asce29_fire_resistance(inp) == 0.0

    def test_kl_at_bound_errors(self):
        with pytest.raises(DomainError):
            Asce29Input(f_factor=1.0, fc=40, kl=1000, diameter=300, c_load=150)

    def test_monotone_in_d_c_kl(self):
        def r(d=300.0, c=150.0, kl=2000.0):
            return asce29_fire_resistance(
                Asce29Input(f_factor=0.07, fc=40, kl=kl, diameter=d, c_load=c)
            )

        assert r(d=310) > r(d=300)
        assert r(c=200) < r(c=150)
        assert r(kl=2500) < r(kl=2000)


class TestVolume:
    def test_reference_value(self):
        assert cfst_volume(380, 3500) == pytest.approx(396940231.78, rel=1e-4)

    def test_unit_scale(self):
        assert cfst_volume(2, 1) == pytest.approx(math.pi)

    def test_quadratic_in_diameter(self):
        assert cfst_volume(760, 3500) == pytest.approx(4 * cfst_volume(380, 3500))

    def test_matches_shell_integration_oracle(self):
        # integrate 2*pi*r dr over [0, D/2] numerically, times length
        d, length = 380.0, 3500.0
        m = 20000
        r = (0.5 + __import__("numpy").arange(m)) * (d / 2 / m)
        area = float((2 * math.pi * r * (d / 2 / m)).sum())
        assert cfst_volume(d, length) == pytest.approx(area * length, rel=1e-6)


def test_formula_registry_roundtrip():
    out = evaluate_formula("eq3", {"wc": 0.5})
    assert out["value"] == pytest.approx(eq3_strength(0.5))
    assert "wc" in out["symbols"]
    with pytest.raises(DomainError):
        evaluate_formula("nope", {})
    with pytest.raises(DomainError):
        evaluate_formula("eq3", {"wc": 0.5, "bogus": 1})


def test_asce29_symbol_interpretation_documented():
    out = evaluate_formula(
        "asce29", {"f": 0.07, "fc": 35, "kl": 1100, "d": 380, "c": 190}
    )
    assert "applied load" in out["symbols"]["C"]
