import math

import pytest

from strucml.errors import DomainError, ValidationError
from strucml.metrics import mae, metric_report, r_squared, ratio_stats, rmse
from strucml.rng import Rng


def brute_mae(a, p):
    return sum(abs(x - y) for x, y in zip(a, p)) / len(a)


def brute_rmse(a, p):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, p)) / len(a))


def brute_r2(a, p):
    mean = sum(a) / len(a)
    ss_res = sum((x - y) ** 2 for x, y in zip(a, p))
    ss_tot = sum((x - mean) ** 2 for x in a)
    return 1.0 - ss_res / ss_tot


def test_mae_identity_and_hand_values():
    assert mae([1, 2, 3], [1, 2, 3]) == 0.0
    assert mae([1, 2, 3], [2, 2, 2]) == pytest.approx(2.0 / 3.0)
    assert mae([0], [5]) == 5.0


def test_rmse_hand_values():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
    assert rmse([1, 2, 3], [2, 2, 2]) == pytest.approx(math.sqrt(2.0 / 3.0))


def test_rmse_at_least_mae():
    rng = Rng(1)
    for _ in range(50):
        a = rng.random(20) * 10
        p = rng.random(20) * 10
        assert rmse(a, p) >= mae(a, p) - 1e-12


def test_r_squared_hand_values():
    assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0
    assert r_squared([1, 2, 3], [2, 2, 2]) == pytest.approx(0.0)
    assert r_squared([1, 2, 3], [1.1, 1.9, 3.2]) == pytest.approx(0.97)


def test_r_squared_constant_actual_errors():
    with pytest.raises(DomainError):
        r_squared([2, 2, 2], [1, 2, 3])


def test_length_mismatch_and_empty_error():
    with pytest.raises(ValidationError):
        mae([1, 2], [1])
    with pytest.raises(ValidationError):
        rmse([], [])


def test_ratio_stats_hand_values():
    rs = ratio_stats([1, 2, 3], [1, 2, 3])
    assert rs.mean_ratio == 1.0 and rs.cov == 0.0
    rs = ratio_stats([100, 200], [200, 100])
    assert rs.mean_ratio == pytest.approx(1.25)


def test_ratio_stats_zero_predicted_names_row():
    with pytest.raises(DomainError, match="row 1"):
        ratio_stats([1, 2], [1, 0])


def test_metrics_match_brute_force_randomized():
    rng = Rng(99)
    for _ in range(300):
        n = 2 + int(rng.random() * 40)
        a = (rng.random(n) * 100 + 1).tolist()
        p = (rng.random(n) * 100 + 1).tolist()
        assert mae(a, p) == pytest.approx(brute_mae(a, p), rel=1e-12)
        assert rmse(a, p) == pytest.approx(brute_rmse(a, p), rel=1e-12)
        assert r_squared(a, p) == pytest.approx(brute_r2(a, p), rel=1e-9, abs=1e-9)


def test_affine_invariance_of_r_squared():
    rng = Rng(4)
    a = rng.random(30) * 10
    p = rng.random(30) * 10
    base = r_squared(a, p)
    assert r_squared(3.5 * a + 2, 3.5 * p + 2) == pytest.approx(base, abs=1e-9)


def test_scale_equivariance_of_mae_rmse():
    rng = Rng(5)
    a = rng.random(30)
    p = rng.random(30)
    assert mae(4 * a, 4 * p) == pytest.approx(4 * mae(a, p), rel=1e-12)
    assert rmse(4 * a, 4 * p) == pytest.approx(4 * rmse(a, p), rel=1e-12)


def test_metric_report_invariant():
    rep = metric_report([1, 2, 3, 4], [1.2, 1.8, 3.3, 3.6])
    assert rep.rmse >= rep.mae >= 0
    assert rep.r2 <= 1
    assert rep.n == 4
    assert set(rep.to_json_dict()) == {"mae", "rmse", "r2", "n"}
