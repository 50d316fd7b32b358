import json

import numpy as np
import pytest

from strucml.data import Dataset, FeatureSpec
from strucml.errors import DomainError, UnsupportedMethodError, ValidationError
from strucml.rng import Rng
from strucml.surrogate import (
    Attribution,
    ModelSpec,
    TrainedModel,
    cross_validate,
    fit,
    gini_importance,
    permutation_importance,
    train_protocol,
)


def random_regression(seed=1, n=120, p=4):
    rng = Rng(seed)
    X = rng.random(n * p).reshape(n, p)
    y = 3.0 * X[:, 0] - 2.0 * X[:, 1] + 0.5 * np.sin(X[:, 2] * 6) + 0.05 * rng.normal(n)
    return X, y


def as_dataset(X, y):
    return Dataset(
        name="t",
        features=tuple(FeatureSpec(name=f"f{j}") for j in range(X.shape[1])),
        target=FeatureSpec(name="y"),
        X=X,
        y=y,
    )


class TestFitBasics:
    def test_constant_target_all_kinds(self):
        X = Rng(2).random(40).reshape(20, 2)
        y = np.full(20, 7.25)
        for kind in ("tree", "forest", "knn", "linear", "ridge"):
            spec = ModelSpec(kind, {"n_trees": 5} if kind == "forest" else {}, seed=3)
            model = fit(spec, X, y)
            assert np.allclose(model.predict(X), 7.25, atol=1e-9)

    def test_linear_recovers_coefficients(self):
        x = np.linspace(0, 5, 50)
        y = 2.0 * x + 1.0
        model = fit(ModelSpec("linear"), x[:, None], y)
        intercept, slopes = model.coefficients
        assert intercept == pytest.approx(1.0, abs=1e-6)
        assert slopes[0] == pytest.approx(2.0, abs=1e-6)

    def test_forest_of_one_reproduces_tree(self):
        X, y = random_regression()
        tree = fit(ModelSpec("tree", {"min_leaf": 1}, seed=5), X, y)
        forest = fit(
            ModelSpec(
                "forest",
                {"n_trees": 1, "bootstrap": False, "features_per_split": 4, "min_leaf": 1},
                seed=5,
            ),
            X,
            y,
        )
        assert np.array_equal(forest.predict(X), tree.predict(X))

    def test_too_few_rows_error(self):
        with pytest.raises(DomainError):
            fit(ModelSpec("tree"), np.array([[1.0]]), np.array([1.0]))

    def test_unknown_kind_and_hyperparams(self):
        with pytest.raises(ValidationError):
            ModelSpec("boosting")
        with pytest.raises(ValidationError):
            ModelSpec("tree", {"bogus": 1})

    def test_refit_reproducible(self):
        X, y = random_regression()
        spec = ModelSpec("forest", {"n_trees": 10}, seed=11)
        m1 = fit(spec, X, y)
        m2 = fit(spec, X, y)
        assert np.array_equal(m1.predict(X), m2.predict(X))

    def test_zero_variance_feature_flagged(self):
        X = np.column_stack([np.ones(30), np.arange(30.0)])
        y = np.arange(30.0)
        model = fit(ModelSpec("linear"), X, y)
        assert model.scaler.zero_variance == (True, False)


class TestPredict:
    def test_memorizing_tree(self):
        X, y = random_regression(n=60)
        model = fit(ModelSpec("tree", {"min_leaf": 1}, seed=1), X, y)
        assert np.allclose(model.predict(X), y, atol=1e-12)

    def test_knn_self_neighbor(self):
        X, y = random_regression(n=40)
        model = fit(ModelSpec("knn", {"k": 1}), X, y)
        assert np.allclose(model.predict(X), y)

    def test_ridge_shrinkage_limit(self):
        X, y = random_regression(n=80)
        model = fit(ModelSpec("ridge", {"lam": 1e9}), X, y)
        assert np.allclose(model.predict(X), y.mean(), atol=1e-3)

    def test_dimension_mismatch_error(self):
        X, y = random_regression()
        model = fit(ModelSpec("linear"), X, y)
        with pytest.raises(ValidationError):
            model.predict(X[:, :2])

    def test_forest_mean_of_members(self):
        X, y = random_regression(n=50)
        model = fit(ModelSpec("forest", {"n_trees": 7}, seed=3), X, y)
        from strucml.surrogate import _tree_predict

        Z = model.scaler.transform(X)
        member_mean = np.mean(
            [_tree_predict(t, Z) for t in model.state["trees"]], axis=0
        )
        assert np.allclose(model.predict(X), member_mean, atol=1e-12)

    def test_tree_predictions_within_target_range(self):
        X, y = random_regression(n=80)
        model = fit(ModelSpec("forest", {"n_trees": 10}, seed=2), X, y)
        grid = Rng(9).random(400).reshape(100, 4) * 3 - 1  # outside training box
        preds = model.predict(grid)
        assert preds.min() >= y.min() - 1e-9 and preds.max() <= y.max() + 1e-9


class TestTreeStructure:
    def test_row_order_invariance(self):
        X, y = random_regression(n=90)
        m1 = fit(ModelSpec("tree", seed=1), X, y)
        perm = Rng(4).permutation(90)
        m2 = fit(ModelSpec("tree", seed=1), X[perm], y[perm])
        t1, t2 = m1.state["tree"], m2.state["tree"]
        assert np.array_equal(t1.feature, t2.feature)
        assert np.allclose(t1.threshold, t2.threshold, atol=1e-12)
        grid = Rng(5).random(200).reshape(50, 4)
        assert np.allclose(m1.predict(grid), m2.predict(grid), atol=1e-12)

    def test_linear_matches_normal_equations(self):
        X, y = random_regression(n=100)
        model = fit(ModelSpec("linear"), X, y)
        Z = model.scaler.transform(X)
        design = np.column_stack([np.ones(len(y)), Z])
        beta = np.linalg.solve(design.T @ design, design.T @ y)
        assert np.allclose(model.predict(X), design @ beta, atol=1e-8)

    def test_tie_break_prefers_lowest_feature(self):
        # duplicated informative column: split must land on column 0
        base = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
        X = np.column_stack([base, base])
        y = np.array([0.0, 0.0, 5.0, 5.0, 9.0, 9.0])
        model = fit(ModelSpec("tree", {"min_leaf": 1}), X, y)
        tree = model.state["tree"]
        assert tree.feature[0] == 0


class TestCrossValidate:
    def test_report_shapes_and_aggregates(self):
        d = as_dataset(*random_regression(n=120))
        report = cross_validate(ModelSpec("ridge"), d, k=5, seed=42)
        assert report.k == 5 and len(report.fold_reports) == 5
        vals = [r.r2 for r in report.fold_reports]
        assert report.mean_r2 == pytest.approx(float(np.mean(vals)))

    def test_bit_reproducible(self):
        d = as_dataset(*random_regression(n=100))
        spec = ModelSpec("forest", {"n_trees": 8}, seed=2)
        r1 = cross_validate(spec, d, k=4, seed=11)
        r2 = cross_validate(spec, d, k=4, seed=11)
        assert r1.to_json_dict() == r2.to_json_dict()

    def test_train_protocol_returns_final_model(self):
        d = as_dataset(*random_regression(n=100))
        report, model = train_protocol(ModelSpec("linear"), d, k=4, seed=1)
        assert isinstance(model, TrainedModel)
        assert report.train.n + report.test.n == d.n_rows


class TestImportance:
    def test_single_informative_feature(self):
        rng = Rng(3)
        X = rng.random(400).reshape(200, 2)
        y = X[:, 0].copy()
        model = fit(ModelSpec("forest", {"n_trees": 20, "features_per_split": 2}, seed=1), X, y)
        imp = gini_importance(model)
        assert imp.values[0] > 0.9
        assert imp.values.sum() == pytest.approx(1.0, abs=1e-9)

    def test_stump_importance(self):
        X = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        y = np.array([0.0, 0.0, 10.0, 10.0])
        model = fit(ModelSpec("tree", {"max_depth": 1, "min_leaf": 1}), X, y)
        imp = gini_importance(model)
        assert imp.values.tolist() == [1.0, 0.0]

    def test_non_tree_unsupported(self):
        X, y = random_regression()
        with pytest.raises(UnsupportedMethodError):
            gini_importance(fit(ModelSpec("linear"), X, y))

    def test_permutation_unused_feature_exactly_zero(self):
        rng = Rng(6)
        X = rng.random(200).reshape(100, 2)
        y = X[:, 0] * 4
        model = fit(ModelSpec("tree", {"min_leaf": 5}), X, y)
        # feature 1 is never split on for this target
        assert not np.any(model.state["tree"].feature == 1)
        imp = permutation_importance(model, X, y, repeats=3, seed=1)
        assert imp.values[1] == 0.0
        assert imp.values[0] > 0.0

    def test_duplicated_columns_share_weight(self):
        rng = Rng(7)
        base = rng.random(150)
        X = np.column_stack([base, base])
        y = 2 * base
        model = fit(ModelSpec("linear"), X, y)
        imp = permutation_importance(model, X, y, repeats=4, seed=2)
        assert imp.values.sum() > 0.0


class TestPersistence:
    @pytest.mark.parametrize("kind,hp", [
        ("tree", {"min_leaf": 2}),
        ("forest", {"n_trees": 5}),
        ("knn", {"k": 3}),
        ("linear", {}),
        ("ridge", {"lam": 0.5}),
    ])
    def test_json_roundtrip(self, kind, hp, tmp_path):
        X, y = random_regression(n=60)
        model = fit(ModelSpec(kind, hp, seed=4), X, y)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(model.to_json_dict()))
        back = TrainedModel.from_json_dict(json.loads(path.read_text()))
        grid = Rng(8).random(80).reshape(20, 4)
        assert np.allclose(model.predict(grid), back.predict(grid), atol=0)


def test_attribution_validation():
    with pytest.raises(ValidationError):
        Attribution(feature_names=("a",), values=np.array([1.0, 2.0]), method="gini")
    with pytest.raises(ValidationError):
        Attribution(feature_names=("a",), values=np.array([np.inf]), method="gini")
