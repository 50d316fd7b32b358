import json

import pytest

from strucml import datasets as ds
from strucml.cli import EXIT_DATA, EXIT_OK, EXIT_PARADOX, EXIT_USAGE, main
from strucml.data import save_dataset


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


@pytest.fixture
def rc_csv(tmp_path):
    save_dataset(ds.bundled("rc_fire"), tmp_path / "rc_fire.csv")
    return tmp_path / "rc_fire.csv"


@pytest.fixture
def rf_model(tmp_path, capsys):
    model_path = tmp_path / "rf.json"
    code = main(
        [
            "--seed", "7", "--output", str(tmp_path / "train"),
            "train", "--dataset", "rc_fire", "--model-kind", "forest",
            "--hp", "n_trees=30", "min_leaf=4", "--save-model", str(model_path),
        ]
    )
    capsys.readouterr()
    assert code == EXIT_OK
    return model_path


class TestBasicCommands:
    def test_health_on_bundled(self, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "o"), "health", "--dataset", "concrete"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["health"]["obs_per_feature"] == 128.75
        assert doc["health"]["all_pass"] is True
        assert (tmp_path / "o" / "manifest.json").exists()
        assert (tmp_path / "o" / "report.json").exists()

    def test_health_on_csv_with_schema(self, rc_csv, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "o"), "health",
             "--dataset", str(rc_csv), "--schema", "rc_fire"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["health"]["n_rows"] == 140

    def test_assoc(self, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "o"), "assoc", "--dataset", "rc_fire"],
            capsys,
        )
        assert code == EXIT_OK
        assert len(doc["associations"]["pearson"]) == 9

    def test_missing_file_data_error(self, tmp_path, capsys):
        code = main(
            ["--output", str(tmp_path / "o"), "health",
             "--dataset", "missing.csv", "--schema", "rc_fire"]
        )
        assert code == EXIT_DATA

    def test_unknown_subcommand_usage_error(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_formula_eval(self, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "o"), "formula", "eval",
             "--name", "cfst_volume", "--params", "d=380", "l=3500"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["value"] == pytest.approx(396940231.78, rel=1e-4)
        assert "symbols" in doc


class TestModelCommands:
    def test_train_writes_model_and_report(self, rf_model, tmp_path, capsys):
        doc = json.loads(rf_model.read_text())
        assert doc["format_version"] == 1
        assert len(doc["trees"]) == 30

    def test_eval(self, rf_model, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "e"), "eval",
             "--model", str(rf_model), "--dataset", "rc_fire"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["metrics"]["r2"] > 0.5

    def test_explain_both_methods(self, rf_model, tmp_path, capsys):
        code, doc = run(
            ["--seed", "3", "--output", str(tmp_path / "x"), "explain",
             "--model", str(rf_model), "--dataset", "rc_fire",
             "--method", "both", "--row", "5"],
            capsys,
        )
        assert code == EXIT_OK
        assert set(doc["attributions"]) == {"shap", "lime"}
        shap = doc["attributions"]["shap"]
        assert len(shap["features"]) == 8

    def test_rashomon_rows_range(self, rf_model, tmp_path, capsys):
        code, doc = run(
            ["--seed", "3", "--output", str(tmp_path / "r"), "rashomon",
             "--model", str(rf_model), "--dataset", "rc_fire",
             "--rows", "0:4", "--physics", "rc_fire"],
            capsys,
        )
        assert code == EXIT_OK
        assert len(doc["rows"]) == 4
        assert (tmp_path / "r" / "disagreement_histogram.tsv").exists()

    def test_abduce_contract(self, rf_model, tmp_path, capsys):
        code, doc = run(
            ["--seed", "9", "--output", str(tmp_path / "a"), "abduce",
             "--model", str(rf_model), "--target-fr", "120", "--n", "5000"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["status"] == "ok"
        assert len(doc["top"]) == 5
        for row in doc["top"]:
            assert row["predicted_fr"] >= 120.0
        assert doc["rank1_attribution"] is not None
        assert (tmp_path / "a" / "top_configs.tsv").exists()


class TestClusterCommands:
    def test_fixed_k(self, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "c"), "cluster", "fit",
             "--dataset", "rc_fire", "--k", "4"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["k"] == 4
        assert len(doc["profiles"]) == 4
        counts = [p["member_count"] for p in doc["profiles"]]
        assert sum(counts) == 140

    def test_hypothesize_emits_valid_configs(self, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "h"), "cluster", "hypothesize",
             "--dataset", "rc_fire", "--k-fixed", "4", "--cluster", "1",
             "--n", "50", "--scale", "0.2"],
            capsys,
        )
        assert code == EXIT_OK
        assert len(doc["configs"]) == 50
        from strucml.abduction import load_grid, validate_config

        grid = load_grid("rc_fire")
        for config in doc["configs"]:
            assert validate_config(config, grid)


class TestOptimize:
    def test_paradox_exit_code(self, tmp_path, capsys):
        code, doc = run(
            ["--output", str(tmp_path / "o"), "optimize", "--budget", "2000"],
            capsys,
        )
        assert code == EXIT_PARADOX
        assert doc["status"] == "paradox-detected"
        assert doc["top_r"]["catalog_feasible"] is False
        assert doc["snap"]["diameter_after"] != doc["snap"]["diameter_before"]

    def test_exhaustive_catalog_ok(self, tmp_path, capsys):
        catalog = {
            "entries": [
                {"designation": f"X{d}", "diameter": float(d), "thicknesses": [8.0]}
                for d in range(200, 601, 10)
            ]
        }
        path = tmp_path / "catalog.json"
        path.write_text(json.dumps(catalog))
        code, doc = run(
            ["--output", str(tmp_path / "o"), "optimize",
             "--budget", "2000", "--catalog", str(path)],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["status"] == "ok"


class TestReproducibility:
    def test_rerun_byte_identical(self, rf_model, tmp_path, capsys):
        outdir = tmp_path / "run1"
        code = main(
            ["--seed", "5", "--output", str(outdir), "abduce",
             "--model", str(rf_model), "--target-fr", "120", "--n", "2000"]
        )
        capsys.readouterr()
        assert code == EXIT_OK
        before = (outdir / "report.json").read_bytes()
        code = main(["rerun", str(outdir / "manifest.json")])
        capsys.readouterr()
        assert code == EXIT_OK
        assert (outdir / "report.json").read_bytes() == before

    def test_config_file_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[health]\ndataset = concrete\n")
        code, doc = run(
            ["--output", str(tmp_path / "o"), "--config", str(cfg), "health"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["dataset"].startswith("concrete")


class TestPipelines:
    def test_induction_small_budget(self, tmp_path, capsys):
        code, doc = run(
            ["--seed", "42", "--output", str(tmp_path / "p"), "pipeline",
             "induction", "--population", "60", "--generations", "4",
             "--n-trees", "10"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["health"]["all_pass"] is True
        assert "abram_r2" in doc and "symreg_best" in doc

    def test_rashomon_small_budget(self, tmp_path, capsys):
        code, doc = run(
            ["--seed", "42", "--output", str(tmp_path / "p"), "pipeline",
             "rashomon", "--n-trees", "15", "--stride", "40"],
            capsys,
        )
        assert code == EXIT_OK
        assert doc["rows_audited"] == 4
