"""Command-line front end: seeded, file-based, reproducible batch runs.

One binary with subcommands for each capability plus four end-to-end
pipelines.  Every run writes ``manifest.json`` (enough to replay the run
byte-for-byte via ``rerun``) and ``report.json`` into the output directory.

Exit codes: 0 ok, 2 usage error, 3 data error, 4 paradox detected.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import abduction as abd
from . import cluster as clu
from . import datasets as ds_mod
from . import design_opt as opt
from . import explain as ex
from . import symreg as sr
from .data import (
    association_matrices,
    health_check,
    load_dataset,
    load_schema,
)
from .errors import StrucmlError
from .formulas import evaluate_formula
from .metrics import metric_report
from .rng import Rng
from .surrogate import (
    ModelSpec,
    TrainedModel,
    fit,
    gini_importance,
    train_protocol,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_PARADOX = 4

SCHEMA_VERSION = 1
BUNDLED_NAMES = ("concrete", "rc_fire", "cfst_axial")


def _numpy_safe(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_numpy_safe) + "\n"


def _resolve_dataset(args):
    """--dataset is a bundled name or a CSV path (with --schema)."""
    name = args.dataset
    if name in BUNDLED_NAMES:
        return ds_mod.bundled(name, data_dir=args.data_dir)
    path = Path(name)
    schema = args.schema or path.stem
    features, target = load_schema(schema)
    return load_dataset(path, features, target)


def _parse_hyperparams(items):
    hp = {}
    for item in items or ():
        key, _, raw = item.partition("=")
        if not _:
            raise StrucmlError(f"hyperparameter {item!r} is not key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        hp[key] = value
    return hp


def _write_run(args, report: dict, tables: dict[str, str] | None = None) -> None:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "argv": args._argv,
        "seed": args.seed,
    }
    (outdir / "manifest.json").write_text(_json_text(manifest))
    report = {"schema_version": SCHEMA_VERSION, **report}
    (outdir / "report.json").write_text(_json_text(report))
    for name, text in (tables or {}).items():
        (outdir / name).write_text(text)
    sys.stdout.write(_json_text(report))


def _table(rows: list[dict], columns: list[str]) -> str:
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(str(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _load_model(path: str) -> TrainedModel:
    return TrainedModel.from_json_dict(json.loads(Path(path).read_text()))


def _explain_cfg(dataset, seed: int, n_coalitions: int = 0) -> ex.ExplainConfig:
    return ex.ExplainConfig(
        background=dataset.X, n_coalitions=n_coalitions, seed=seed
    )


# ---------------------------------------------------------------------------
# Subcommand handlers (each returns an exit code)


def cmd_health(args) -> int:
    d = _resolve_dataset(args)
    report = health_check(d)
    _write_run(args, {"dataset": d.name, "health": report.to_json_dict()})
    return EXIT_OK


def cmd_assoc(args) -> int:
    d = _resolve_dataset(args)
    report = association_matrices(d)
    _write_run(args, {"dataset": d.name, "associations": report.to_json_dict()})
    return EXIT_OK


def cmd_train(args) -> int:
    d = _resolve_dataset(args)
    spec = ModelSpec(
        kind=args.model_kind,
        hyperparams=_parse_hyperparams(args.hp),
        seed=Rng(args.seed).derive("surrogate").seed,
    )
    report, model = train_protocol(spec, d, k=args.k, seed=args.seed)
    if args.save_model:
        Path(args.save_model).write_text(_json_text(model.to_json_dict()))
    _write_run(
        args,
        {
            "dataset": d.name,
            "model_kind": args.model_kind,
            "cv": report.to_json_dict(),
            "metrics": report.test.to_json_dict(),
            "model_path": args.save_model,
        },
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    d = _resolve_dataset(args)
    model = _load_model(args.model)
    report = metric_report(d.y, model.predict(d.X))
    _write_run(args, {"dataset": d.name, "metrics": report.to_json_dict()})
    return EXIT_OK


def cmd_explain(args) -> int:
    d = _resolve_dataset(args)
    model = _load_model(args.model)
    cfg = _explain_cfg(d, Rng(args.seed).derive("explain").seed)
    x = d.X[args.row]
    out = {}
    if args.method in ("shap", "both"):
        out["shap"] = ex.kernel_shap(model, x, cfg).to_json_dict()
    if args.method in ("lime", "both"):
        out["lime"] = ex.lime_explain(model, x, cfg).to_json_dict()
    _write_run(args, {"dataset": d.name, "row": args.row, "attributions": out})
    return EXIT_OK


def _row_range(text: str, n: int) -> list[int]:
    if text == "all":
        return list(range(n))
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), min(int(hi), n)))
    return [int(text)]


def cmd_rashomon(args) -> int:
    d = _resolve_dataset(args)
    model = _load_model(args.model)
    cfg = _explain_cfg(d, Rng(args.seed).derive("explain").seed)
    expectations = None
    if args.physics:
        expectations = ex.load_physics_expectations(args.physics)
    rows = _row_range(args.rows, d.n_rows)
    per_row = []
    violations_table = []
    for i in rows:
        x = d.X[i]
        shap_n = ex.normalize_attribution(ex.kernel_shap(model, x, cfg))
        lime_n = ex.normalize_attribution(ex.lime_explain(model, x, cfg))
        rep = ex.rashomon_disagreement(shap_n, lime_n, epsilon=args.epsilon)
        entry = {"row": i, "disagreement": rep.to_json_dict()}
        if expectations is not None:
            entry["physics_violations"] = [
                {"feature": v.feature, "expected_sign": v.expected_sign, "value": v.value}
                for v in ex.physics_consistency(shap_n, expectations, epsilon=args.epsilon)
            ]
            for v in entry["physics_violations"]:
                violations_table.append({"row": i, **v})
        per_row.append(entry)
    counts = [e["disagreement"]["count"] for e in per_row]
    histogram = {}
    for c in counts:
        histogram[c] = histogram.get(c, 0) + 1
    hist_rows = [
        {"disagreements": k, "rows": histogram[k]} for k in sorted(histogram)
    ]
    tables = {
        "disagreement_histogram.tsv": _table(hist_rows, ["disagreements", "rows"]),
    }
    if violations_table:
        tables["physics_violations.tsv"] = _table(
            violations_table, ["row", "feature", "expected_sign", "value"]
        )
    _write_run(
        args,
        {
            "dataset": d.name,
            "epsilon": args.epsilon,
            "rows": per_row,
            "histogram": hist_rows,
        },
        tables,
    )
    return EXIT_OK


def cmd_abduce(args) -> int:
    model = _load_model(args.model)
    grid = abd.load_grid(args.grid)
    seed = Rng(args.seed).derive("abduce").seed
    configs = abd.sample_configs(grid, args.n, seed=seed)
    results = abd.screen_configs(
        model, configs, target_fr=args.target_fr, fr_max=args.fr_max
    )
    background = np.array(
        [[c[name] for name in model.feature_names] for c in configs[:256]]
    )
    cfg = ex.ExplainConfig(background=background, seed=seed)
    report = abd.top_k_report(results, args.k, model, explain_cfg=cfg)
    rows = [
        {**r["config"], "predicted_fr": r["predicted_fr"], "feasibility": r["feasibility"]}
        for r in report["top"]
    ]
    tables = {}
    if rows:
        tables["top_configs.tsv"] = _table(rows, list(rows[0]))
    _write_run(
        args,
        {
            "target_fr": args.target_fr,
            "n_sampled": args.n,
            "status": report["status"],
            "top": report["top"],
            "rank1_attribution": report["rank1_attribution"],
        },
        tables,
    )
    return EXIT_OK


def cmd_cluster(args) -> int:
    d = _resolve_dataset(args)
    seed = Rng(args.seed).derive("cluster").seed
    if args.action == "fit":
        if args.k == "auto":
            selection = clu.select_k(d.X, seed=seed)
            k = selection["k"]
            table = selection["table"]
        else:
            k = int(args.k)
            table = None
        clustering = clu.kmeans(d.X, k, seed=seed)
        profiles = clu.characterize_clusters(d, clustering)
        report = {
            "dataset": d.name,
            "k": k,
            "selection_table": table,
            "clustering": clustering.to_json_dict(),
            "profiles": [p.to_json_dict() for p in profiles],
            "max_deviation_feature_cluster": clu.max_deviation_features(d, profiles),
        }
        _write_run(args, report)
        return EXIT_OK
    # hypothesize
    clustering = clu.kmeans(d.X, args.k_fixed, seed=seed)
    profiles = clu.characterize_clusters(d, clustering)
    profile = profiles[args.cluster]
    grid = abd.load_grid(args.grid)
    configs = clu.perturb_around_centroid(
        profile, grid, n=args.n, scale=args.scale, seed=seed
    )
    _write_run(
        args,
        {
            "dataset": d.name,
            "cluster": args.cluster,
            "scale": args.scale,
            "configs": configs,
        },
    )
    return EXIT_OK


def cmd_optimize(args) -> int:
    space = opt.load_design_space(args.space)
    catalog = opt.load_catalog(args.catalog)
    front = opt.optimize_design(
        space,
        catalog,
        r_limit=args.r_limit,
        budget=args.budget,
        seed=Rng(args.seed).derive("optimize").seed,
    )
    paradox = opt.paradox_detected(front)
    entries = [e.to_json_dict() for e in front]
    report = {
        "r_limit": args.r_limit,
        "budget": args.budget,
        "front": entries,
        "status": "paradox-detected" if paradox else ("ok" if front else "empty-result"),
    }
    if front:
        top = opt.top_r_entry(front)
        report["top_r"] = top.to_json_dict()
        snap = opt.snap_to_catalog(top.design, catalog)
        report["snap"] = {k: (v.to_json_dict() if k == "design" else v) for k, v in snap.items()}
        rows = [
            {
                "d_mm": e.design.diameter,
                "fc_mpa": e.design.fc,
                "filling": e.design.filling,
                "r_min": round(e.r, 2),
                "volume_mm3": round(e.volume, 1),
                "catalog_feasible": e.catalog_feasible,
                "nearest_section": e.nearest_section,
            }
            for e in front
        ]
        tables = {"pareto_front.tsv": _table(rows, list(rows[0]))}
    else:
        tables = {}
    _write_run(args, report, tables)
    return EXIT_PARADOX if paradox else EXIT_OK


def cmd_symreg(args) -> int:
    d = _resolve_dataset(args)
    if args.features:
        d = d.select_features(args.features.split(","))
    cfg = sr.GpConfig(
        population=args.population,
        generations=args.generations,
        max_nodes=args.max_nodes,
        parsimony=args.parsimony,
        seed=Rng(args.seed).derive("symreg").seed,
    )
    archive = sr.gp_search(d, cfg)
    doc = archive.to_json_dict(d)
    rows = [
        {
            "complexity": e["complexity"],
            "mse": round(e["mse"], 6),
            "r2": (round(e["r2"], 6) if e.get("r2") is not None else ""),
            "expression": e["expression"],
        }
        for e in doc["entries"]
    ]
    tables = {"archive.tsv": _table(rows, ["complexity", "mse", "r2", "expression"])}
    _write_run(args, {"dataset": d.name, "archive": doc}, tables)
    return EXIT_OK


def cmd_formula(args) -> int:
    params = {}
    for item in args.params or ():
        key, _, raw = item.partition("=")
        if not _:
            raise StrucmlError(f"parameter {item!r} is not key=value")
        params[key] = float(raw)
    result = evaluate_formula(args.name, params)
    _write_run(args, result)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Pipelines


def pipeline_induction(args) -> int:
    """Ingest, health gate, inverse-law baseline, GP search, forest comparison."""
    concrete = ds_mod.bundled("concrete", data_dir=args.data_dir)
    health = health_check(concrete)
    nsc = ds_mod.nsc_28d_subset(concrete)
    from .formulas import abram_constants, abrams_strength
    from .metrics import r_squared

    constants = abram_constants("28-day")
    baseline = np.array([abrams_strength(w, constants) for w in nsc.X[:, 0]])
    abram_r2 = r_squared(nsc.y, baseline)

    cfg = sr.GpConfig(
        population=args.population,
        generations=args.generations,
        seed=Rng(args.seed).derive("symreg").seed,
    )
    archive = sr.gp_search(nsc, cfg)
    best = archive.best_by_mse()
    best_r2 = r_squared(nsc.y, sr.eval_expression(best.tree, nsc.X))

    spec = ModelSpec(
        kind="forest",
        hyperparams={"n_trees": args.n_trees},
        seed=Rng(args.seed).derive("surrogate").seed,
    )
    forest_report, model = train_protocol(spec, concrete, k=10, seed=args.seed)
    importance = gini_importance(model)

    report = {
        "dataset": concrete.name,
        "health": health.to_json_dict(),
        "nsc_rows": nsc.n_rows,
        "abram_r2": abram_r2,
        "symreg_best": {
            "r2": best_r2,
            "complexity": best.complexity,
            "expression": sr.expression_to_string(best.tree),
        },
        "symreg_beats_abram": bool(best_r2 > abram_r2),
        "forest_cv": forest_report.to_json_dict(),
        "gini_importance": importance.to_json_dict(),
        "status": "ok",
    }
    _write_run(args, report)
    return EXIT_OK


def pipeline_abduction(args) -> int:
    """Train the fire surrogate, search the constrained grid, report top-5."""
    rc = ds_mod.bundled("rc_fire", data_dir=args.data_dir)
    spec = ModelSpec(
        kind="forest",
        hyperparams={"n_trees": args.n_trees, "min_leaf": 4},
        seed=Rng(args.seed).derive("surrogate").seed,
    )
    cv, model = train_protocol(spec, rc, k=10, seed=args.seed)
    grid = abd.load_grid("rc_fire")
    seed = Rng(args.seed).derive("abduce").seed
    configs = abd.sample_configs(grid, args.n, seed=seed)
    results = abd.screen_configs(model, configs, target_fr=args.target_fr)
    cfg = ex.ExplainConfig(background=rc.X, seed=seed)
    top = abd.top_k_report(results, 5, model, explain_cfg=cfg)
    report = {
        "dataset": rc.name,
        "cv": cv.to_json_dict(),
        "target_fr": args.target_fr,
        "n_sampled": args.n,
        "status": top["status"],
        "top": top["top"],
        "rank1_attribution": top["rank1_attribution"],
    }
    _write_run(args, report)
    return EXIT_OK


def pipeline_optimize(args) -> int:
    args.space = None
    args.catalog = None
    return cmd_optimize(args)


def pipeline_rashomon(args) -> int:
    """Fire surrogate, per-row attribution disagreement, physics audit."""
    rc = ds_mod.bundled("rc_fire", data_dir=args.data_dir)
    spec = ModelSpec(
        kind="forest",
        hyperparams={"n_trees": args.n_trees, "min_leaf": 4},
        seed=Rng(args.seed).derive("surrogate").seed,
    )
    cv, model = train_protocol(spec, rc, k=10, seed=args.seed)
    cfg = ex.ExplainConfig(
        background=rc.X, seed=Rng(args.seed).derive("explain").seed
    )
    expectations = ex.load_physics_expectations("rc_fire")
    rows = range(0, rc.n_rows, args.stride)
    per_row = []
    for i in rows:
        x = rc.X[i]
        shap_n = ex.normalize_attribution(ex.kernel_shap(model, x, cfg))
        lime_n = ex.normalize_attribution(ex.lime_explain(model, x, cfg))
        rep = ex.rashomon_disagreement(shap_n, lime_n, epsilon=args.epsilon)
        violations = ex.physics_consistency(shap_n, expectations, epsilon=args.epsilon)
        per_row.append(
            {
                "row": i,
                "count": rep.count,
                "physics_violations": [v.feature for v in violations],
            }
        )
    total = sum(e["count"] for e in per_row)
    report = {
        "dataset": rc.name,
        "cv": cv.to_json_dict(),
        "epsilon": args.epsilon,
        "rows_audited": len(per_row),
        "total_disagreements": total,
        "per_row": per_row,
        "status": "ok",
    }
    _write_run(args, report)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    handler = {
        "induction": pipeline_induction,
        "abduction": pipeline_abduction,
        "optimize": pipeline_optimize,
        "rashomon": pipeline_rashomon,
    }[args.pipeline]
    return handler(args)


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest["argv"]
    return main(argv)


# ---------------------------------------------------------------------------
# Parser


def _add_common(p, dataset=False, model=False):
    if dataset:
        p.add_argument("--dataset", required=True, help="bundled name or CSV path")
        p.add_argument("--schema", help="canonical schema name or schema JSON path")
    if model:
        p.add_argument("--model", required=True, help="model JSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strucml",
        description="Surrogate modeling, explainability audits, and design search",
    )
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--output", default="strucml-out")
    parser.add_argument("--config", help="key=value config file with [sections]")
    parser.add_argument("--data-dir", default=None, help="directory of real CSVs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("health", help="dataset health gates")
    _add_common(p, dataset=True)
    p.set_defaults(handler=cmd_health)

    p = sub.add_parser("assoc", help="association matrices")
    _add_common(p, dataset=True)
    p.set_defaults(handler=cmd_assoc)

    p = sub.add_parser("train", help="cross-validated surrogate training")
    _add_common(p, dataset=True)
    p.add_argument("--model-kind", default="forest",
                   choices=("tree", "forest", "knn", "linear", "ridge"))
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--hp", nargs="*", help="hyperparameters as key=value")
    p.add_argument("--save-model", help="write fitted model JSON here")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    _add_common(p, dataset=True, model=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("explain", help="attribute one prediction")
    _add_common(p, dataset=True, model=True)
    p.add_argument("--method", default="both", choices=("shap", "lime", "both"))
    p.add_argument("--row", type=int, required=True)
    p.set_defaults(handler=cmd_explain)

    p = sub.add_parser("rashomon", help="attribution disagreement audit")
    _add_common(p, dataset=True, model=True)
    p.add_argument("--rows", default="all", help="'all', an index, or lo:hi")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--physics", default=None, help="physics expectation table name")
    p.set_defaults(handler=cmd_rashomon)

    p = sub.add_parser("abduce", help="constrained design search")
    _add_common(p, model=True)
    p.add_argument("--target-fr", type=float, default=120.0)
    p.add_argument("--fr-max", type=float, default=abd.DEFAULT_FR_MAX)
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--grid", default="rc_fire")
    p.set_defaults(handler=cmd_abduce)

    p = sub.add_parser("cluster", help="k-means clustering / hypothesis sampling")
    p.add_argument("action", nargs="?", default="fit", choices=("fit", "hypothesize"))
    _add_common(p, dataset=True)
    p.add_argument("--k", default="auto", help="'auto' or an integer")
    p.add_argument("--k-fixed", type=int, default=5, help="k when hypothesizing")
    p.add_argument("--cluster", type=int, default=0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--scale", type=float, default=0.15)
    p.add_argument("--grid", default="rc_fire")
    p.set_defaults(handler=cmd_cluster)

    p = sub.add_parser("optimize", help="bi-objective design optimization")
    p.add_argument("--space", default=None, help="design space JSON path")
    p.add_argument("--catalog", default=None, help="section catalog JSON path")
    p.add_argument("--r-limit", type=float, default=120.0)
    p.add_argument("--budget", type=int, default=10000)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("symreg", help="symbolic regression search")
    _add_common(p, dataset=True)
    p.add_argument("--features", help="comma-separated feature subset")
    p.add_argument("--population", type=int, default=500)
    p.add_argument("--generations", type=int, default=40)
    p.add_argument("--max-nodes", type=int, default=30)
    p.add_argument("--parsimony", type=float, default=1e-4)
    p.set_defaults(handler=cmd_symreg)

    p = sub.add_parser("formula", help="evaluate a registered formula")
    p.add_argument("action", choices=("eval",))
    p.add_argument("--name", required=True)
    p.add_argument("--params", nargs="*", help="key=value parameters")
    p.set_defaults(handler=cmd_formula)

    p = sub.add_parser("pipeline", help="end-to-end case-study pipelines")
    p.add_argument("pipeline", choices=("induction", "abduction", "optimize", "rashomon"))
    p.add_argument("--population", type=int, default=300)
    p.add_argument("--generations", type=int, default=25)
    p.add_argument("--n-trees", type=int, default=60)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--target-fr", type=float, default=120.0)
    p.add_argument("--r-limit", type=float, default=120.0)
    p.add_argument("--budget", type=int, default=10000)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--stride", type=int, default=10)
    p.set_defaults(handler=cmd_pipeline)

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")
    p.set_defaults(handler=cmd_rerun)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Merge file-sourced key=value pairs; explicit flags win.

    Keys from a [global] section become top-level flags (inserted before the
    subcommand); keys from any other section become subcommand flags
    (appended at the end).
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    cp = configparser.ConfigParser()
    cp.read(path)
    front, back = [], []
    for section in cp.sections():
        for key, value in cp.items(section):
            flag = f"--{key.replace('_', '-')}"
            if flag in argv:
                continue
            (front if section == "global" else back).extend([flag, value])
    return argv[: at + 2] + front + argv[at + 2 :] + back


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    args._argv = argv
    try:
        return args.handler(args)
    except StrucmlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
