"""
The disagreement audit: two explainers, one model
=================================================

Shapley-kernel attributions consider every feature coalition; the local
linear surrogate sees only the neighborhood of one prediction.  On the same
fitted forest and the same row they can assign a feature opposite signs.
The audit counts those sign flips per row and also checks attributions
against stated fire-mechanics expectations (longer and more eccentric
columns should not *help*).
"""

import numpy as np

from strucml.datasets import bundled
from strucml.explain import (
    ExplainConfig,
    kernel_shap,
    lime_explain,
    load_physics_expectations,
    normalize_attribution,
    physics_consistency,
    rashomon_disagreement,
)
from strucml.surrogate import ModelSpec, train_protocol

rc = bundled("rc_fire")
spec = ModelSpec("forest", {"n_trees": 80, "min_leaf": 3}, seed=1)
cv, model = train_protocol(spec, rc, k=10, seed=42)
print(f"forest: train R^2 = {cv.train.r2:.3f}, test R^2 = {cv.test.r2:.3f}")

cfg = ExplainConfig(background=rc.X, seed=42)
expectations = load_physics_expectations("rc_fire")

rows = range(0, rc.n_rows, 7)
histogram = {}
violating_rows = 0
worst = None
for i in rows:
    shap_n = normalize_attribution(kernel_shap(model, rc.X[i], cfg))
    lime_n = normalize_attribution(lime_explain(model, rc.X[i], cfg))
    rep = rashomon_disagreement(shap_n, lime_n, epsilon=0.05)
    histogram[rep.count] = histogram.get(rep.count, 0) + 1
    violations = physics_consistency(shap_n, expectations, epsilon=0.05)
    violating_rows += bool(violations)
    if worst is None or rep.count > worst[1]:
        worst = (i, rep.count, rep, violations)

print(f"\naudited {len(list(rows))} rows; disagreement-count histogram:")
for count in sorted(histogram):
    print(f"  {count} opposed features: {histogram[count]:3d} rows")
print(f"rows with physics-inconsistent attributions: {violating_rows}")

i, count, rep, violations = worst
print(f"\nmost conflicted row ({i}): {count} opposed features")
print(f"  {'feature':>16s}  {'shapley':>8s}  {'local':>8s}")
for f in rep.per_feature:
    mark = "  <-- opposite signs" if f.opposed else ""
    print(f"  {f.feature:>16s}  {f.shap_norm:+8.3f}  {f.lime_norm:+8.3f}{mark}")
if violations:
    print("  physics violations: " + ", ".join(v.feature for v in violations))
