"""
Surrogate training protocol and feature importance
==================================================

Shuffle/split into train/validation/test, 10-fold cross-validation on the
pooled train+validation rows, and a final held-out check.  Then two views of
what the forest uses: summed split variance reduction and permutation
importance.
"""

from strucml.datasets import bundled
from strucml.surrogate import (
    ModelSpec,
    gini_importance,
    permutation_importance,
    train_protocol,
)

concrete = bundled("concrete")
spec = ModelSpec("forest", {"n_trees": 60}, seed=1)
report, model = train_protocol(spec, concrete, k=10, seed=42)

print("10-fold cross-validation on train+validation:")
print(f"  R^2 per fold: {[round(r.r2, 3) for r in report.fold_reports]}")
print(f"  mean R^2 = {report.mean_r2:.3f}")
print(f"held-out test: R^2 = {report.test.r2:.3f}, MAE = {report.test.mae:.2f} MPa")

gini = gini_importance(model)
perm = permutation_importance(
    model, concrete.X, concrete.y, repeats=3, seed=7
)
print("\nfeature importance (split-gain vs permutation):")
print(f"  {'feature':>16s}  {'gini':>6s}  {'perm rmse increase':>18s}")
for name, g, p in sorted(
    zip(gini.feature_names, gini.values, perm.values), key=lambda t: -t[1]
):
    print(f"  {name:>16s}  {g:6.3f}  {p:18.2f}")
