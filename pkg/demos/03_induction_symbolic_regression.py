"""
Induction: rediscovering a strength law from data
=================================================

On the normal-strength 28-day subset, the textbook inverse water/cement law
with fixed constants explains most but not all of the variance.  A symbolic
regression search over the same single feature finds expressions that fit
better, trading accuracy against expression size along a Pareto archive.

Takes about half a minute with the default search budget.
"""

import numpy as np

from strucml.datasets import bundled, nsc_28d_subset
from strucml.formulas import abram_constants, abrams_strength
from strucml.metrics import r_squared
from strucml.symreg import GpConfig, eval_expression, expression_to_string, gp_search

concrete = bundled("concrete")
nsc = nsc_28d_subset(concrete)
print(f"normal-strength 28-day subset: {nsc.n_rows} rows, feature = w/c ratio")

constants = abram_constants("28-day")
baseline = np.array([abrams_strength(w, constants) for w in nsc.X[:, 0]])
abram_r2 = r_squared(nsc.y, baseline)
print(f"fixed-constant inverse law: R^2 = {abram_r2:.3f}")

archive = gp_search(nsc, GpConfig(population=400, generations=30, seed=42))
print("\nPareto archive (complexity vs accuracy):")
print(f"  {'nodes':>5s}  {'mse':>9s}  {'R^2':>6s}  expression")
for entry in archive.entries:
    r2 = r_squared(nsc.y, eval_expression(entry.tree, nsc.X))
    marker = " <-- beats the fixed law" if r2 > abram_r2 else ""
    print(
        f"  {entry.complexity:5d}  {entry.mse:9.3f}  {r2:6.3f}  "
        f"{expression_to_string(entry.tree)[:70]}{marker}"
    )

best = archive.best_by_mse()
best_r2 = r_squared(nsc.y, eval_expression(best.tree, nsc.X))
print(f"\nbest expression R^2 = {best_r2:.3f} vs fixed-law {abram_r2:.3f}")
print("higher accuracy, same single feature, but the recovered form carries")
print("no more mechanism than the law it beats; that is the interpretability trade.")
