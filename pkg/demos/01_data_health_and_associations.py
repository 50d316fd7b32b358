"""
Dataset health gates and association matrices
=============================================

Load the bundled concrete-mix table, check the observations-per-feature
gates, and look at which mix proportions move with strength.
"""

import numpy as np

from strucml.data import association_matrices, health_check
from strucml.datasets import bundled, is_replica

concrete = bundled("concrete")
print(f"dataset: {concrete.name}  ({concrete.n_rows} rows x {concrete.n_features} features)")
if is_replica(concrete):
    print("note: running on the bundled synthetic replica; drop concrete.csv")
    print("      into $STRUCML_DATA_DIR to use the real table instead\n")

# health gates: 10 / 23 observations per feature, 3x / 5x ratios
report = health_check(concrete)
print(f"observations per feature: {report.obs_per_feature}")
print(f"  >= 10 per feature: {report.pass_vansmeden_10}")
print(f"  >= 23 per feature: {report.pass_riley_23}")
print(f"  ratio >= 3: {report.pass_ratio_3},  ratio >= 5: {report.pass_ratio_5}")

# associations between every feature and the strength target
assoc = association_matrices(concrete)
names = assoc.variable_names
target_col = len(names) - 1
print("\npearson / spearman / mutual information vs strength:")
order = np.argsort(-np.abs(assoc.pearson[:-1, target_col]))
for j in order:
    print(
        f"  {names[j]:>16s}:  r={assoc.pearson[j, target_col]:+.3f}"
        f"  rho={assoc.spearman[j, target_col]:+.3f}"
        f"  mi={assoc.mutual_info[j, target_col]:.3f}"
    )
