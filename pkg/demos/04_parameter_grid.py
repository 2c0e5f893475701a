"""
Sensitivity to lambda1 and lambda2
==================================

A coarse version of the log-spaced sensitivity grid, on a harder Tetra
variant with fewer training points per class.
"""
import numpy as np

import discrim_embed as de

data = de.gen_tetra(40, 30, seed=3)
plan = de.SplitPlan(train_per_class=10, n_repeats=5, base_seed=0)
spec = de.MethodSpec("sda-g-1", de.SolverConfig(max_iter=50))

grid = de.sweep_params(data, spec, plan,
                       lambda1_grid=np.logspace(-5, 0, 3),
                       lambda2_grid=np.logspace(-3, 1, 3))

print("rows: lambda1, columns: lambda2, cells: mean accuracy (%)")
print(" " * 9 + "".join(f"{b:>9.0e}" for b in grid["lambda2_grid"]))
for a, row in zip(grid["lambda1_grid"], grid["cells"]):
    print(f"{a:>9.0e}" + "".join(f"{c.mean:9.2f}" for c in row))
