"""
ROC curves over the tuning grid
===============================

Sweeping the threshold on the inclusion probabilities traces a ROC curve
for each grid point. The curves are written as CSV so any plotting tool
can draw them.
"""

# %%
import csv
import os
import tempfile

from bagus import (SimulationSpec, default_grid, fit, graph_from_precision, roc_sweep,
                   sample_covariance, simulate)

data = simulate(SimulationSpec("circle", p=20, n=100, seed=1))
truth = graph_from_precision(data.truth)
s = sample_covariance(data)

curves = []
for i, h in enumerate(default_grid(data.n, data.p)):
    curve, area = roc_sweep(fit(s, data.n, h).pmat, truth, num_points=50)
    curves.append((i, curve, area))
    print(f"grid point {i:2d}: AUC {area:.3f}")

# %%
# Write the best curve
# --------------------
best = max(curves, key=lambda c: c[2])
path = os.path.join(tempfile.mkdtemp(), "roc.csv")
with open(path, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["fpr", "tpr"])
    w.writerows(best[1])
print(f"best grid point {best[0]} (AUC {best[2]:.3f}) written to {path}")
