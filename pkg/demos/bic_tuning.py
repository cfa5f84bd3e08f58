"""
Choosing hyperparameters by BIC
===============================

The default grid has 16 points: four spike scales
``v0 = tau = c / sqrt(n log p)`` with ``c`` in (0.4, 2, 4, 20), each paired
with ``v1 = v0`` times (1.5, 3, 5, 10). Every point is fitted and the one
with the smallest BIC wins.
"""

# %%
from bagus import (SimulationSpec, confusion, default_grid, graph_from_precision, mcc,
                   simulate, threshold_graph, tune)

data = simulate(SimulationSpec("ar2", p=15, n=120, seed=8))
grid = default_grid(data.n, data.p)
report = tune(data, grid)

# %%
# Scores across the grid
# ----------------------
for i, (h, score, edges) in enumerate(zip(report.grid, report.scores, report.edge_counts)):
    mark = "  <- selected" if i == report.best_index else ""
    print(f"{i:2d}  v0={h.v0:.4f}  v1={h.v1:.4f}  BIC={score:10.2f}  edges={edges:3d}{mark}")

# %%
# Recovery at the selected point
# ------------------------------
truth = graph_from_precision(data.truth)
est = threshold_graph(report.best_fit.pmat)
tp, fp, tn, fn = confusion(est, truth)
print(f"TP={tp} FP={fp} TN={tn} FN={fn}  MCC={mcc(tp, fp, tn, fn):.3f}")
