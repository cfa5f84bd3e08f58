"""
The spike-and-slab penalty
==========================

Each off-diagonal entry of the precision matrix gets a prior that mixes two
Laplace densities: a narrow spike with scale ``v0`` and a wide slab with
scale ``v1``. The negative log of that mixture is the penalty. Near zero it
behaves like a Lasso with weight ``1/v0``; far from zero the weight drops
to ``1/v1``, so large entries are barely shrunk.
"""

# %%
# Penalty and its slope
# ---------------------
import numpy as np

from bagus import Hyperparameters, inclusion_prob, pen_ss, pen_ss_grad, subgradient_interval

h = Hyperparameters(v0=0.05, v1=1.0, eta=0.5)
for t in (0.01, 0.05, 0.1, 0.2, 0.5, 1.0):
    print(f"theta={t:5.2f}  pen={pen_ss(t, h):8.4f}  slope={pen_ss_grad(t, h):8.3f}  "
          f"P(slab)={inclusion_prob(t, h):.4f}")

# %%
# The slope starts at the edge of the subgradient interval at zero and
# decays to ``1/v1``.
lo, hi = subgradient_interval(h)
print("subgradient at 0:", (round(lo, 3), round(hi, 3)), " slab slope 1/v1 =", 1 / h.v1)

# %%
# Where the inclusion probability crosses one half
# ------------------------------------------------
# Setting the log-odds to zero gives the crossing point in closed form.
t_half = (np.log(h.v1 / h.v0) + np.log((1 - h.eta) / h.eta)) / (1 / h.v0 - 1 / h.v1)
print(f"P(slab) = 0.5 at |theta| = {t_half:.4f}; check: {inclusion_prob(t_half, h):.6f}")
