"""
Forecasting with an estimated precision matrix
==============================================

Split each observation into an observed head ``z1`` (first ``k``
coordinates) and a target tail. Under a Gaussian model the best predictor
of the tail is the conditional mean, which only needs the precision
matrix blocks: ``mu2 - inv(Theta22) Theta21 (z1 - mu1)``.
"""

# %%
import numpy as np

from bagus import (ForecastTask, SimulationSpec, aafe, default_grid, forecast, sample_mvn,
                   simulate, training_mean, tune)

theta0 = simulate(SimulationSpec("ar2", p=12, n=1, seed=0)).truth
train = sample_mvn(theta0, 150, seed=21).rows + 5.0
test = sample_mvn(theta0, 60, seed=22).rows + 5.0
k = 6

# %%
# Fit on the training rows (centered, since the mean is unknown), then
# predict the last six coordinates of every test row.
best = tune(train, default_grid(*train.shape), center=True).best_fit
task = ForecastTask(mu=training_mean(train), theta=best.theta_hat, split=k)
pred = forecast(task, test[:, :k])

# %%
# Compare with predicting the training mean
# -----------------------------------------
err = aafe(pred, test[:, k:])
base = aafe(np.broadcast_to(task.mu[k:], pred.shape), test[:, k:])
print("AAFE per target coordinate:", np.round(err, 3))
print("marginal-mean AAFE:        ", np.round(base, 3))
print(f"average {err.mean():.3f} vs {base.mean():.3f}")
