"""Parameter fitting: least squares and the measurement-error likelihood.

Run: python demos/04_fitting.py
"""

import numpy as np

from esrlab import expr as ex
from esrlab.dataset import synthetic_dataset
from esrlab.fitting import FitConfig, fit

data = synthetic_dataset()
print(f"dataset: {len(data)} points, x in [{data.x.min():.2f}, "
      f"{data.x.max():.2f}]")

# Least squares with multi-restart quasi-Newton search.  The synthetic data
# was generated from this very structure, so the fit is nearly perfect.
e = ex.parse("p1 / (1.0 / (p2 + x) - p3 ^ x)")
res = fit(e, data, "mse", FitConfig(restarts=40), seed=1)
print(f"\n{ex.render(e)}")
print(f"  mse      {res.objective:.3e}")
print(f"  theta    {tuple(round(t, 4) for t in res.theta)}")
print(f"  restarts {res.restarts_used}, objective evals {res.n_obj_evals}")

# A constant fits to the mean of y; its error is the variance.
res = fit(ex.parse("p1"), data, "mse", seed=0)
print(f"\nconstant p1: theta={res.theta[0]:.4f} "
      f"(mean y = {float(np.mean(data.y)):.4f}), mse={res.objective:.4e}")

# The marginal likelihood uses the sigma columns and adds three
# hyperparameters (mean and width of the latent-x prior, intrinsic scatter),
# all optimized jointly; the reported objective is the negative log-likelihood.
res = fit(ex.parse("p1 * x + p2"), data, "mnr", FitConfig(restarts=10),
          seed=2)
print(f"\nlinear fit under the marginal likelihood:")
print(f"  neg logL  {res.objective:.2f}")
print(f"  theta     {tuple(round(t, 3) for t in res.theta)}")
print(f"  sigma_int {res.mnr.sigma_int:.3f}  mu {res.mnr.mu:.3f}  "
      f"omega {res.mnr.omega:.3f}")
