"""Empirical convergence order of the surrogate error as t -> T."""

import numpy as np
from _setup import T, Y0, model, params, u

from horizon_approx import convergence_study, crra_exact_value, value_hat


def err(t, x, y):
    return crra_exact_value(t, x, y, params) - value_hat(t, x, y, u, model, T).value


ts = [1.5, 1.6, 1.7, 1.8, 1.9, 1.99]
for t in ts:
    print(f"T - t = {T - t:5.2f}   |U - Uhat| = {abs(float(err(t, 1.0, Y0))):.3e}")
print(f"least-squares slope of log|err| vs log(T - t): {convergence_study(err, ts, 1.0, Y0, T):.3f}")
print(f"ratio of the two table errors: log(23.8)/log(5) = {np.log(23.8) / np.log(5):.3f}")
