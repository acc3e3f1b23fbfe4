"""Sub- and super-solutions around the surrogate.

Shifting Uhat by -/+ c2 (T - t)^2 h(x) gives functions whose HJB residual has
a definite sign near the horizon; by comparison they bracket the value
function.  c2 is estimated on a grid from the eight second-order terms.
"""

import numpy as np
from _setup import T, Y0, case, model, params, u

from horizon_approx import crra_exact_value, hjb_residual, sandwich

sw = sandwich(u, model, T, case)
print(f"c2 = {sw.c2:.5f}, validity window T - t < {sw.delta}")
print("largest term sups:", ", ".join(f"{s:.2e}" for s in sw.term_sups))

print(f"\n{'t':>5} {'lower':>12} {'exact':>12} {'upper':>12} {'res(lower)':>12} {'res(upper)':>12}")
for t in (1.2, 1.5, 1.8, 1.95):
    lo = float(sw.lower.value(t, 1.0, Y0))
    ex = float(crra_exact_value(t, 1.0, Y0, params))
    hi = float(sw.upper.value(t, 1.0, Y0))
    rl = float(hjb_residual(sw.lower, t, 1.0, Y0, model))
    rh = float(hjb_residual(sw.upper, t, 1.0, Y0, model))
    print(f"{t:5.2f} {lo:12.6f} {ex:12.6f} {hi:12.6f} {rl:12.2e} {rh:12.2e}")

# the band is wide in absolute terms but the ordering holds everywhere in the window
t, x, y = np.meshgrid(np.linspace(1.05, 1.99, 10), np.logspace(-1, 1, 10), np.linspace(15, 40, 6), indexing="ij")
ex = crra_exact_value(t, x, y, params)
print("\nordering holds on a 10x10x6 grid:", bool(np.all(sw.lower.value(t, x, y) <= ex) and np.all(ex <= sw.upper.value(t, x, y))))
