"""Empirical admissibility: a proportional strategy versus a runaway one.

pi_hat keeps sigma pi / x bounded, so its moment estimates settle as the
sample grows.  pi = x^2 levers up with wealth; paths overshoot to the
wealth floor and single paths dominate the moment sums.
"""

from _setup import T, Y0, model, u

from horizon_approx import SimConfig, StrategyMap, admissibility_diagnostics
from horizon_approx.montecarlo import pi_hat_strategy

cfg = SimConfig(n_paths=2000, dt=0.01, seed=1)
for s, x0 in ((pi_hat_strategy(u, model, T), 1.0), (StrategyMap(lambda t, x, y: x**2, "x_squared", False), 1.5)):
    d = admissibility_diagnostics(s, u, model, 0.0, x0, Y0, T, cfg)
    print(f"{s.label}: divergent={d.divergent}")
    for k, v in d.summary().items():
        print(f"    {k:>22} = {v}")
    for r in d.reasons:
        print(f"    reason: {r}")
