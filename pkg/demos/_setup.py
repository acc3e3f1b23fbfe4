"""Shared parameter set for the demos: power utility (gamma = 3) in the square-root volatility model."""

from horizon_approx import CRRAParams, GrowthCase, Power

MU, M, BETA, RHO, T = 0.0811, 27.9345, 1.12, 0.5241, 2.0
Y0 = M

params = CRRAParams(3.0, MU, M, BETA, RHO, T)
model = params.market()
u = Power(3.0)
case = GrowthCase.case2(3.0, 3.0)
