"""Which terminal utilities meet the asymptotic growth conditions?"""

from horizon_approx import GrowthCase, Log, Power, PowerMixture, check_growth_conditions
from horizon_approx.utility import exponential

cases = [
    ("power gamma=3, Case 2(3,3)", Power(3.0), GrowthCase.case2(3.0, 3.0)),
    ("log, Case 1", Log(), GrowthCase.case1()),
    ("mixture (2, 4), Case 2(2,4)", PowerMixture(1.0, 2.0, 1.0, 4.0), GrowthCase.case2(2.0, 4.0)),
    ("exponential, Case 1", exponential(1.0), GrowthCase.case1()),
]
for label, util, case in cases:
    rep = check_growth_conditions(util, case)
    print(f"{label}: {'passes' if rep.passed else 'fails'}")
    for line in rep.lines():
        print("    " + line)
