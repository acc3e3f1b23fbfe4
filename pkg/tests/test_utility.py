import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd1, rel_err
from horizon_approx.errors import CapabilityError, ConfigError, ConstructionError, DomainError
from horizon_approx.utility import (
    Custom,
    GrowthCase,
    Log,
    Power,
    PowerMixture,
    check_growth_conditions,
    default_growth_case,
    derivative,
    exponential,
    reference_functions,
    utility_from_config,
    weight_h,
)


def test_power_derivatives_closed_form():
    u = Power(3.0)
    assert derivative(u, 0, 1.0) == -0.5
    assert derivative(u, 1, 2.0) == pytest.approx(0.125)
    assert derivative(u, 2, 1.0) == -3.0
    assert derivative(u, 4, 1.0) == pytest.approx(-60.0)


def test_log_derivatives():
    u = Log()
    assert derivative(u, 0, math.e) == pytest.approx(1.0)
    assert derivative(u, 3, 2.0) == pytest.approx(2.0 / 8.0)
    assert derivative(u, 4, 1.0) == pytest.approx(-6.0)


@pytest.mark.parametrize("u", [Power(3.0), Power(0.5), Log(), PowerMixture(1.0, 2.0, 0.5, 4.0)])
def test_derivatives_match_finite_differences(u):
    xs = np.array([0.3, 1.0, 2.5])
    for k in range(4):
        fd = fd1(lambda v: derivative(u, k, v), xs, 1e-4 * xs)
        assert rel_err(derivative(u, k + 1, xs), fd) < 1e-7


def test_mixture_is_sum_of_powers():
    u = PowerMixture(2.0, 3.0, 0.5, 0.5)
    x = 1.7
    want = 2.0 * derivative(Power(3.0), 2, x) + 0.5 * derivative(Power(0.5), 2, x)
    assert derivative(u, 2, x) == pytest.approx(want)


def test_custom_order_capability():
    u = exponential(1.0)
    assert u.derivative_order_available == 5
    assert derivative(u, 1, 0.0 + 1.0) == pytest.approx(math.exp(-1.0))
    with pytest.raises(CapabilityError):
        derivative(u, 6, 1.0)
    with pytest.raises(ConstructionError):
        Custom((lambda x: x,) * 3)


def test_domain_and_construction_errors():
    with pytest.raises(DomainError):
        derivative(Power(3.0), 1, 0.0)
    with pytest.raises(DomainError):
        derivative(Log(), 0, np.array([1.0, -1.0]))
    with pytest.raises(ConstructionError):
        Power(1.0)
    with pytest.raises(ConstructionError):
        PowerMixture(1.0, 2.0, -1.0, 3.0)
    with pytest.raises(ConstructionError):
        GrowthCase.case2(1.0, 2.0)


def test_power_ratio_is_constant_under_matching_case():
    # M is the sum of the two reference powers, so with alpha = beta = gamma the ratio is 1/2
    rep = check_growth_conditions(Power(3.0), GrowthCase.case2(3.0, 3.0))
    assert rep.passed
    for k in range(1, 5):
        assert rep.ratio_inf[k] == pytest.approx(0.5, rel=1e-12)
        assert rep.ratio_sup[k] == pytest.approx(0.5, rel=1e-12)


def test_log_passes_case1_and_mixture_passes_its_case():
    assert check_growth_conditions(Log(), GrowthCase.case1()).passed
    u = PowerMixture(1.0, 2.0, 1.0, 4.0)
    assert check_growth_conditions(u, default_growth_case(u)).passed


def test_exponential_fails_growth():
    rep = check_growth_conditions(exponential(1.0), GrowthCase.case1())
    assert not rep.passed
    assert all(not v for v in rep.passed_by_order.values())
    assert len(rep.lines()) == 4


def test_power_against_wrong_case_fails():
    # ratio drifts like x^(1-gamma) at the edges of the grid
    assert not check_growth_conditions(Power(3.0), GrowthCase.case1()).passed


def test_gamma_discrepancy():
    c = GrowthCase.case2(0.5, 0.8)
    assert c.gamma_discrepancy
    assert c.gamma_admissibility == 0.8
    assert c.moment_gamma > 1.0
    assert GrowthCase.case1().moment_gamma == 1.0
    assert GrowthCase.case2(3.0, 2.0).moment_gamma == 3.0


def test_reference_functions_and_weight():
    c = GrowthCase.case2(3.0, 3.0)
    m, h, g, ht = reference_functions(c, 1.0)
    assert m == pytest.approx(-1.0)
    assert h == pytest.approx(2.0)
    assert weight_h(c, 1.0, 1) == pytest.approx(-4.0)
    assert weight_h(c, 1.0, 2) == pytest.approx(12.0)
    assert weight_h(GrowthCase.case1(), 3.0, 0) == 1.0
    _, h1, _, _ = reference_functions(GrowthCase.case1(), 2.0)
    assert h1 == 1.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 8.0).filter(lambda g: abs(g - 1) > 0.05), st.floats(0.05, 20.0))
def test_power_is_increasing_and_concave(gamma, x):
    u = Power(gamma)
    assert derivative(u, 1, x) > 0
    assert derivative(u, 2, x) < 0


def test_utility_from_config():
    assert utility_from_config({"family": "power", "gamma": 3}) == Power(3.0)
    assert isinstance(utility_from_config({"family": "log"}), Log)
    assert utility_from_config({"family": "mixture", "c_a": 1, "alpha": 2, "c_b": 1, "beta": 4}).beta == 4.0
    with pytest.raises(ConfigError, match="utility"):
        utility_from_config({"family": "power"})
    with pytest.raises(ConfigError, match="utility.family"):
        utility_from_config({"family": "quadratic"})
    with pytest.raises(ConfigError):
        utility_from_config({"family": "power", "gamma": 1})
