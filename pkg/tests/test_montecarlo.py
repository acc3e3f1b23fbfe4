import math

import numpy as np
import pytest

from conftest import T, Y0
from horizon_approx import montecarlo as mc
from horizon_approx.errors import DomainError, SimulationError
from horizon_approx.market import builtin_chacko_viceira, builtin_constant
from horizon_approx.oracle import crra_exact_value
from horizon_approx.surrogate import value_hat
from horizon_approx.utility import GrowthCase, Log, Power


@pytest.fixture(scope="module")
def const_market():
    return builtin_constant(0.08, 0.2, 0.0, 0.0, 0.0)


def log_optimal(mdl):
    return mc.StrategyMap(lambda t, x, y: mdl.lam(y) * x / mdl.sigma(y), "log_optimal", True)


def test_zero_strategy_is_deterministic(power3, model):
    est = mc.simulate_expected_utility(mc.zero_strategy(), power3, model, 1.5, 2.0, Y0, T, mc.SimConfig(n_paths=1000, dt=0.01))
    assert est.mean == -0.5 / 4.0
    assert est.se == 0.0
    assert est.min_wealth == 2.0
    assert est.moment_sigma_pi2 == 0.0 and est.sup_sigma_pi_over_x == 0.0


def test_bit_identical_reruns_and_thread_independence(power3, model):
    s = mc.pi_hat_strategy(power3, model, T)
    cfg = mc.SimConfig(n_paths=3000, dt=0.01, seed=7, antithetic=True, block_size=512)
    a = mc.simulate_expected_utility(s, power3, model, 1.8, 1.0, Y0, T, cfg)
    b = mc.simulate_expected_utility(s, power3, model, 1.8, 1.0, Y0, T, cfg)
    c = mc.simulate_expected_utility(s, power3, model, 1.8, 1.0, Y0, T, mc.SimConfig(**{**cfg.__dict__, "threads": 4}))
    for e in (b, c):
        assert e.mean == a.mean and e.se == a.se and e.min_wealth == a.min_wealth
    d = mc.simulate_expected_utility(s, power3, model, 1.8, 1.0, Y0, T, mc.SimConfig(**{**cfg.__dict__, "seed": 8}))
    assert d.mean != a.mean


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv(mc.THREADS_ENV, "3")
    assert mc.SimConfig().worker_count() == 3
    assert mc.SimConfig(threads=2).worker_count() == 2


def test_log_utility_matches_closed_form(const_market):
    lam = 0.4
    cfg = mc.SimConfig(n_paths=20000, dt=1e-3, seed=3)
    est = mc.simulate_expected_utility(log_optimal(const_market), Log(), const_market, 0.9, 1.5, 0.0, 1.0, cfg)
    want = math.log(1.5) + lam**2 * 0.1 / 2
    assert abs(est.mean - want) < 3 * est.se


def test_log_euler_keeps_wealth_positive(const_market):
    cfg = mc.SimConfig(n_paths=2000, dt=0.01, seed=1, scheme="log_euler")
    s = mc.StrategyMap(lambda t, x, y: 8.0 * x, "leveraged", True)
    est = mc.simulate_expected_utility(s, Log(), const_market, 0.0, 1.0, 0.0, 1.0, cfg)
    assert est.min_wealth > 0 and est.floor_hit_fraction == 0.0
    with pytest.raises(DomainError):
        mc.simulate_expected_utility(mc.StrategyMap(lambda t, x, y: x * x, "sq", False), Log(), const_market, 0.0, 1.0, 0.0, 1.0, cfg)


def test_antithetic_reduces_se(const_market):
    s = mc.StrategyMap(lambda t, x, y: 0.5 + 0 * x, "constant", False)
    off = mc.simulate_expected_utility(s, Log(), const_market, 0.5, 2.0, 0.0, 1.0, mc.SimConfig(n_paths=4000, dt=0.01, seed=5))
    on = mc.simulate_expected_utility(s, Log(), const_market, 0.5, 2.0, 0.0, 1.0, mc.SimConfig(n_paths=4000, dt=0.01, seed=5, antithetic=True))
    assert on.se <= off.se
    assert on.n_paths == 2000 and on.n_simulated == 4000


def test_standard_error_formula(const_market):
    s = mc.StrategyMap(lambda t, x, y: 0.5 + 0 * x, "constant", False)
    est = mc.simulate_expected_utility(s, Log(), const_market, 0.5, 2.0, 0.0, 1.0, mc.SimConfig(n_paths=500, dt=0.05, seed=2))
    u = est.per_path["utility"]
    assert est.se == pytest.approx(np.std(u, ddof=1) / math.sqrt(len(u)), rel=1e-12)


def test_correlated_increments():
    n, steps, rho = 20000, 10, 0.5241
    dw1, db = mc.brownian_increments(n, steps, 1e-3, rho, seed=11)
    r = np.corrcoef(dw1.ravel(), db.ravel())[0, 1]
    assert abs(r - rho) < 3 / math.sqrt(n * steps)
    assert np.var(db) == pytest.approx(1e-3, rel=0.02)


def test_factor_reflection_is_counted(power3):
    # a low long-run level keeps the square-root factor near zero
    low = builtin_chacko_viceira(0.08, 0.01, 1.12, 0.5)
    cfg = mc.SimConfig(n_paths=500, dt=0.01, seed=4)
    est = mc.simulate_expected_utility(mc.zero_strategy(), power3, low, 1.0, 1.0, 0.01, T, cfg)
    assert est.reflections > 0


def test_non_finite_strategy_names_path(power3, model):
    bad = mc.StrategyMap(lambda t, x, y: np.where(np.arange(x.size) == 5, np.nan, 0.0), "bad", True)
    with pytest.raises(SimulationError, match="path 5 at step 0"):
        mc.simulate_expected_utility(bad, power3, model, 1.9, 1.0, Y0, T, mc.SimConfig(n_paths=10, dt=0.01))


def test_config_validation():
    with pytest.raises(DomainError):
        mc.SimConfig(n_paths=0)
    with pytest.raises(DomainError):
        mc.SimConfig(scheme="milstein")
    with pytest.raises(DomainError):
        mc.SimConfig(antithetic=True, block_size=7)
    with pytest.raises(DomainError):
        mc.SimConfig(dt=0.5).steps(0.1)
    with pytest.raises(DomainError, match="budget"):
        mc.SimConfig(n_paths=10**6, dt=1e-6).steps(100.0)


def test_pi_hat_close_to_exact(power3, model, params):
    cfg = mc.SimConfig(n_paths=20000, dt=1e-3, seed=1, antithetic=True)
    est = mc.simulate_expected_utility(mc.pi_hat_strategy(power3, model, T), power3, model, 1.9, 1.0, Y0, T, cfg)
    assert abs(est.mean - crra_exact_value(1.9, 1.0, Y0, params)) < 3 * est.se + 1e-4


def test_diagnostics_zero_strategy(power3, model):
    d = mc.admissibility_diagnostics(mc.zero_strategy(), power3, model, 1.0, 1.0, Y0, T, mc.SimConfig(n_paths=200, dt=0.01))
    assert d.full.moment_sigma_pi2 == 0.0 and d.full.moment_weighted == 0.0
    assert d.full.sup_sigma_pi_over_x == 0.0
    assert not d.divergent


def test_diagnostics_pi_hat_stable(power3, model):
    d = mc.admissibility_diagnostics(
        mc.pi_hat_strategy(power3, model, T), power3, model, 0.0, 1.0, Y0, T, mc.SimConfig(n_paths=2000, dt=0.01, seed=2)
    )
    assert not d.divergent
    assert math.isfinite(d.full.sup_sigma_pi_over_x)
    assert d.growth_sup_ratio == pytest.approx(1.0, abs=0.1)
    assert d.moment_gamma == 3.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_diagnostics_flag_quadratic_strategy(power3, model, seed):
    # leverage sigma pi / x = sigma x grows with wealth; from x0 = 1.5 paths overshoot to the floor
    s = mc.StrategyMap(lambda t, x, y: x**2, "x_squared", False)
    d = mc.admissibility_diagnostics(s, power3, model, 0.0, 1.5, Y0, T, mc.SimConfig(n_paths=2000, dt=0.01, seed=seed))
    assert d.divergent
    assert d.full.floor_hit_fraction > 0
    assert any("floor" in r for r in d.reasons)


def test_diagnostics_warn_on_gamma_discrepancy(const_market):
    u = Power(0.5)
    with pytest.warns(RuntimeWarning, match="max\\(alpha, beta\\)"):
        d = mc.admissibility_diagnostics(
            mc.zero_strategy(), u, const_market, 0.0, 1.0, 0.0, 1.0, mc.SimConfig(n_paths=10, dt=0.1), case=GrowthCase.case2(0.5, 0.5)
        )
    assert d.gamma_discrepancy and d.moment_gamma > 1.0


def test_convergence_study_examples(power3, model, params):
    ts = [1.0, 1.5, 1.9, 1.99]
    assert mc.convergence_study(lambda t, x, y: 3.0 * (T - t) ** 2, ts, 1.0, Y0, T) == pytest.approx(2.0)
    assert mc.convergence_study(lambda t, x, y: 0.1, ts, 1.0, Y0, T) == pytest.approx(0.0, abs=1e-12)
    # two table errors: log(23.8) / log(5)
    two = {1.5: 3.33e-4, 1.9: 1.4e-5}
    assert mc.convergence_study(lambda t, x, y: two[t], [1.5, 1.9], 1.0, Y0, T) == pytest.approx(1.97, abs=0.005)

    def err(t, x, y):
        return crra_exact_value(t, x, y, params) - value_hat(t, x, y, power3, model, T).value

    assert 1.8 <= mc.convergence_study(err, [1.5, 1.6, 1.7, 1.8, 1.9, 1.99], 1.0, Y0, T) <= 2.2


def test_convergence_study_drops_zero_errors():
    vals = {0.5: 0.0, 1.0: 1.0, 1.5: 0.25}
    with pytest.warns(RuntimeWarning, match="dropped 1"):
        slope = mc.convergence_study(lambda t, x, y: vals[t], [0.5, 1.0, 1.5], 1.0, 0.0, 2.0)
    assert slope == pytest.approx(2.0)
    with pytest.raises(DomainError):
        mc.convergence_study(lambda t, x, y: 1.0, [1.0, 0.5], 1.0, 0.0, 2.0)
    with pytest.raises(DomainError):
        mc.convergence_study(lambda t, x, y: 1.0, [1.0, 2.0], 1.0, 0.0, 2.0)
