"""Small-time value-function approximation for portfolio choice under stochastic factors.

The closed-form surrogate ``Uhat = U + (T - t) u1`` of the HJB value
function, its sub/super-solution bounds, the portfolio it induces, a
recursive scheme extending it to long horizons, closed-form oracles and a
Monte Carlo engine for checking the strategies.
"""

from .errors import (
    CapabilityError,
    ConcavityError,
    ConfigError,
    ConstructionError,
    DomainError,
    HorizonApproxError,
    SimulationError,
    SingularityError,
)
from .market import MarketModel, builtin_chacko_viceira, builtin_constant, validate_model_bounds
from .montecarlo import (
    SimConfig,
    StrategyMap,
    admissibility_diagnostics,
    convergence_study,
    simulate_expected_utility,
)
from .oracle import CRRAParams, MertonParams, crra_exact_portfolio, crra_exact_value, merton_portfolio, merton_value
from .scheme import Partition, scheme_portfolio, scheme_value
from .surrogate import (
    hjb_residual,
    pi_from_partials,
    pi_hat,
    sandwich,
    u1,
    u2,
    u2_terms,
    value_hat,
)
from .utility import (
    Custom,
    GrowthCase,
    Log,
    Power,
    PowerMixture,
    check_growth_conditions,
    derivative,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError", "ConcavityError", "ConfigError", "ConstructionError", "DomainError",
    "HorizonApproxError", "SimulationError", "SingularityError",
    "MarketModel", "builtin_chacko_viceira", "builtin_constant", "validate_model_bounds",
    "SimConfig", "StrategyMap", "admissibility_diagnostics", "convergence_study", "simulate_expected_utility",
    "CRRAParams", "MertonParams", "crra_exact_portfolio", "crra_exact_value", "merton_portfolio", "merton_value",
    "Partition", "scheme_portfolio", "scheme_value",
    "hjb_residual", "pi_from_partials", "pi_hat", "sandwich", "u1", "u2", "u2_terms", "value_hat",
    "Custom", "GrowthCase", "Log", "Power", "PowerMixture", "check_growth_conditions", "derivative",
]
