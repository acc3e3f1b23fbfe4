"""Terminal utility functions and the asymptotic growth conditions they must meet.

Built-in families (power, log, power mixture) expose closed-form derivatives
of any order.  A :class:`Custom` utility carries an explicit list of
derivative callables and supports only as many orders as it was given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, ConstructionError, DomainError, SingularityError

__all__ = [
    "UtilitySpec",
    "Power",
    "Log",
    "PowerMixture",
    "Custom",
    "exponential",
    "GrowthCase",
    "GrowthReport",
    "derivative",
    "reference_functions",
    "reference_derivative",
    "check_growth_conditions",
    "default_growth_case",
    "utility_from_config",
]

UNBOUNDED = math.inf


def _check_x(x):
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("wealth x must be strictly positive")
    return xa if xa.ndim else float(xa)


def _power_derivative(gamma, k, x):
    """k-th derivative of x**(1-gamma)/(1-gamma)."""
    if k == 0:
        return x ** (1.0 - gamma) / (1.0 - gamma)
    coef = 1.0
    for j in range(k - 1):
        coef *= -gamma - j
    return coef * x ** (-gamma - (k - 1))


class UtilitySpec:
    """Base class; subclasses implement ``_derivative``."""

    derivative_order_available: float = UNBOUNDED
    label = "custom"

    def __call__(self, x):
        return derivative(self, 0, x)

    def _derivative(self, k, x):
        raise NotImplementedError


@dataclass(frozen=True)
class Power(UtilitySpec):
    """U(x) = x^(1-gamma) / (1-gamma)."""

    gamma: float
    label = "power"

    def __post_init__(self):
        if not (self.gamma > 0) or self.gamma == 1:
            raise ConstructionError("power utility needs gamma > 0 and gamma != 1")

    def _derivative(self, k, x):
        return _power_derivative(self.gamma, k, x)


@dataclass(frozen=True)
class Log(UtilitySpec):
    """U(x) = log x."""

    label = "log"

    def _derivative(self, k, x):
        if k == 0:
            return np.log(x)
        return (-1.0) ** (k - 1) * math.factorial(k - 1) * x ** (-float(k))


@dataclass(frozen=True)
class PowerMixture(UtilitySpec):
    """U(x) = c_a x^(1-alpha)/(1-alpha) + c_b x^(1-beta)/(1-beta)."""

    c_a: float
    alpha: float
    c_b: float
    beta: float
    label = "mixture"

    def __post_init__(self):
        if not (self.c_a > 0 and self.c_b > 0):
            raise ConstructionError("mixture weights must be positive")
        for e in (self.alpha, self.beta):
            if not (e > 0) or e == 1:
                raise ConstructionError("mixture exponents must be positive and != 1")

    def _derivative(self, k, x):
        return self.c_a * _power_derivative(self.alpha, k, x) + self.c_b * _power_derivative(self.beta, k, x)


@dataclass(frozen=True)
class Custom(UtilitySpec):
    """User utility given as ``[U, U', U'', U''', U'''', ...]`` callables."""

    derivatives: Sequence[Callable] = field(default_factory=tuple)
    name: str = "custom"
    label = "custom"

    def __post_init__(self):
        if len(self.derivatives) < 5:
            raise ConstructionError("custom utilities must supply derivatives through order 4")

    @property
    def derivative_order_available(self):
        return len(self.derivatives) - 1

    def _derivative(self, k, x):
        return self.derivatives[k](x)


def exponential(a=1.0):
    """CARA utility -exp(-a x)/a; violates both growth cases (used to exercise rejection)."""

    def d(k):
        return lambda x: -((-a) ** k) * np.exp(-a * x) / a

    return Custom(tuple(d(k) for k in range(6)), name="exponential")


def derivative(u: UtilitySpec, k: int, x):
    """k-th derivative of the terminal utility; ``k = 0`` returns U(x)."""
    if k < 0 or k > u.derivative_order_available:
        raise CapabilityError(f"derivative of order {k} not available for {u!r}")
    x = _check_x(x)
    return u._derivative(k, x)


@dataclass(frozen=True)
class GrowthCase:
    """Case 1 (log-like, ``case=1``) or Case 2 (power mixture with exponents alpha, beta)."""

    case: int
    alpha: float | None = None
    beta: float | None = None
    eps_adm: float = 1e-6

    def __post_init__(self):
        if self.case == 1:
            return
        if self.case != 2:
            raise ConstructionError("growth case must be 1 or 2")
        for e in (self.alpha, self.beta):
            if e is None or not (e > 0) or e == 1:
                raise ConstructionError("Case 2 requires alpha, beta > 0 and != 1")

    @classmethod
    def case1(cls):
        return cls(1)

    @classmethod
    def case2(cls, alpha, beta):
        return cls(2, float(alpha), float(beta))

    @property
    def gamma_admissibility(self):
        """gamma of the weighted moment condition: 1 (Case 1) or max(alpha, beta)."""
        if self.case == 1:
            return 1.0
        return max(self.alpha, self.beta)

    @property
    def gamma_discrepancy(self):
        """True when Case 2 has max(alpha, beta) <= 1, where the admissibility gamma must exceed 1."""
        return self.case == 2 and max(self.alpha, self.beta) <= 1.0

    @property
    def moment_gamma(self):
        """gamma actually used by the Monte Carlo moment check (forced above 1)."""
        g = self.gamma_admissibility
        if self.gamma_discrepancy:
            return max(g, 1.0 + self.eps_adm)
        return g


def default_growth_case(u: UtilitySpec):
    """Natural growth case of a built-in family; None for custom utilities."""
    if isinstance(u, Log):
        return GrowthCase.case1()
    if isinstance(u, Power):
        return GrowthCase.case2(u.gamma, u.gamma)
    if isinstance(u, PowerMixture):
        return GrowthCase.case2(u.alpha, u.beta)
    return None


def reference_derivative(case: GrowthCase, k: int, x):
    """k-th derivative of the comparison function M of the growth case."""
    x = _check_x(x)
    if case.case == 1:
        return Log()._derivative(k, x)
    return _power_derivative(case.alpha, k, x) + _power_derivative(case.beta, k, x)


def reference_functions(case: GrowthCase, x):
    """Return ``(M, h, G, h_tilde)`` at x.

    ``h`` weights the approximation error, ``G`` dominates |U| along wealth
    paths and ``h_tilde`` bounds the cleared-fraction HJB residual.
    """
    x = _check_x(x)
    if case.case == 1:
        m = np.log(x)
        one = np.ones_like(x) if np.ndim(x) else 1.0
        return m, one, m + 1.0, x**-4.0
    a, b = case.alpha, case.beta
    m = _power_derivative(a, 0, x) + _power_derivative(b, 0, x)
    h = x ** (1 - a) + x ** (1 - b)
    h_tilde = h * (x ** (-2 - 2 * a) + x ** (-2 - 2 * b))
    return m, h, h, h_tilde


def weight_h(case: GrowthCase, x, k=0):
    """``h`` and its first two x-derivatives (k = 0, 1, 2)."""
    if case.case == 1:
        return np.zeros_like(x) + (1.0 if k == 0 else 0.0)
    out = 0.0
    for e in (case.alpha, case.beta):
        p = 1.0 - e
        coef = 1.0
        for j in range(k):
            coef *= p - j
        out = out + coef * x ** (p - k)
    return out


@dataclass
class GrowthReport:
    """Grid estimates of inf/sup of U^(k)/M^(k), k = 1..4, plus tail trends."""

    ratio_inf: dict
    ratio_sup: dict
    tail_slopes: dict
    eps_growth: float
    slope_tol: float
    passed_by_order: dict
    passed: bool

    def lines(self):
        out = []
        for k in sorted(self.ratio_inf):
            lo, hi = self.tail_slopes[k]
            flag = "ok" if self.passed_by_order[k] else "FAIL"
            out.append(
                f"k={k}: inf={self.ratio_inf[k]:.6g} sup={self.ratio_sup[k]:.6g} "
                f"tail slopes=({lo:.3g}, {hi:.3g}) {flag}"
            )
        return out


def _tail_slope(logx, ratio):
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(ratio)
    if not np.all(np.isfinite(lr)):
        return -math.inf
    return float(np.polyfit(logx, lr, 1)[0])


def check_growth_conditions(
    u: UtilitySpec,
    case: GrowthCase,
    grid=None,
    eps_growth: float = 1e-8,
    slope_tol: float = 0.05,
) -> GrowthReport:
    """Estimate the growth-condition ratios on a log-spaced wealth grid.

    A ratio passes when its grid infimum exceeds ``eps_growth``, its
    supremum is finite, and its log-log slope over the outermost decade at
    each end of the grid is below ``slope_tol`` in magnitude (a ratio that is
    still trending at the grid edges is heading to 0 or infinity).
    """
    if grid is None:
        grid = np.logspace(-4, 4, 400)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("growth grid must be a 1-d array with at least two points")
    logx = np.log(grid)
    decade = math.log(10.0)
    lo_tail = logx <= logx[0] + decade
    hi_tail = logx >= logx[-1] - decade
    infs, sups, slopes, passed = {}, {}, {}, {}
    for k in range(1, 5):
        with np.errstate(all="ignore"):
            num = np.asarray(derivative(u, k, grid), dtype=float)
            den = np.asarray(reference_derivative(case, k, grid), dtype=float)
        if np.any(den == 0):
            raise SingularityError(f"reference derivative of order {k} vanishes on the grid")
        with np.errstate(all="ignore"):
            ratio = num / den
        finite = np.isfinite(ratio)
        infs[k] = float(np.min(np.where(finite, ratio, -np.inf)))
        sups[k] = float(np.max(np.where(finite, ratio, np.inf)))
        s_lo = _tail_slope(logx[lo_tail], ratio[lo_tail]) if lo_tail.sum() >= 2 else 0.0
        s_hi = _tail_slope(logx[hi_tail], ratio[hi_tail]) if hi_tail.sum() >= 2 else 0.0
        slopes[k] = (s_lo, s_hi)
        passed[k] = bool(
            infs[k] > eps_growth
            and math.isfinite(sups[k])
            and abs(s_lo) < slope_tol
            and abs(s_hi) < slope_tol
        )
    return GrowthReport(infs, sups, slopes, eps_growth, slope_tol, passed, all(passed.values()))


def utility_from_config(cfg: dict) -> UtilitySpec:
    """Build a utility from its JSON description (``{"family": "power", "gamma": 3}``...)."""
    from .errors import ConfigError

    if not isinstance(cfg, dict) or "family" not in cfg:
        raise ConfigError("expected an object with a 'family' field", "utility")
    fam = str(cfg["family"]).lower()
    try:
        if fam == "power":
            return Power(float(cfg["gamma"]))
        if fam == "log":
            return Log()
        if fam == "mixture":
            return PowerMixture(float(cfg["c_a"]), float(cfg["alpha"]), float(cfg["c_b"]), float(cfg["beta"]))
        if fam == "exponential":
            return exponential(float(cfg.get("a", 1.0)))
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}", "utility") from None
    except ConstructionError as exc:
        raise ConfigError(str(exc), "utility") from None
    raise ConfigError(f"unknown utility family {fam!r}", "utility.family")
