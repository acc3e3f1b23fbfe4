"""Closed-form reference solutions.

``crra_*`` is the exact power-utility value function of the square-root
volatility model, obtained from a distortion transform J = U(x) F^k with
log F affine in y.  ``merton_*`` freezes the factor and solves the
constant-coefficient problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError
from .market import MarketModel, builtin_chacko_viceira
from .surrogate import ValuePartials, ValueSurrogate, pi_from_partials

__all__ = [
    "CRRAParams",
    "MertonParams",
    "crra_coeffs",
    "crra_coeff_rates",
    "crra_partials",
    "crra_exact_value",
    "crra_exact_portfolio",
    "crra_surrogate",
    "merton_value",
    "merton_portfolio",
    "merton_from_model",
]


@dataclass(frozen=True)
class CRRAParams:
    """Power utility with risk aversion ``gamma`` in the square-root volatility model.

    The quadratic f(r) = beta^2/2 r^2 + ((1-g) beta mu rho - g)/g r
    + (g + (1-g) rho^2)(1-g) mu^2 / (2 g^2) has roots a_minus < a_plus
    (a_plus > 0 > a_minus when g > 1; both positive when g < 1).
    ``alpha_disc`` is the square root of its discriminant.  ``mu`` enters
    through the excess return mu - r.
    """

    gamma: float
    mu: float
    m: float
    beta_vol: float
    rho: float
    T: float
    r: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0) or self.gamma == 1:
            raise ConstructionError("gamma must be positive and != 1")
        if not (-1 < self.rho < 1):
            raise ConstructionError("rho must lie in (-1, 1)")
        if self.beta_vol == 0:
            raise ConstructionError("beta_vol must be non-zero")
        if not (self.discriminant > 0):
            raise ConstructionError("quadratic f has no real roots")

    @property
    def f_coeffs(self):
        g, b, ex, rho = self.gamma, self.beta_vol, self.mu - self.r, self.rho
        return (
            b**2 / 2.0,
            ((1 - g) * b * ex * rho - g) / g,
            (g + (1 - g) * rho**2) * (1 - g) * ex**2 / (2 * g**2),
        )

    def f(self, r):
        c2, c1, c0 = self.f_coeffs
        return c2 * r**2 + c1 * r + c0

    @property
    def discriminant(self):
        c2, c1, c0 = self.f_coeffs
        return c1**2 - 4 * c2 * c0

    @property
    def alpha_disc(self):
        return math.sqrt(self.discriminant)

    @property
    def a_plus(self):
        c2, c1, _ = self.f_coeffs
        return (-c1 + self.alpha_disc) / (2 * c2)

    @property
    def a_minus(self):
        c2, c1, c0 = self.f_coeffs
        # product of roots is c0/c2; avoids cancellation in (-c1 - alpha)/(2 c2) when c0 is small
        return (c0 / c2) / self.a_plus if c1 < 0 else (-c1 - self.alpha_disc) / (2 * c2)

    @property
    def exponent_multiplier(self):
        g = self.gamma
        return g / (g + (1 - g) * self.rho**2)

    def market(self) -> MarketModel:
        return builtin_chacko_viceira(self.mu, self.m, self.beta_vol, self.rho, self.r)


def _s(t, T):
    s = T - np.asarray(t, dtype=float)
    if np.any(s < 0):
        raise DomainError("t must not exceed T")
    return s


def crra_coeffs(t, T, p: CRRAParams):
    """The time coefficients (A, B) of the exponent y A + B."""
    s = _s(t, T)
    am, ap, al = p.a_minus, p.a_plus, p.alpha_disc
    c = am / ap
    e = np.exp(-al * s)
    A = (1.0 - e) * am / (1.0 - c * e)
    B = p.m * (s * am - (2.0 / p.beta_vol**2) * np.log((1.0 - c * e) / (1.0 - c)))
    return A, B


def crra_coeff_rates(t, T, p: CRRAParams):
    """(dA/dt, dB/dt); time-to-horizon runs backwards so both carry a minus sign."""
    s = _s(t, T)
    am, ap, al = p.a_minus, p.a_plus, p.alpha_disc
    c = am / ap
    e = np.exp(-al * s)
    d = 1.0 - c * e
    dA_ds = al * e * am * (1.0 - c) / d**2
    dB_ds = p.m * (am - (2.0 / p.beta_vol**2) * c * al * e / d)
    return -dA_ds, -dB_ds


def crra_partials(t, x, y, p: CRRAParams) -> ValuePartials:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("wealth x must be positive")
    g = p.gamma
    k = p.exponent_multiplier
    A, B = crra_coeffs(t, p.T, p)
    At, Bt = crra_coeff_rates(t, p.T, p)
    E = np.exp(k * (y * A + B))
    P = x ** (1 - g) / (1 - g)
    ux = x**-g * E
    return ValuePartials(
        value=P * E,
        t=P * E * k * (y * At + Bt),
        x=ux,
        y=P * E * k * A,
        xx=-g * x ** (-g - 1) * E,
        xy=ux * k * A,
        yy=P * E * (k * A) ** 2,
    )


def crra_exact_value(t, x, y, p: CRRAParams):
    """x^(1-g)/(1-g) * exp(k (y A + B)), k = g / (g + (1-g) rho^2)."""
    return crra_partials(t, x, y, p).value


def crra_exact_portfolio(t, x, y, p: CRRAParams):
    return pi_from_partials(crra_partials(t, x, y, p), p.market(), y)


def crra_surrogate(p: CRRAParams) -> ValueSurrogate:
    return ValueSurrogate(lambda t, x, y: crra_partials(t, x, y, p), "oracle", p.T)


@dataclass(frozen=True)
class MertonParams:
    """Constant Sharpe ratio ``lam`` and volatility ``sigma`` with power utility."""

    gamma: float
    lam: float
    sigma: float
    T: float

    def __post_init__(self):
        if not (self.gamma > 0) or self.gamma == 1:
            raise ConstructionError("gamma must be positive and != 1")
        if not (self.sigma > 0):
            raise ConstructionError("sigma must be positive")


def merton_value(t, x, mp: MertonParams):
    """U(x) exp((1-g) lam^2 (T-t) / (2 g))."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("wealth x must be positive")
    g = mp.gamma
    s = _s(t, mp.T)
    return x ** (1 - g) / (1 - g) * np.exp((1 - g) * mp.lam**2 * s / (2 * g))


def merton_portfolio(x, mp: MertonParams):
    """lam x / (g sigma), constant in time."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("wealth x must be positive")
    return mp.lam * x / (mp.gamma * mp.sigma)


def merton_from_model(model: MarketModel, y, gamma, T):
    """Freeze the factor at ``y`` and read off the Merton parameters."""
    return MertonParams(gamma, float(model.lam(y)), float(model.sigma(y)), T)
