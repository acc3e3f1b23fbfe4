"""Small-time value approximation, its sub/super-solution bounds and the induced portfolio.

The first-order surrogate is

    Uhat(t, x, y) = U(x) + (T - t) u1(x, y),   u1 = -lam(y)^2 / 2 * U'(x)^2 / U''(x),

and the exact second-order coefficient ``u2`` (sum of eight product terms)
drives the sandwich constant ``c2``.  Everything here is vectorised over
numpy broadcasting in ``(t, x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConcavityError, DomainError, SingularityError
from .market import MarketModel
from .utility import GrowthCase, UtilitySpec, derivative, weight_h

__all__ = [
    "ValuePartials",
    "ValueSurrogate",
    "SandwichBounds",
    "u1",
    "u2",
    "u2_terms",
    "value_hat",
    "value_hat_surrogate",
    "sandwich",
    "hjb_residual",
    "hamiltonian",
    "pi_from_partials",
    "pi_hat",
    "error_bound",
]


@dataclass(frozen=True)
class ValuePartials:
    """Value and partial derivatives of a surrogate at (t, x, y)."""

    value: np.ndarray | float
    t: np.ndarray | float
    x: np.ndarray | float
    y: np.ndarray | float
    xx: np.ndarray | float
    xy: np.ndarray | float
    yy: np.ndarray | float


@dataclass(frozen=True)
class ValueSurrogate:
    """Anything mapping (t, x, y) to :class:`ValuePartials`.

    ``kind`` is one of ``"u-hat"``, ``"sub"``, ``"super"``, ``"oracle"``,
    ``"scheme"``.
    """

    evaluate: Callable[..., ValuePartials]
    kind: str
    T: float

    def __call__(self, t, x, y) -> ValuePartials:
        return self.evaluate(t, x, y)

    def value(self, t, x, y):
        return self.evaluate(t, x, y).value


def _utility_derivs(u, x, order=4):
    d = [derivative(u, k, x) for k in range(order + 1)]
    if np.any(np.asarray(d[2]) == 0):
        raise SingularityError("U''(x) vanishes")
    return d


def _g_and_derivs(d):
    """g = U'^2/U'' and its first two x-derivatives."""
    _, u1_, u2_, u3_, u4_ = d
    g = u1_**2 / u2_
    g1 = 2.0 * u1_ - u1_**2 * u3_ / u2_**2
    g2 = 2.0 * u2_ - 2.0 * u1_ * u3_ / u2_ - u1_**2 * u4_ / u2_**2 + 2.0 * u1_**2 * u3_**2 / u2_**3
    return g, g1, g2


def _check_time(t, T):
    if np.any(np.asarray(t) > T) or np.any(np.asarray(t) < 0):
        raise DomainError("time must satisfy 0 <= t <= T")


def u1(x, y, u: UtilitySpec, model: MarketModel):
    """First-order coefficient -lam^2/2 * U'^2/U''; non-negative for concave U."""
    d1 = derivative(u, 1, x)
    d2 = derivative(u, 2, x)
    if np.any(np.asarray(d2) == 0):
        raise SingularityError("U''(x) vanishes")
    return -0.5 * model.lam(y) ** 2 * d1**2 / d2


def u2_terms(x, y, u: UtilitySpec, model: MarketModel):
    """The eight product terms a1..a8 whose sum is the second-order coefficient.

    Terms 1-5 expand the U'^2/U'' bracket, terms 6-8 the U'^3/U''^3 bracket,
    in the order they are written.
    """
    d = _utility_derivs(u, x)
    _, up, upp, u3, u4 = d
    lam, dlam, d2lam = model.lam(y), model.dlam(y), model.d2lam(y)
    a, b, rho = model.a(y), model.b(y), model.rho
    g = up**2 / upp
    q = up**3 / upp**3
    return [
        g * lam**4 / 4.0,
        -g * b * lam * dlam / 2.0,
        g * rho * a * lam**2 * dlam,
        -g * a**2 * dlam**2 / 4.0,
        -g * a**2 * lam * d2lam / 4.0,
        -q * rho * a * lam**2 * dlam * u3 / 2.0,
        -q * lam**4 * up * u3**2 / (4.0 * upp**2),
        q * lam**4 * up * u4 / (8.0 * upp),
    ]


def u2(x, y, u: UtilitySpec, model: MarketModel):
    """Second-order coefficient of the small-time expansion."""
    terms = u2_terms(x, y, u, model)
    out = terms[0]
    for term in terms[1:]:
        out = out + term
    return out


def value_hat(t, x, y, u: UtilitySpec, model: MarketModel, T: float) -> ValuePartials:
    """First-order surrogate and its analytic partials."""
    _check_time(t, T)
    s = T - np.asarray(t, dtype=float)
    d = _utility_derivs(u, x)
    g, g1, g2 = _g_and_derivs(d)
    lam, dlam, d2lam = model.lam(y), model.dlam(y), model.d2lam(y)
    half_l2 = 0.5 * lam**2
    return ValuePartials(
        value=d[0] - s * half_l2 * g,
        t=half_l2 * g + 0.0 * s,
        x=d[1] - s * half_l2 * g1,
        y=-s * lam * dlam * g,
        xx=d[2] - s * half_l2 * g2,
        xy=-s * lam * dlam * g1,
        yy=-s * (dlam**2 + lam * d2lam) * g,
    )


def value_hat_surrogate(u: UtilitySpec, model: MarketModel, T: float) -> ValueSurrogate:
    return ValueSurrogate(lambda t, x, y: value_hat(t, x, y, u, model, T), "u-hat", T)


def _shifted(p: ValuePartials, s, c2, case, x, sign) -> ValuePartials:
    """p + sign * c2 * s^2 * h(x), with time running backwards in s = T - t."""
    h0 = weight_h(case, x, 0)
    h1 = weight_h(case, x, 1)
    h2 = weight_h(case, x, 2)
    k = sign * c2
    return ValuePartials(
        value=p.value + k * s**2 * h0,
        t=p.t - 2.0 * k * s * h0,
        x=p.x + k * s**2 * h1,
        y=p.y,
        xx=p.xx + k * s**2 * h2,
        xy=p.xy,
        yy=p.yy,
    )


@dataclass(frozen=True)
class SandwichBounds:
    """Sub/super-solutions Uhat -/+ c2 (T-t)^2 h(x) with their validity window.

    ``delta`` is None when no time on the scan grid showed the expected
    residual signs ("not established").
    """

    c2: float
    delta: float | None
    lower: ValueSurrogate
    upper: ValueSurrogate
    hat: ValueSurrogate
    case: GrowthCase
    term_sups: tuple
    multiplier: float

    def width(self, t, x):
        s = self.hat.T - np.asarray(t, dtype=float)
        return 2.0 * self.c2 * s**2 * weight_h(self.case, x, 0)

    def within_window(self, t):
        if self.delta is None:
            return np.zeros_like(np.asarray(t, dtype=float), dtype=bool)
        return (self.hat.T - np.asarray(t, dtype=float)) < self.delta


def sandwich(
    u: UtilitySpec,
    model: MarketModel,
    T: float,
    case: GrowthCase,
    x_grid=None,
    y_grid=None,
    s_grid=None,
    multiplier: float = 1.5,
) -> SandwichBounds:
    """Build the sandwich bounds with a grid-estimated error constant.

    ``c2 = multiplier * 8 * max_i sup |a_i| / h + 1`` with the sup taken over
    ``x_grid x y_grid``.  The validity window ``delta`` is the largest
    time-to-horizon on ``s_grid`` up to which the sub-solution residual stays
    positive and the super-solution residual negative at every grid point.
    """
    if x_grid is None:
        x_grid = np.logspace(-3, 3, 400)
    if y_grid is None:
        lo, hi = model.y_working_range
        y_grid = np.linspace(lo, hi, 200)
    if s_grid is None:
        s_grid = min(1.0, T) * np.arange(1, 100) / 100.0
    xs, ys = np.meshgrid(np.asarray(x_grid, float), np.asarray(y_grid, float), indexing="ij")
    h = weight_h(case, xs, 0)
    sups = tuple(float(np.max(np.abs(a_i) / h)) for a_i in u2_terms(xs, ys, u, model))
    c2 = multiplier * 8.0 * max(sups) + 1.0

    hat = value_hat_surrogate(u, model, T)

    def make(sign, kind):
        def ev(t, x, y):
            p = hat(t, x, y)
            s = T - np.asarray(t, dtype=float)
            return _shifted(p, s, c2, case, np.asarray(x, dtype=float), sign)

        return ValueSurrogate(ev, kind, T)

    lower, upper = make(-1.0, "sub"), make(+1.0, "super")

    delta = None
    for s in sorted(float(v) for v in s_grid):
        if not (0 < s < min(1.0, T)):
            continue
        t = T - s
        r_lo = hjb_residual(lower, t, xs, ys, model)
        r_hi = hjb_residual(upper, t, xs, ys, model)
        if np.all(r_lo > 0) and np.all(r_hi < 0):
            delta = s
        else:
            break
    return SandwichBounds(c2, delta, lower, upper, hat, case, sups, multiplier)


def hjb_residual(s, t, x, y, model: MarketModel):
    """U_t - (lam U_x + rho a U_xy)^2 / (2 U_xx) + a^2 U_yy / 2 + b U_y.

    ``s`` is a :class:`ValueSurrogate` (evaluated at (t, x, y)) or an
    already-evaluated :class:`ValuePartials`.
    """
    p = s(t, x, y) if isinstance(s, ValueSurrogate) else s
    if np.any(np.asarray(p.xx) == 0):
        raise SingularityError("U_xx vanishes")
    lam, a, b = model.lam(y), model.a(y), model.b(y)
    return p.t - 0.5 * (lam * p.x + model.rho * a * p.xy) ** 2 / p.xx + 0.5 * a**2 * p.yy + b * p.y


def hamiltonian(p: ValuePartials, pi, model: MarketModel, y):
    """The portfolio-dependent part of the HJB operator, quadratic in pi."""
    sig = model.sigma(y)
    return 0.5 * sig**2 * pi**2 * p.xx + pi * (sig * model.lam(y) * p.x + model.rho * sig * model.a(y) * p.xy)


def pi_from_partials(p: ValuePartials, model: MarketModel, y):
    """Maximiser of the Hamiltonian: (-lam U_x - rho a U_xy) / (sigma U_xx)."""
    if np.any(~(np.asarray(p.xx) < 0)):
        raise ConcavityError("U_xx must be negative to form a portfolio")
    return (-model.lam(y) * p.x - model.rho * model.a(y) * p.xy) / (model.sigma(y) * p.xx)


def pi_hat(t, x, y, u: UtilitySpec, model: MarketModel, T: float):
    """Near-optimal portfolio generated by the first-order surrogate."""
    return pi_from_partials(value_hat(t, x, y, u, model, T), model, y)


def error_bound(c2, T, t, case: GrowthCase, x):
    """c2 (T - t)^2 h(x)."""
    return c2 * (T - np.asarray(t, dtype=float)) ** 2 * weight_h(case, np.asarray(x, dtype=float), 0)
