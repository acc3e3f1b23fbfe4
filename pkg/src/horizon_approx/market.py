"""Market coefficients: risky asset drift/volatility and the stochastic factor.

Every coefficient is a callable of the factor level ``y``.  The built-in
models are written with :mod:`horizon_approx.jet` primitives so the same
callables accept floats, numpy arrays and :class:`~horizon_approx.jet.Jet`
objects (the latter is how the backward scheme differentiates through them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jet
from .errors import ConfigError, ConstructionError, DomainError

__all__ = [
    "MarketModel",
    "ModelBoundsReport",
    "builtin_constant",
    "builtin_chacko_viceira",
    "validate_model_bounds",
    "market_from_config",
]


def _const(value):
    def f(y):
        if isinstance(y, jet.Jet):
            return value
        ya = np.asarray(y, dtype=float)
        return np.full(ya.shape, value) if ya.ndim else float(value)

    return f


@dataclass(frozen=True)
class MarketModel:
    """Coefficient bundle for dS/S = mu dt + sigma dW1, dY = b dt + a (rho dW1 + sqrt(1-rho^2) dW2).

    ``lam`` is the Sharpe ratio (mu - r)/sigma; ``dlam``/``d2lam`` and the
    other ``d*`` fields are derivatives in ``y``.
    """

    mu: Callable
    sigma: Callable
    b: Callable
    a: Callable
    dmu: Callable
    dsigma: Callable
    db: Callable
    da: Callable
    d2a: Callable
    lam: Callable
    dlam: Callable
    d2lam: Callable
    rho: float
    r: float = 0.0
    name: str = "custom"
    params: dict = field(default_factory=dict)
    y_working_range: tuple = (-1.0, 1.0)
    positive_factor: bool = False

    def __post_init__(self):
        if not (-1.0 < self.rho < 1.0):
            raise ConstructionError("correlation rho must lie in (-1, 1)")
        if not (self.r >= 0):
            raise ConstructionError("risk-free rate must be non-negative")

    @classmethod
    def from_coefficients(cls, mu, sigma, b, a, dmu, dsigma, db, da, d2a, d2mu, d2sigma, rho, r=0.0, **kw):
        """Derive lambda and its first two derivatives from mu, sigma and their derivatives."""

        def lam(y):
            return (mu(y) - r) / sigma(y)

        def dlam(y):
            s = sigma(y)
            return (dmu(y) * s - (mu(y) - r) * dsigma(y)) / s**2

        def d2lam(y):
            s, ds = sigma(y), dsigma(y)
            ex = mu(y) - r
            return (d2mu(y) - 2 * dlam(y) * ds - ex * d2sigma(y) / s) / s

        return cls(mu, sigma, b, a, dmu, dsigma, db, da, d2a, lam, dlam, d2lam, rho, r, **kw)


def builtin_constant(mu, sigma, b, a, rho, r=0.0):
    """Constant coefficients; every y-derivative vanishes."""
    if not (sigma > 0):
        raise ConstructionError("sigma must be positive")
    if not (a >= 0):
        raise ConstructionError("a must be non-negative")
    zero = _const(0.0)
    return MarketModel(
        mu=_const(mu),
        sigma=_const(sigma),
        b=_const(b),
        a=_const(a),
        dmu=zero,
        dsigma=zero,
        db=zero,
        da=zero,
        d2a=zero,
        lam=_const((mu - r) / sigma),
        dlam=zero,
        d2lam=zero,
        rho=rho,
        r=r,
        name="constant",
        params=dict(mu=mu, sigma=sigma, b=b, a=a, rho=rho, r=r),
        y_working_range=(-1.0, 1.0),
    )


def builtin_chacko_viceira(mu, m, beta_vol, rho, r=0.0):
    """Square-root volatility factor: sigma = 1/sqrt(y), b = m - y, a = beta_vol sqrt(y)."""
    for v in (mu, m, beta_vol, rho, r):
        if not math.isfinite(v):
            raise ConstructionError("parameters must be finite")
    ex = mu - r

    def guard(y):
        yv = jet.base_value(y)
        if np.any(~(np.asarray(yv) > 0)):
            raise DomainError("Chacko-Viceira model requires y > 0")
        return y

    def sigma(y):
        return 1.0 / jet.sqrt(guard(y))

    def dsigma(y):
        return -0.5 / (guard(y) * jet.sqrt(y))

    def a(y):
        return beta_vol * jet.sqrt(guard(y))

    def da(y):
        return 0.5 * beta_vol / jet.sqrt(guard(y))

    def d2a(y):
        return -0.25 * beta_vol / (guard(y) * jet.sqrt(y))

    def lam(y):
        return ex * jet.sqrt(guard(y))

    def dlam(y):
        return 0.5 * ex / jet.sqrt(guard(y))

    def d2lam(y):
        return -0.25 * ex / (guard(y) * jet.sqrt(y))

    def b(y):
        return m - guard(y)

    zero = _const(0.0)
    return MarketModel(
        mu=_const(mu),
        sigma=sigma,
        b=b,
        a=a,
        dmu=zero,
        dsigma=dsigma,
        db=_const(-1.0),
        da=da,
        d2a=d2a,
        lam=lam,
        dlam=dlam,
        d2lam=d2lam,
        rho=rho,
        r=r,
        name="chacko_viceira",
        params=dict(mu=mu, m=m, beta=beta_vol, rho=rho, r=r),
        y_working_range=(0.5 * m, 1.5 * m) if m > 0 else (1e-3, 1.0),
        positive_factor=True,
    )


@dataclass
class ModelBoundsReport:
    """Grid sup of |a| + |1/a| + |a'| + |a''| + |b| + |b'| + |lam| + |lam'| + |lam''|."""

    sup: float
    argmax_y: float
    bound: float
    passed: bool


def validate_model_bounds(model: MarketModel, y_grid, c=math.inf) -> ModelBoundsReport:
    """Advisory check of the coefficient-boundedness assumption; never raises on failure."""
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if y.size == 0:
        raise DomainError("y_grid must be non-empty")
    with np.errstate(divide="ignore"):
        av = np.asarray(model.a(y), dtype=float)
        total = (
            np.abs(av)
            + np.abs(1.0 / av)
            + np.abs(model.da(y))
            + np.abs(model.d2a(y))
            + np.abs(model.b(y))
            + np.abs(model.db(y))
            + np.abs(model.lam(y))
            + np.abs(model.dlam(y))
            + np.abs(model.d2lam(y))
        )
    i = int(np.argmax(total))
    sup = float(total[i])
    return ModelBoundsReport(sup, float(y[i]), float(c), bool(sup <= c))


def market_from_config(cfg: dict) -> MarketModel:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("expected an object with a 'kind' field", "market")
    kind = str(cfg["kind"]).lower()
    try:
        if kind == "constant":
            return builtin_constant(
                float(cfg["mu"]),
                float(cfg["sigma"]),
                float(cfg.get("b", 0.0)),
                float(cfg.get("a", 0.0)),
                float(cfg.get("rho", 0.0)),
                float(cfg.get("r", 0.0)),
            )
        if kind == "chacko_viceira":
            return builtin_chacko_viceira(
                float(cfg["mu"]),
                float(cfg["m"]),
                float(cfg["beta"]),
                float(cfg["rho"]),
                float(cfg.get("r", 0.0)),
            )
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}", "market") from None
    except ConstructionError as exc:
        raise ConfigError(str(exc), "market") from None
    raise ConfigError(f"unknown market kind {kind!r}", "market.kind")
