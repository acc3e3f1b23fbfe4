"""Backward recursion extending the small-time surrogate over a partition of [0, T].

On [t_k, t_{k+1}] the iterate is

    Uhat(t) = Uhat(t_{k+1}) + (t_{k+1} - t) * Hbar(Uhat(t_{k+1})),
    Hbar(V) = -(lam V_x + rho a V_xy)^2 / (2 V_xx) + a^2 V_yy / 2 + b V_y,

anchored at Uhat(T) = U(x).  Each backward step consumes second partials of
the previous iterate, so partials are carried as truncated Taylor jets in
(x, y) (forward-mode AD); the anchor jet needs utility derivatives up to
order 2 * (steps) + 2.  Utilities without enough closed-form derivatives
can use ``mode="fd"``, which differences the highest one they supply.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import CapabilityError, ConcavityError, DomainError
from .jet import Jet
from .market import MarketModel
from .surrogate import ValuePartials, ValueSurrogate, pi_from_partials
from .utility import UtilitySpec, derivative

__all__ = [
    "Partition",
    "scheme_value",
    "scheme_portfolio",
    "scheme_surrogate",
    "partition_from_config",
]


@dataclass(frozen=True)
class Partition:
    """Strictly increasing knots 0 = t_0 < ... < t_n = T."""

    times: tuple

    def __post_init__(self):
        ts = tuple(float(v) for v in self.times)
        if len(ts) < 2:
            raise DomainError("a partition needs at least two knots")
        if ts[0] != 0.0:
            raise DomainError("partition must start at 0")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DomainError("partition knots must be strictly increasing")
        object.__setattr__(self, "times", ts)

    @classmethod
    def uniform(cls, T, n=4):
        if n < 1:
            raise DomainError("n must be >= 1")
        return cls(tuple(T * k / n for k in range(n)) + (float(T),))

    @property
    def T(self):
        return self.times[-1]

    @property
    def n(self):
        return len(self.times) - 1

    def interval(self, t):
        """Index k with t_k <= t < t_{k+1} (the last interval for t = T)."""
        if not (0.0 <= t <= self.T):
            raise DomainError(f"t={t} outside [0, {self.T}]")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(k, self.n - 1)


def _bracket(V: Jet, coeffs, rho, knot):
    Vx = V.dx()
    Vxx = Vx.dx()
    if not Vxx.value < 0:
        raise ConcavityError(f"iterate lost concavity in wealth at knot t={knot} (U_xx={Vxx.value:.3g}); refine the partition")
    Vy = V.dy()
    lam, a, b = coeffs
    return -0.5 * (lam * Vx + rho * a * Vx.dy()) ** 2 / Vxx + 0.5 * a**2 * Vy.dy() + b * Vy


def _fd_step(x, m):
    """Step for an m-th central difference: 1e-5 max(1, |x|) for m = 1, widened for higher m.

    Rounding error of an m-th difference grows like eps / h^m, so the step
    grows with m to balance it against the O(h^2) truncation error; it is
    capped so the stencil stays at positive wealth.
    """
    h = 1e-5 ** (3.0 / (m + 2)) * max(1.0, abs(x))
    return min(h, 0.5 * x / m)


def _fd_derivative(g, x, m):
    """m-th derivative of g at x by the central binomial stencil (second order)."""
    h = _fd_step(x, m)
    acc = 0.0
    for k in range(m + 1):
        acc += (-1) ** k * comb(m, k) * float(g(x + (0.5 * m - k) * h))
    return acc / h**m


def _anchor_derivatives(u: UtilitySpec, x0, order, mode, t):
    avail = u.derivative_order_available
    if order <= avail:
        return [float(derivative(u, j, x0)) for j in range(order + 1)]
    if mode == "ad":
        raise CapabilityError(
            f"scheme at t={t} needs utility derivatives through order {order}; "
            f"{u!r} provides {avail} (use mode='fd')"
        )
    top = int(avail)
    out = [float(derivative(u, j, x0)) for j in range(top + 1)]

    def g(v):
        return derivative(u, top, v)

    out += [_fd_derivative(g, x0, m) for m in range(1, order - top + 1)]
    return out


def _point(t, x0, y0, part: Partition, u: UtilitySpec, model: MarketModel, partials, mode):
    k = part.interval(t)
    ts = part.times
    order = 2 * (part.n - k) + 2
    V = Jet.from_derivatives_x(_anchor_derivatives(u, x0, order, mode, t), order)
    yj = Jet.variable(y0, order, axis=1)
    coeffs = (model.lam(yj), model.a(yj), model.b(yj))
    for j in range(part.n - 1, k, -1):
        V = V + (ts[j + 1] - ts[j]) * _bracket(V, coeffs, model.rho, ts[j + 1])
    br = _bracket(V, coeffs, model.rho, ts[k + 1])
    W = V + (ts[k + 1] - t) * br
    src = W if partials == "full" else V.truncate(2)
    return ValuePartials(
        value=W.value,
        t=-br.value,
        x=src.partial(1, 0),
        y=src.partial(0, 1),
        xx=src.partial(2, 0),
        xy=src.partial(1, 1),
        yy=src.partial(0, 2),
    )


def scheme_value(t, x, y, partition: Partition, u: UtilitySpec, model: MarketModel, mode="ad", partials="full"):
    """Iterate value and partials at (t, x, y); broadcasts over array inputs.

    The recursion is always differentiated with jets.  ``mode="ad"`` needs
    closed-form utility derivatives through the anchor order; ``mode="fd"``
    fills in orders a utility does not supply by central differences of its
    highest supplied derivative (lower accuracy, meant for custom utilities).
    ``partials="full"`` differentiates the whole in-interval expression;
    ``partials="anchor"`` reports the partials of the right-knot iterate.
    """
    if partials not in ("full", "anchor"):
        raise ValueError("partials must be 'full' or 'anchor'")
    if mode not in ("ad", "fd"):
        raise ValueError("mode must be 'ad' or 'fd'")
    if mode == "fd":
        warnings.warn("finite-difference anchor derivatives are lower-accuracy", RuntimeWarning, stacklevel=2)
    tb, xb, yb = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
    if np.any(~(xb > 0)):
        raise DomainError("wealth x must be positive")
    if tb.ndim == 0:
        return _point(float(tb), float(xb), float(yb), partition, u, model, partials, mode)
    out = {f: np.empty(tb.shape) for f in ("value", "t", "x", "y", "xx", "xy", "yy")}
    for idx in np.ndindex(tb.shape):
        p = _point(float(tb[idx]), float(xb[idx]), float(yb[idx]), partition, u, model, partials, mode)
        for f in out:
            out[f][idx] = getattr(p, f)
    return ValuePartials(**out)


def scheme_portfolio(t, x, y, partition: Partition, u: UtilitySpec, model: MarketModel, mode="ad", partials="full"):
    return pi_from_partials(scheme_value(t, x, y, partition, u, model, mode, partials), model, y)


def scheme_surrogate(partition: Partition, u: UtilitySpec, model: MarketModel, mode="ad", partials="full") -> ValueSurrogate:
    return ValueSurrogate(
        lambda t, x, y: scheme_value(t, x, y, partition, u, model, mode, partials), "scheme", partition.T
    )


def partition_from_config(cfg, T):
    from .errors import ConfigError

    if cfg is None:
        return Partition.uniform(T, 4)
    try:
        if "knots" in cfg:
            part = Partition(tuple(cfg["knots"]))
            if abs(part.T - T) > 1e-12:
                raise ConfigError(f"last knot {part.T} must equal T={T}", "scheme.knots")
            return part
        n = cfg.get("n", 4)
        # a list of step counts is expanded by the caller; validate each and default to the first
        ns = n if isinstance(n, list) else [n]
        if not ns:
            raise ConfigError("must be a step count or a non-empty list of them", "scheme.n")
        parts = [Partition.uniform(T, int(v)) for v in ns]
        return parts[0]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "scheme") from None
