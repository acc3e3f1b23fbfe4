"""Truncated bivariate Taylor series ("jets") for forward-mode differentiation.

A :class:`Jet` of order ``N`` at the base point ``(x0, y0)`` stores the
coefficients ``c[i, j]`` of

    f(x0 + dx, y0 + dy) = sum_{i + j <= N} c[i, j] dx**i dy**j

so that ``d^{i+j} f / dx^i dy^j (x0, y0) = i! j! c[i, j]``.  Arithmetic on
jets propagates every partial derivative up to order ``N`` exactly (up to
floating point), which is what the backward recursion in
:mod:`horizon_approx.scheme` needs: each step consumes second partials of
the previous iterate, so the order drops by two per step.
"""

from __future__ import annotations

from math import factorial

import numpy as np

__all__ = ["Jet", "sqrt", "exp", "log", "base_value"]


def _mask(order):
    i, j = np.indices((order + 1, order + 1))
    return (i + j) <= order


class Jet:
    """Bivariate Taylor polynomial truncated at total degree ``order``."""

    __slots__ = ("c", "order")
    __array_priority__ = 100  # numpy scalars defer to Jet operators

    def __init__(self, coeffs, order):
        c = np.array(coeffs, dtype=float)
        if c.shape != (order + 1, order + 1):
            raise ValueError(f"coefficient array must be {(order + 1,) * 2}, got {c.shape}")
        c[~_mask(order)] = 0.0
        self.c = c
        self.order = order

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value, order):
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, value, order, axis):
        """The coordinate function ``x`` (axis 0) or ``y`` (axis 1)."""
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        if order >= 1:
            if axis == 0:
                c[1, 0] = 1.0
            else:
                c[0, 1] = 1.0
        return cls(c, order)

    @classmethod
    def from_derivatives_x(cls, derivs, order):
        """Jet of a function of ``x`` only, given ``[f, f', f'', ...]`` at x0."""
        if len(derivs) < order + 1:
            raise ValueError("need derivatives through the jet order")
        c = np.zeros((order + 1, order + 1))
        for k in range(order + 1):
            c[k, 0] = derivs[k] / factorial(k)
        return cls(c, order)

    # -- queries ------------------------------------------------------------
    @property
    def value(self):
        return float(self.c[0, 0])

    def partial(self, i, j=0):
        """``d^{i+j} f / dx^i dy^j`` at the base point."""
        if i + j > self.order:
            raise ValueError(f"partial of order {i + j} exceeds jet order {self.order}")
        return float(self.c[i, j] * factorial(i) * factorial(j))

    def dx(self):
        n = self.order - 1
        if n < 0:
            raise ValueError("cannot differentiate an order-0 jet")
        c = np.zeros((n + 1, n + 1))
        k = np.arange(1, n + 2)[:, None]
        c[:, :] = (k * self.c[1:, :])[:, : n + 1]
        return Jet(c, n)

    def dy(self):
        n = self.order - 1
        if n < 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, n + 2)[None, :]
        c = (k * self.c[:, 1:])[: n + 1, :]
        return Jet(c, n)

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        return Jet(self.c[: order + 1, : order + 1], order)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            n = min(self.order, other.order)
            return self.truncate(n) if n < self.order else self, other.truncate(n) if n < other.order else other
        return self, Jet.constant(float(other), self.order)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c + b.c, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c - b.c, a.order)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b.c - a.c, a.order)

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * float(other), self.order)
        from scipy.signal import convolve2d  # deferred: scipy.signal is slow to import

        a, b = self._coerce(other)
        n = a.order
        prod = convolve2d(a.c, b.c)[: n + 1, : n + 1]
        return Jet(prod, n)

    __rmul__ = __mul__

    def reciprocal(self):
        f0 = self.c[0, 0]
        if f0 == 0.0:
            raise ZeroDivisionError("reciprocal of a jet with zero base value")
        # Newton on series, g <- g (2 - f g): exact through degree 2^k - 1 after k
        # steps; the geometric series in (f - f0) cancels badly at high order.
        g = Jet.constant(1.0 / f0, self.order)
        correct = 0
        while correct < self.order:
            g = g * (2.0 - self * g)
            correct = 2 * correct + 1
        return g

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / float(other), self.order)
        a, b = self._coerce(other)
        return a * b.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(1.0, self.order)
            for _ in range(p):
                out = out * self
            return out
        return _power(self, float(p))

    def __repr__(self):
        return f"Jet(value={self.value!r}, order={self.order})"


def _compose(g, derivs):
    """``f(g)`` given ``[f(g0), f'(g0), ...]`` via the Taylor series of ``f``."""
    n = g.order
    e = Jet(g.c.copy(), n)
    e.c[0, 0] = 0.0
    out = Jet.constant(derivs[0], n)
    term = Jet.constant(1.0, n)
    for k in range(1, n + 1):
        term = term * e
        out = out + term * (derivs[k] / factorial(k))
    return out


def _power(g, p):
    g0 = g.c[0, 0]
    if g0 <= 0.0:
        raise ValueError("non-integer power of a jet requires a positive base value")
    derivs = []
    coef = 1.0
    for k in range(g.order + 1):
        derivs.append(coef * g0 ** (p - k))
        coef *= p - k
    return _compose(g, derivs)


def sqrt(v):
    """Square root for floats, arrays and jets."""
    if isinstance(v, Jet):
        return _power(v, 0.5)
    return np.sqrt(v)


def exp(v):
    if isinstance(v, Jet):
        e0 = np.exp(v.c[0, 0])
        return _compose(v, [e0] * (v.order + 1))
    return np.exp(v)


def log(v):
    if isinstance(v, Jet):
        g0 = v.c[0, 0]
        if g0 <= 0.0:
            raise ValueError("log of a jet requires a positive base value")
        derivs = [np.log(g0)] + [(-1) ** (k - 1) * factorial(k - 1) / g0**k for k in range(1, v.order + 1)]
        return _compose(v, derivs)
    return np.log(v)


def base_value(v):
    """Plain numeric value of a float, array or jet (used for domain checks)."""
    if isinstance(v, Jet):
        return v.value
    return v
