import math
import warnings

import numpy as np
import pytest

from conftest import BETA, M, MU, RHO, STD_T, STD_X, STD_Y, T, Y0, close, fd1, fd2, fd_mixed
from horizon_approx.errors import CapabilityError, ConcavityError, ConfigError, DomainError
from horizon_approx.jet import Jet
from horizon_approx.market import builtin_constant
from horizon_approx.oracle import crra_exact_portfolio, crra_exact_value
from horizon_approx.scheme import (
    Partition,
    _bracket,
    partition_from_config,
    scheme_portfolio,
    scheme_surrogate,
    scheme_value,
)
from horizon_approx.surrogate import pi_hat, value_hat
from horizon_approx.utility import Custom, Power, derivative, exponential

# two-step iterate at (t=0, x=1, y=27.9345), computed symbolically
# (see test_two_steps_match_symbolic_recursion)
V0_N2 = -0.4415953265097975
PI0_N2 = 0.7436832330937907


def test_partition_validation():
    assert Partition.uniform(2.0, 4).times == (0.0, 0.5, 1.0, 1.5, 2.0)
    with pytest.raises(DomainError):
        Partition((0.0, 1.0, 1.0, 2.0))
    with pytest.raises(DomainError):
        Partition((0.5, 1.0))
    with pytest.raises(DomainError):
        Partition.uniform(1.0, 0)
    p = Partition((0.0, 0.3, 1.0))
    assert p.interval(0.0) == 0 and p.interval(0.3) == 1 and p.interval(1.0) == 1
    with pytest.raises(DomainError):
        p.interval(1.5)


def test_partition_from_config():
    assert partition_from_config(None, 2.0).n == 4
    assert partition_from_config({"n": 8}, 2.0).n == 8
    assert partition_from_config({"knots": [0, 1.2, 2]}, 2.0).times[1] == 1.2
    with pytest.raises(ConfigError, match="scheme.knots"):
        partition_from_config({"knots": [0, 1.0]}, 2.0)
    with pytest.raises(ConfigError):
        partition_from_config({"n": 0}, 2.0)


def test_single_step_collapses_to_uhat(power3, model):
    part = Partition.uniform(T, 1)
    t, x, y = np.meshgrid(STD_T, STD_X, STD_Y, indexing="ij")
    s = scheme_value(t, x, y, part, power3, model)
    h = value_hat(t, x, y, power3, model, T)
    for f in ("value", "t", "x", "y", "xx", "xy", "yy"):
        a, b = np.asarray(getattr(s, f)), np.asarray(getattr(h, f))
        assert np.all(np.abs(a - b) <= 1e-13 * np.maximum(np.abs(b), 1e-3)), f
    assert np.allclose(scheme_portfolio(t, x, y, part, power3, model), pi_hat(t, x, y, power3, model, T), rtol=1e-13)


def test_two_steps_frozen(power3, model):
    part = Partition.uniform(T, 2)
    assert scheme_value(0.0, 1.0, Y0, part, power3, model).value == pytest.approx(V0_N2, rel=1e-13)
    assert scheme_portfolio(0.0, 1.0, Y0, part, power3, model) == pytest.approx(PI0_N2, rel=1e-12)


def test_two_steps_match_symbolic_recursion(power3, model):
    sp = pytest.importorskip("sympy")
    x, y = sp.symbols("x y", positive=True)
    mu, m, beta, rho = (sp.Rational(str(v)) for v in (MU, M, BETA, RHO))
    lam, a, b = mu * sp.sqrt(y), beta * sp.sqrt(y), m - y

    def hbar(V):
        Vx = sp.diff(V, x)
        return -((lam * Vx + rho * a * sp.diff(Vx, y)) ** 2) / (2 * sp.diff(Vx, x)) + a**2 * sp.diff(V, y, 2) / 2 + b * sp.diff(V, y)

    V1 = -1 / (2 * x**2)
    V1 = V1 + 1 * hbar(V1)
    V0 = V1 + 1 * hbar(V1)
    pi = (-lam * sp.diff(V0, x) - rho * a * sp.diff(V0, x, y)) * sp.sqrt(y) / sp.diff(V0, x, 2)
    pt = {x: 0.8, y: 31.0}
    part = Partition.uniform(T, 2)
    assert scheme_value(0.0, 0.8, 31.0, part, power3, model).value == pytest.approx(float(V0.subs(pt)), rel=1e-12)
    assert scheme_portfolio(0.0, 0.8, 31.0, part, power3, model) == pytest.approx(float(pi.subs(pt)), rel=1e-11)


def test_four_steps_beat_merton(power3, model, params):
    part = Partition.uniform(T, 4)
    coef = scheme_portfolio(0.0, 1.0, Y0, part, power3, model)
    exact = crra_exact_portfolio(0.0, 1.0, Y0, params)
    merton = MU * Y0 / 3.0
    assert abs(coef - 0.745029) < 0.010134
    assert abs(coef - exact) < abs(merton - exact)
    assert coef == pytest.approx(0.7441136588944, rel=1e-10)


def test_refinement_moves_toward_exact(power3, model, params):
    exact = crra_exact_portfolio(0.0, 1.0, Y0, params)
    gaps = [abs(scheme_portfolio(0.0, 1.0, Y0, Partition.uniform(T, n), power3, model) - exact) for n in (1, 2, 4, 8)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    v4 = scheme_value(0.0, 1.0, Y0, Partition.uniform(T, 4), power3, model).value
    assert abs(v4 - crra_exact_value(0.0, 1.0, Y0, params)) < 1e-3


def test_scheme_partials_match_fd(power3, model):
    part = Partition.uniform(T, 4)

    def val(t, x, y):
        return scheme_value(t, x, y, part, power3, model).value

    # time points sit strictly inside intervals so the t-difference does not straddle a knot
    for t in STD_T + 0.05:
        for x in STD_X:
            for y in STD_Y[::2]:
                p = scheme_value(t, x, y, part, power3, model)
                hx, hy = 1e-3 * x, 1e-3 * y
                assert close(p.x, fd1(lambda v: val(t, v, y), x, hx), p.value)
                assert close(p.y, fd1(lambda v: val(t, x, v), y, hy), p.value)
                assert close(p.xx, fd2(lambda v: val(t, v, y), x, hx), p.value)
                assert close(p.yy, fd2(lambda v: val(t, x, v), y, hy), p.value)
                assert close(p.xy, fd_mixed(lambda a, c: val(t, a, c), x, y, 1e-4 * x, 1e-4 * y), p.value)
                assert close(p.t, fd1(lambda s: val(s, x, y), t, 1e-3), p.value)


def test_anchor_partials_mode(power3, model):
    part = Partition.uniform(T, 4)
    # anchor partials on [1.0, 1.5) are those of the knot iterate at 1.5
    knot = scheme_value(1.5, 1.0, Y0, part, power3, model)
    for t in (1.0, 1.2, 1.49):
        anchor = scheme_value(t, 1.0, Y0, part, power3, model, partials="anchor")
        full = scheme_value(t, 1.0, Y0, part, power3, model)
        assert anchor.value == full.value
        for f in ("x", "y", "xx", "xy", "yy"):
            assert getattr(anchor, f) == pytest.approx(getattr(knot, f), rel=1e-13)
    assert scheme_value(1.2, 1.0, Y0, part, power3, model).x != knot.x


def _truncated_power3():
    u = Power(3.0)
    return Custom(tuple((lambda k: (lambda x: derivative(u, k, x)))(k) for k in range(5)), name="power3-4")


def test_custom_utility_needs_fd_mode(model):
    cu = _truncated_power3()
    with pytest.raises(CapabilityError, match="mode='fd'"):
        scheme_value(0.0, 1.0, Y0, Partition.uniform(T, 2), cu, model)
    # a single step only needs the supplied orders
    assert scheme_value(1.5, 1.0, Y0, Partition.uniform(T, 1), cu, model).value == pytest.approx(
        value_hat(1.5, 1.0, Y0, Power(3.0), model, T).value, rel=1e-14
    )


def test_fd_mode_tracks_ad(power3, model):
    cu = _truncated_power3()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for n, tol in ((2, 1e-6), (4, 1e-4)):
            part = Partition.uniform(T, n)
            a = scheme_portfolio(0.0, 1.0, Y0, part, power3, model)
            f = scheme_portfolio(0.0, 1.0, Y0, part, cu, model, mode="fd")
            assert f == pytest.approx(a, rel=tol)
    with pytest.warns(RuntimeWarning, match="lower-accuracy"):
        scheme_value(0.0, 1.0, Y0, Partition.uniform(T, 2), cu, model, mode="fd")


def test_fd_mode_exponential_constant_market():
    # for CARA utility and constant coefficients each step multiplies V by (1 - lam^2 dt / 2)
    mdl = builtin_constant(0.08, 0.2, 0.0, 0.0, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        v = scheme_value(0.0, 1.0, 0.0, Partition.uniform(1.0, 4), exponential(1.0), mdl, mode="fd").value
    assert v == pytest.approx(-math.exp(-1.0) * (1 - 0.16 * 0.25 / 2) ** 4, rel=1e-6)


def test_bracket_detects_lost_concavity(model):
    x = Jet.variable(1.0, 4, axis=0)
    convex = x * x
    y = Jet.variable(Y0, 4, axis=1)
    with pytest.raises(ConcavityError, match="t=1.5"):
        _bracket(convex, (model.lam(y), model.a(y), model.b(y)), model.rho, 1.5)


def test_argument_validation(power3, model):
    part = Partition.uniform(T, 2)
    with pytest.raises(DomainError):
        scheme_value(0.0, -1.0, Y0, part, power3, model)
    with pytest.raises(DomainError):
        scheme_value(2.5, 1.0, Y0, part, power3, model)
    with pytest.raises(ValueError):
        scheme_value(0.0, 1.0, Y0, part, power3, model, mode="symbolic")
    with pytest.raises(ValueError):
        scheme_value(0.0, 1.0, Y0, part, power3, model, partials="mixed")


def test_surrogate_wrapper(power3, model):
    s = scheme_surrogate(Partition.uniform(T, 2), power3, model)
    assert s.kind == "scheme" and s.T == T
    assert s.value(0.0, 1.0, Y0) == pytest.approx(V0_N2, rel=1e-13)
