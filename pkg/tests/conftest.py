import numpy as np
import pytest

from horizon_approx.oracle import CRRAParams
from horizon_approx.utility import GrowthCase, Power

# parameter set of the square-root volatility study
MU, M, BETA, RHO, T = 0.0811, 27.9345, 1.12, 0.5241, 2.0
Y0 = 27.9345


@pytest.fixture(scope="session")
def params():
    return CRRAParams(3.0, MU, M, BETA, RHO, T)


@pytest.fixture(scope="session")
def model(params):
    return params.market()


@pytest.fixture(scope="session")
def power3():
    return Power(3.0)


@pytest.fixture(scope="session")
def case3():
    return GrowthCase.case2(3.0, 3.0)


# the "standard grid" for derivative checks
STD_T = np.array([0.0, 0.5, 1.0, 1.5, 1.9])
STD_X = np.array([0.5, 1.0, 2.0])
STD_Y = np.array([20.0, Y0, 35.0])


def fd1(f, v, h):
    """Fourth-order central first derivative."""
    return (-f(v + 2 * h) + 8 * f(v + h) - 8 * f(v - h) + f(v - 2 * h)) / (12 * h)


def fd2(f, v, h):
    """Fourth-order central second derivative."""
    return (-f(v + 2 * h) + 16 * f(v + h) - 30 * f(v) + 16 * f(v - h) - f(v - 2 * h)) / (12 * h**2)


def fd_mixed(f, x, y, hx, hy):
    return (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4 * hx * hy)


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


def close(a, b, scale, rtol=1e-5):
    """Relative agreement, with an absolute floor (relative to ``scale``) for partials that vanish identically."""
    return abs(float(a) - float(b)) <= rtol * max(abs(float(b)), 1e-6 * abs(float(scale)))


# -- acceptance reporting -------------------------------------------------------
ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, passed, detail)
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")
