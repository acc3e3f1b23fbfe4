"""How good is the closed-form surrogate a short time before the horizon?

For power utility every quantity is a power of wealth, so we print the
x-free coefficients: U = c / x^2 and pi = c * x.
"""

from _setup import T, Y0, model, params, u

from horizon_approx import crra_exact_portfolio, crra_exact_value, pi_hat, value_hat

print(f"{'t':>5} {'U exact':>12} {'U hat':>12} {'|err|':>10} {'pi exact':>10} {'pi hat':>10} {'|err|':>10}")
for t in (1.5, 1.9):
    U = float(crra_exact_value(t, 1.0, Y0, params))
    Uh = float(value_hat(t, 1.0, Y0, u, model, T).value)
    pU = float(crra_exact_portfolio(t, 1.0, Y0, params))
    ph = float(pi_hat(t, 1.0, Y0, u, model, T))
    print(f"{t:5.2f} {U:12.6f} {Uh:12.6f} {abs(U - Uh):10.2e} {pU:10.6f} {ph:10.6f} {abs(pU - ph):10.2e}")

# Going from T - t = 0.5 to 0.1 shrinks the value error by about 25 = 5^2:
# the surrogate is second-order accurate in the time to horizon.
