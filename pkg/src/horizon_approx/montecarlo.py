"""Monte Carlo verification: expected terminal utility under a given strategy.

Wealth follows dX = sigma(Y) pi (lam(Y) dt + dW1) and the factor
dY = b dt + a (rho dW1 + sqrt(1 - rho^2) dW2), discretised by Euler-Maruyama
(optionally in log-wealth for proportional strategies).

Paths are simulated in fixed-size blocks; block ``i`` draws from its own
stream seeded by ``(seed, i)``, so results do not depend on how blocks are
scheduled across threads.  Sums go through :func:`math.fsum`.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, SimulationError
from .market import MarketModel
from .oracle import CRRAParams, MertonParams, crra_exact_portfolio, merton_portfolio
from .surrogate import pi_hat
from .utility import GrowthCase, UtilitySpec, default_growth_case, derivative

__all__ = [
    "SimConfig",
    "StrategyMap",
    "MCEstimate",
    "AdmissibilityDiagnostics",
    "zero_strategy",
    "pi_hat_strategy",
    "merton_strategy",
    "exact_strategy",
    "brownian_increments",
    "simulate_expected_utility",
    "admissibility_diagnostics",
    "convergence_study",
]

THREADS_ENV = "HORIZON_APPROX_THREADS"


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    scheme: str = "euler"
    y_min: float = 1e-6
    antithetic: bool = False
    x_floor: float = 1e-10
    block_size: int = 8192
    budget: float = 5e9
    threads: int | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not (self.dt > 0):
            raise DomainError("dt must be positive")
        if self.scheme not in ("euler", "log_euler"):
            raise DomainError("scheme must be 'euler' or 'log_euler'")
        if not (self.y_min > 0):
            raise DomainError("y_min must be positive")
        if self.antithetic and self.block_size % 2:
            raise DomainError("block_size must be even with antithetic sampling")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    def steps(self, horizon):
        if not (horizon > 0):
            raise DomainError("simulation horizon T - t0 must be positive")
        if self.dt > horizon * (1 + 1e-12):
            raise DomainError("dt must not exceed T - t0")
        n = max(1, int(math.ceil(horizon / self.dt - 1e-9)))
        if self.n_paths * n > self.budget:
            raise DomainError(f"n_paths * steps = {self.n_paths * n:.3g} exceeds the budget {self.budget:.3g}")
        return n

    def worker_count(self):
        if self.threads is not None:
            return max(1, int(self.threads))
        return max(1, int(os.environ.get(THREADS_ENV, "1")))


@dataclass(frozen=True)
class StrategyMap:
    """Amount invested in the risky asset as a function of (t, x, y).

    ``proportional`` marks strategies with bounded pi/x, which the
    ``log_euler`` scheme requires.
    """

    fn: Callable
    label: str
    proportional: bool = True

    def __call__(self, t, x, y):
        return self.fn(t, x, y)


def zero_strategy():
    return StrategyMap(lambda t, x, y: np.zeros_like(x), "zero", True)


def pi_hat_strategy(u: UtilitySpec, model: MarketModel, T: float):
    return StrategyMap(lambda t, x, y: pi_hat(t, x, y, u, model, T), "pi_hat", True)


def merton_strategy(mp: MertonParams):
    return StrategyMap(lambda t, x, y: merton_portfolio(x, mp), "merton", True)


def exact_strategy(p: CRRAParams):
    return StrategyMap(lambda t, x, y: crra_exact_portfolio(t, x, y, p), "exact", True)


@dataclass
class MCEstimate:
    label: str
    mean: float
    se: float
    n_paths: int
    n_simulated: int
    steps: int
    min_wealth: float
    floor_hit_fraction: float
    moment_sigma_pi2: float
    moment_weighted: float
    sup_sigma_pi_over_x: float
    reflections: int
    moment_gamma: float
    per_path: dict = field(default_factory=dict, repr=False)


def _rng(seed, block):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _normals(rng, n, antithetic):
    """(n, 2) standard normals; antithetic pairs are interleaved (z, -z)."""
    if not antithetic:
        return rng.standard_normal((n, 2))
    half = rng.standard_normal(((n + 1) // 2, 2))
    z = np.empty((2 * half.shape[0], 2))
    z[0::2] = half
    z[1::2] = -half
    return z[:n]


def brownian_increments(n_paths, n_steps, dt, rho, seed=0, antithetic=False):
    """Increments (dW1, dB) with dB = rho dW1 + sqrt(1 - rho^2) dW2, shape (n_steps, n_paths)."""
    rng = _rng(seed, 0)
    sq = math.sqrt(dt)
    dw1 = np.empty((n_steps, n_paths))
    db = np.empty((n_steps, n_paths))
    for k in range(n_steps):
        z = _normals(rng, n_paths, antithetic)
        dw1[k] = sq * z[:, 0]
        db[k] = rho * dw1[k] + math.sqrt(1 - rho**2) * sq * z[:, 1]
    return dw1, db


def _simulate_block(block, first_path, n, strategy, u, model, t0, x0, y0, steps, h, cfg, gamma_m):
    rng = _rng(cfg.seed, block)
    rho = model.rho
    rho_c = math.sqrt(1.0 - rho**2)
    sq = math.sqrt(h)
    x = np.full(n, float(x0))
    y = np.full(n, float(y0))
    min_x = x.copy()
    floor_hit = np.zeros(n, dtype=bool)
    m1 = np.zeros(n)
    m2 = np.zeros(n)
    sup_ratio = np.zeros(n)
    reflections = 0
    for k in range(steps):
        t = t0 + k * h
        pi = np.asarray(strategy(t, x, y), dtype=float) * np.ones(n)
        sig = np.asarray(model.sigma(y), dtype=float) * np.ones(n)
        lam = np.asarray(model.lam(y), dtype=float) * np.ones(n)
        if not np.all(np.isfinite(pi)):
            i = int(np.flatnonzero(~np.isfinite(pi))[0])
            raise SimulationError(f"non-finite allocation on path {first_path + i} at step {k}")
        sp = sig * pi
        m1 += sp**2 * h
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            m2 += x ** (-2.0 * gamma_m) * sp**2 * h
            np.maximum(sup_ratio, np.abs(sp / x), out=sup_ratio)
        z = _normals(rng, n, cfg.antithetic)
        dw1 = sq * z[:, 0]
        if cfg.scheme == "log_euler":
            p = sp / x
            x = x * np.exp(p * lam * h - 0.5 * p**2 * h + p * dw1)
        else:
            x = x + sp * (lam * h + dw1)
            low = x < cfg.x_floor
            if np.any(low):
                floor_hit |= low
                x = np.where(low, cfg.x_floor, x)
        bad = ~np.isfinite(x)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise SimulationError(f"non-finite wealth on path {first_path + i} at step {k}")
        np.minimum(min_x, x, out=min_x)
        ya = np.asarray(model.a(y), dtype=float)
        y = y + np.asarray(model.b(y), dtype=float) * h + ya * (rho * dw1 + rho_c * sq * z[:, 1])
        if model.positive_factor:
            low = y < cfg.y_min
            reflections += int(np.count_nonzero(low))
            y = np.where(low, 2.0 * cfg.y_min - y, y)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        util = np.asarray(derivative(u, 0, x), dtype=float)
    return dict(utility=util, min_wealth=min_x, floor_hit=floor_hit, m1=m1, m2=m2, sup_ratio=sup_ratio, reflections=reflections)


def _run(strategy, u, model, t0, x0, y0, T, cfg: SimConfig, gamma_m):
    if not (x0 > 0):
        raise DomainError("x0 must be positive")
    if model.positive_factor and not (y0 > 0):
        raise DomainError("y0 must be positive for this factor model")
    if cfg.scheme == "log_euler" and not strategy.proportional:
        raise DomainError("log_euler requires a proportional strategy")
    steps = cfg.steps(T - t0)
    h = (T - t0) / steps
    blocks = []
    start = 0
    while start < cfg.n_paths:
        n = min(cfg.block_size, cfg.n_paths - start)
        blocks.append((len(blocks), start, n))
        start += n

    def work(b):
        return _simulate_block(b[0], b[1], b[2], strategy, u, model, t0, x0, y0, steps, h, cfg, gamma_m)

    workers = cfg.worker_count()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    out = {k: np.concatenate([p[k] for p in parts]) for k in ("utility", "min_wealth", "floor_hit", "m1", "m2", "sup_ratio")}
    out["reflections"] = sum(p["reflections"] for p in parts)
    return out, steps


def _mean(v):
    return math.fsum(v.tolist()) / len(v)


def _mean_se(values, antithetic):
    if antithetic and len(values) >= 2:
        n2 = len(values) // 2 * 2
        samples = 0.5 * (values[0:n2:2] + values[1:n2:2])
        if len(values) > n2:
            samples = np.append(samples, values[-1])
    else:
        samples = values
    n = len(samples)
    mean = _mean(samples)
    if n < 2:
        return mean, 0.0, n
    var = math.fsum(((samples - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var / n), n


def _estimate(label, res, steps, cfg, gamma_m, upto=None):
    sl = slice(0, upto)
    util = res["utility"][sl]
    if not np.all(np.isfinite(util)):
        i = int(np.flatnonzero(~np.isfinite(util))[0])
        raise SimulationError(f"non-finite terminal utility on path {i}")
    mean, se, n_eff = _mean_se(util, cfg.antithetic)
    with np.errstate(over="ignore", invalid="ignore"):
        m2 = res["m2"][sl]
        moment_weighted = _mean(m2) if np.all(np.isfinite(m2)) else math.inf
    return MCEstimate(
        label=label,
        mean=mean,
        se=se,
        n_paths=n_eff,
        n_simulated=len(util),
        steps=steps,
        min_wealth=float(np.min(res["min_wealth"][sl])),
        floor_hit_fraction=float(np.count_nonzero(res["floor_hit"][sl])) / len(util),
        moment_sigma_pi2=_mean(res["m1"][sl]),
        moment_weighted=moment_weighted,
        sup_sigma_pi_over_x=float(np.max(res["sup_ratio"][sl])),
        reflections=int(res["reflections"]),
        moment_gamma=gamma_m,
        per_path={k: v[sl] for k, v in res.items() if isinstance(v, np.ndarray)},
    )


def _moment_gamma(u, case):
    case = case or default_growth_case(u) or GrowthCase.case1()
    return case.moment_gamma


def simulate_expected_utility(
    strategy: StrategyMap,
    u: UtilitySpec,
    model: MarketModel,
    t0: float,
    x0: float,
    y0: float,
    T: float,
    cfg: SimConfig,
    case: GrowthCase | None = None,
) -> MCEstimate:
    """Estimate E[U(X_T)] from (t0, x0, y0) under ``strategy``.

    The standard error uses antithetic pair averages when antithetic
    sampling is on; ``n_paths`` of the result is then the number of pairs.
    """
    gamma_m = _moment_gamma(u, case)
    res, steps = _run(strategy, u, model, t0, x0, y0, T, cfg, gamma_m)
    return _estimate(strategy.label, res, steps, cfg, gamma_m)


@dataclass
class AdmissibilityDiagnostics:
    label: str
    full: MCEstimate
    half: MCEstimate
    moment_gamma: float
    gamma_discrepancy: bool
    growth_sigma_pi2: float
    growth_weighted: float
    growth_sup_ratio: float
    dominance_sigma_pi2: float
    dominance_weighted: float
    divergent: bool
    reasons: list

    def summary(self):
        return {
            "moment_sigma_pi2": self.full.moment_sigma_pi2,
            "moment_weighted": self.full.moment_weighted,
            "sup_sigma_pi_over_x": self.full.sup_sigma_pi_over_x,
            "min_wealth": self.full.min_wealth,
            "floor_hit_fraction": self.full.floor_hit_fraction,
            "divergent": self.divergent,
        }


def _dominance(v):
    """Largest single-path share of a non-negative sample sum (0 for an all-zero sample)."""
    if not np.all(np.isfinite(v)):
        return 1.0
    total = math.fsum(v.tolist())
    return float(np.max(v)) / total if total > 0 else 0.0


def _growth(full, half):
    if not (math.isfinite(full) and math.isfinite(half)):
        return math.inf
    if half == 0.0:
        return 1.0 if full == 0.0 else math.inf
    return full / half


def admissibility_diagnostics(
    strategy: StrategyMap,
    u: UtilitySpec,
    model: MarketModel,
    t0: float,
    x0: float,
    y0: float,
    T: float,
    cfg: SimConfig,
    case: GrowthCase | None = None,
    growth_tol: float = 1.5,
    dominance_tol: float = 0.25,
) -> AdmissibilityDiagnostics:
    """Empirical admissibility checks for ``strategy``.

    Estimates E int sigma^2 pi^2 ds, E int X^(-2 gamma) sigma^2 pi^2 ds and
    sup |sigma pi / x| on ``cfg.n_paths`` paths and on the first half of them.
    For a finite expectation the two estimates agree up to noise; the
    strategy is flagged divergent when an estimate grows by more than
    ``growth_tol`` between the half and full sample, is non-finite, when a
    single path carries more than ``dominance_tol`` of a moment sum (the
    signature of an infinite expectation), or when any path hit the wealth
    floor.
    """
    case = case or default_growth_case(u) or GrowthCase.case1()
    gamma_m = case.moment_gamma
    if case.gamma_discrepancy:
        warnings.warn(
            f"Case 2 exponents give max(alpha, beta) = {case.gamma_admissibility} <= 1; "
            f"moment check uses gamma = {gamma_m}",
            RuntimeWarning,
            stacklevel=2,
        )
    res, steps = _run(strategy, u, model, t0, x0, y0, T, cfg, gamma_m)
    half_n = max(2, (cfg.n_paths // 4) * 2)
    full = _estimate(strategy.label, res, steps, cfg, gamma_m)
    half = _estimate(strategy.label, res, steps, cfg, gamma_m, upto=half_n)
    g1 = _growth(full.moment_sigma_pi2, half.moment_sigma_pi2)
    g2 = _growth(full.moment_weighted, half.moment_weighted)
    g3 = _growth(full.sup_sigma_pi_over_x, half.sup_sigma_pi_over_x)
    d1 = _dominance(full.per_path["m1"])
    d2 = _dominance(full.per_path["m2"])
    reasons = []
    if d1 > dominance_tol:
        reasons.append(f"one path carries {d1:.3g} of E int sigma^2 pi^2")
    if d2 > dominance_tol:
        reasons.append(f"one path carries {d2:.3g} of E int X^-2g sigma^2 pi^2")
    if g1 > growth_tol:
        reasons.append(f"E int sigma^2 pi^2 grew x{g1:.3g} when n_paths doubled")
    if g2 > growth_tol:
        reasons.append(f"E int X^-2g sigma^2 pi^2 grew x{g2:.3g} when n_paths doubled")
    if full.floor_hit_fraction > 0:
        reasons.append(f"{full.floor_hit_fraction:.3g} of paths hit the wealth floor")
    return AdmissibilityDiagnostics(
        strategy.label, full, half, gamma_m, case.gamma_discrepancy, g1, g2, g3, d1, d2, bool(reasons), reasons
    )


def convergence_study(surrogate_error: Callable, ts, x, y, T: float) -> float:
    """Least-squares slope of log|error(t, x, y)| against log(T - t).

    Points with exactly zero error are dropped with a warning.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.ndim != 1 or ts.size < 2:
        raise DomainError("need at least two times")
    if np.any(np.diff(ts) <= 0) or np.any(ts >= T):
        raise DomainError("times must increase strictly toward T and stay below it")
    errs = np.array([abs(float(surrogate_error(t, x, y))) for t in ts])
    keep = errs > 0
    if not np.all(keep):
        warnings.warn(f"dropped {int((~keep).sum())} point(s) with zero error", RuntimeWarning, stacklevel=2)
    if keep.sum() < 2:
        raise DomainError("fewer than two non-zero errors to fit")
    slope, _ = np.polyfit(np.log(T - ts[keep]), np.log(errs[keep]), 1)
    return float(slope)
