"""Command line front end: ``horizon-approx <command> [--config F] [--preset P] [--out F] [--seed N]``.

Commands write a versioned CSV (to ``--out`` or stdout); human-readable
reports and warnings go to stderr.  Exit codes: 0 success, 1 assumption
failure, 2 usage/config error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import sys
import warnings

import numpy as np

from . import montecarlo as mc
from .config import ExperimentConfig, build_config, load_config, load_preset, merge, parse_grid
from .errors import ConfigError, HorizonApproxError
from .market import validate_model_bounds
from .oracle import crra_exact_portfolio, crra_exact_value
from .scheme import Partition, scheme_portfolio, scheme_value
from .surrogate import hjb_residual, pi_hat, sandwich, value_hat
from .utility import Log, Power, check_growth_conditions, weight_h

SCHEMA = "# horizon-approx schema v1"

EXIT_OK, EXIT_ASSUMPTION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

TABLE1_COLUMNS = ["t", "T", "U_coeff", "Uhat_coeff", "abs_err", "piU_coeff", "pihat_coeff", "pi_abs_err"]
SWEEP_COLUMNS = [
    "t", "x", "y", "U_exact", "U_hat", "U_lower", "U_upper",
    "pi_exact", "pi_hat", "pi_merton", "pi_scheme", "hjb_residual_hat", "within_delta",
]
SIMULATE_COLUMNS = [
    "t0", "x0", "y0", "strategy", "mc_mean", "mc_se", "n_paths", "exact_J", "gap", "bound_c2_dt2_h",
    "min_wealth", "floor_hit_fraction", "moment_sigma_pi2", "moment_weighted", "sup_sigma_pi_over_x", "reflections",
]
SCHEME_COLUMNS = ["t", "x", "y", "n", "scheme_value", "scheme_pi", "U_exact", "pi_exact", "pi_hat", "pi_merton"]
CHECK_COLUMNS = ["item", "order", "inf", "sup", "slope_low", "slope_high", "passed"]

DEFAULT_BOUND_C = 1e3
SIM_STRATEGIES = ("pi_hat", "merton", "zero", "exact")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def render_csv(columns, rows, summary=()):
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    for key, value in summary:
        buf.write(f"# summary {key}={_fmt(value)}\n")
    return buf.getvalue()


def _f(v):
    return float(np.asarray(v))


def _merton_gamma(cfg: ExperimentConfig):
    if isinstance(cfg.utility, Power):
        return cfg.utility.gamma
    if isinstance(cfg.utility, Log):
        return 1.0
    return None


def _pi_merton(cfg, x, y):
    g = _merton_gamma(cfg)
    if g is None:
        return None
    m = cfg.market
    return _f(m.lam(y)) * x / (g * _f(m.sigma(y)))


def _note(msg):
    print(msg, file=sys.stderr)


# -- commands -------------------------------------------------------------------


def cmd_check(cfg: ExperimentConfig):
    opts = cfg.options
    grid = np.logspace(-4, 4, 400)
    report = check_growth_conditions(cfg.utility, cfg.case, grid)
    for line in report.lines():
        _note("growth " + line)
    # the bound assumption is global in y, so the default grid spans the whole factor domain
    if "model_y_grid" in opts:
        y_grid = parse_grid(opts["model_y_grid"], "options.model_y_grid")
    elif cfg.market.positive_factor:
        y_grid = np.logspace(-6, 6, 241)
    else:
        y_grid = np.linspace(-1e3, 1e3, 201)
    c = float(opts.get("model_bound", DEFAULT_BOUND_C))
    bounds = validate_model_bounds(cfg.market, y_grid, c)
    if not bounds.passed:
        _note(
            f"warning: coefficient bound sup={bounds.sup:.6g} at y={bounds.argmax_y:.6g} exceeds {c:.6g}; "
            "model assumptions are not all satisfied"
        )
    rows = []
    for k in sorted(report.ratio_inf):
        lo, hi = report.tail_slopes[k]
        rows.append(dict(item="growth_ratio", order=k, inf=report.ratio_inf[k], sup=report.ratio_sup[k],
                         slope_low=lo, slope_high=hi, passed=report.passed_by_order[k]))
    rows.append(dict(item="model_bounds", sup=bounds.sup, passed=bounds.passed))
    status = EXIT_OK if report.passed else EXIT_ASSUMPTION
    if not report.passed:
        _note("growth conditions FAILED")
    return render_csv(CHECK_COLUMNS, rows), status


def _require_oracle(cfg, command):
    p = cfg.oracle
    if p is None:
        raise ConfigError(f"{command} needs power utility with the chacko_viceira market", "utility")
    return p


def _shape_check(f1, f2, scale, what, t):
    if abs(f2 * scale - f1) > 1e-8 * abs(f1):
        raise ArithmeticError(f"{what} at t={t} is not of the expected power form in x")


def cmd_table1(cfg: ExperimentConfig):
    p = _require_oracle(cfg, "table1")
    opts = cfg.raw.get("table1") or {}
    times = [float(t) for t in opts.get("times", [1.5, 1.9])]
    y = float(opts.get("y", cfg.market.params["m"]))
    u, model, T, g = cfg.utility, cfg.market, cfg.T, cfg.utility.gamma
    rows = []
    for t in times:
        if not 0 <= t <= T:
            raise ConfigError(f"time {t} outside [0, T]", "table1.times")
        vals = {}
        for x in (1.0, 2.0):
            vals[x] = (
                _f(crra_exact_value(t, x, y, p)),
                _f(value_hat(t, x, y, u, model, T).value),
                _f(crra_exact_portfolio(t, x, y, p)),
                _f(pi_hat(t, x, y, u, model, T)),
            )
        scale = 2.0 ** (g - 1.0)
        for i, what in enumerate(("U", "Uhat")):
            _shape_check(vals[1.0][i], vals[2.0][i], scale, what, t)
        for i, what in ((2, "piU"), (3, "pihat")):
            _shape_check(vals[1.0][i], vals[2.0][i], 0.5, what, t)
        U, Uh, pU, ph = vals[1.0]
        rows.append(dict(t=t, T=T, U_coeff=U, Uhat_coeff=Uh, abs_err=abs(U - Uh),
                         piU_coeff=pU, pihat_coeff=ph, pi_abs_err=abs(pU - ph)))
    return render_csv(TABLE1_COLUMNS, rows), EXIT_OK


def _convergence_ts(T):
    s = min(T, 2.0) / 2.0 * np.array([1.0, 0.8, 0.6, 0.4, 0.2, 0.02])
    return T - s


def cmd_sweep(cfg: ExperimentConfig):
    ts, xs, ys = cfg.grid("t"), cfg.grid("x"), cfg.grid("y")
    u, model, T = cfg.utility, cfg.market, cfg.T
    p = cfg.oracle
    sw = sandwich(u, model, T, cfg.case)
    _note(f"sandwich: c2={sw.c2:.6g} delta={'not established' if sw.delta is None else f'{sw.delta:.6g}'}")
    rows = []
    for t, x, y in itertools.product(ts, xs, ys):
        t, x, y = float(t), float(x), float(y)
        hat = value_hat(t, x, y, u, model, T)
        row = dict(
            t=t, x=x, y=y,
            U_hat=_f(hat.value),
            U_lower=_f(sw.lower.value(t, x, y)),
            U_upper=_f(sw.upper.value(t, x, y)),
            pi_hat=_f(pi_hat(t, x, y, u, model, T)),
            pi_merton=_pi_merton(cfg, x, y),
            pi_scheme=_f(scheme_portfolio(t, x, y, cfg.partition, u, model)),
            hjb_residual_hat=_f(hjb_residual(hat, t, x, y, model)),
            within_delta=bool(sw.within_window(t)),
        )
        if p is not None:
            row["U_exact"] = _f(crra_exact_value(t, x, y, p))
            row["pi_exact"] = _f(crra_exact_portfolio(t, x, y, p))
        rows.append(row)
    summary = [("c2", sw.c2), ("delta", sw.delta)]
    if p is not None:
        x0, y0 = float(xs[0]), float(ys[0])

        def err(t, x, y):
            return _f(crra_exact_value(t, x, y, p)) - _f(value_hat(t, x, y, u, model, T).value)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            summary.append(("convergence_slope", mc.convergence_study(err, _convergence_ts(T), x0, y0, T)))
    return render_csv(SWEEP_COLUMNS, rows, summary), EXIT_OK


def _strategy(name, cfg):
    u, model, T = cfg.utility, cfg.market, cfg.T
    if name == "pi_hat":
        return mc.pi_hat_strategy(u, model, T)
    if name == "zero":
        return mc.zero_strategy()
    if name == "exact":
        return mc.exact_strategy(_require_oracle(cfg, "the exact strategy"))
    if name == "merton":
        g = _merton_gamma(cfg)
        if g is None:
            raise ConfigError("merton strategy needs power or log utility", "simulation.strategies")
        return mc.StrategyMap(
            lambda t, x, y: model.lam(y) * x / (g * model.sigma(y)), "merton", True
        )
    raise ConfigError(f"unknown strategy {name!r} (choose from {', '.join(SIM_STRATEGIES)})", "simulation.strategies")


def cmd_simulate(cfg: ExperimentConfig):
    if cfg.simulation is None:
        raise ConfigError("missing required key", "simulation")
    raw = cfg.sim_raw
    u, model, T = cfg.utility, cfg.market, cfg.T
    t0s = np.atleast_1d(np.asarray(raw.get("t0", 0.0), dtype=float))
    x0 = float(raw.get("x0", 1.0))
    y0 = float(raw.get("y0", model.params.get("m", 0.0)))
    names = raw.get("strategies", ["pi_hat"])
    if not isinstance(names, list) or not names:
        raise ConfigError("must be a non-empty list", "simulation.strategies")
    strategies = [_strategy(str(n), cfg) for n in names]
    for t0 in t0s:
        if not 0 <= t0 < T:
            raise ConfigError(f"t0={t0} must lie in [0, T)", "simulation.t0")
    sw = sandwich(u, model, T, cfg.case, s_grid=[])
    p = cfg.oracle
    rows = []
    for t0 in t0s:
        t0 = float(t0)
        exact = _f(crra_exact_value(t0, x0, y0, p)) if p is not None else None
        bound = _f(sw.c2 * (T - t0) ** 2 * weight_h(cfg.case, x0, 0))
        for s in strategies:
            est = mc.simulate_expected_utility(s, u, model, t0, x0, y0, T, cfg.simulation, cfg.case)
            rows.append(dict(
                t0=t0, x0=x0, y0=y0, strategy=s.label, mc_mean=est.mean, mc_se=est.se, n_paths=cfg.simulation.n_paths,
                exact_J=exact, gap=None if exact is None else est.mean - exact, bound_c2_dt2_h=bound,
                min_wealth=est.min_wealth, floor_hit_fraction=est.floor_hit_fraction,
                moment_sigma_pi2=est.moment_sigma_pi2, moment_weighted=est.moment_weighted,
                sup_sigma_pi_over_x=est.sup_sigma_pi_over_x, reflections=est.reflections,
            ))
            _note(f"simulate t0={t0:g} {s.label}: mean={est.mean:.8g} se={est.se:.3g}")
    return render_csv(SIMULATE_COLUMNS, rows), EXIT_OK


def cmd_scheme_eval(cfg: ExperimentConfig):
    ts, xs, ys = cfg.grid("t"), cfg.grid("x"), cfg.grid("y")
    u, model, T = cfg.utility, cfg.market, cfg.T
    sch = cfg.raw.get("scheme") or {}
    ns = sch.get("n", cfg.partition.n)
    if isinstance(ns, list) and "knots" not in sch:
        try:
            partitions = [Partition.uniform(T, int(n)) for n in ns]
        except HorizonApproxError as exc:
            raise ConfigError(str(exc), "scheme.n") from None
    else:
        partitions = [cfg.partition]
    p = cfg.oracle
    rows = []
    for part in partitions:
        for t, x, y in itertools.product(ts, xs, ys):
            t, x, y = float(t), float(x), float(y)
            sv = scheme_value(t, x, y, part, u, model)
            row = dict(
                t=t, x=x, y=y, n=part.n,
                scheme_value=_f(sv.value),
                scheme_pi=_f(scheme_portfolio(t, x, y, part, u, model)),
                pi_hat=_f(pi_hat(t, x, y, u, model, T)),
                pi_merton=_pi_merton(cfg, x, y),
            )
            if p is not None:
                row["U_exact"] = _f(crra_exact_value(t, x, y, p))
                row["pi_exact"] = _f(crra_exact_portfolio(t, x, y, p))
            rows.append(row)
    return render_csv(SCHEME_COLUMNS, rows), EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "table1": cmd_table1,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "scheme-eval": cmd_scheme_eval,
}


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="horizon-approx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "check": "check growth conditions and coefficient bounds",
        "table1": "reproduce the value/portfolio comparison table",
        "sweep": "evaluate surrogates, bounds and portfolios on a grid",
        "simulate": "Monte Carlo expected utility of candidate strategies",
        "scheme-eval": "evaluate the recursive scheme on a grid",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", help="JSON experiment config (merged over --preset)")
        sp.add_argument("--preset", choices=["fouque_cv"], help="bundled parameter set")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        sp.add_argument("--seed", type=_seed, help="override simulation.seed")
    return parser


def load_experiment(args) -> ExperimentConfig:
    raw = {}
    if args.preset:
        raw = load_preset(args.preset)
    elif args.config is None and args.command == "table1":
        raw = load_preset("fouque_cv")
    if args.config:
        raw = merge(raw, load_config(args.config))
    if not raw:
        raise ConfigError("no configuration given (use --config or --preset)", "--config")
    return build_config(raw, args.seed)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_experiment(args)
        text, status = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        _note(f"horizon-approx: usage error: {exc}")
        return EXIT_USAGE
    except (HorizonApproxError, ArithmeticError, FloatingPointError) as exc:
        _note(f"horizon-approx: numerical error: {type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL
    out = args.out or cfg.output
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
