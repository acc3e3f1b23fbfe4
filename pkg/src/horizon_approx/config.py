"""JSON experiment configuration: loading, preset merging and validation.

Everything is validated up front so that a malformed file fails with a field
path before any computation starts.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConstructionError, DomainError
from .market import MarketModel, market_from_config
from .montecarlo import SimConfig
from .oracle import CRRAParams
from .scheme import Partition, partition_from_config
from .utility import GrowthCase, Power, UtilitySpec, default_growth_case, utility_from_config

__all__ = ["ExperimentConfig", "load_preset", "load_config", "merge", "parse_grid", "build_config"]

PRESETS = ("fouque_cv",)


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(PRESETS)})", "--preset")
    text = resources.files("horizon_approx").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", str(p)) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", str(p))
    return data


def merge(base: dict, over: dict) -> dict:
    """Recursive dict merge; values in ``over`` win."""
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_grid(spec, path) -> np.ndarray:
    """A list of numbers, or ``{"start", "stop", "num", "spacing": "lin"|"log"}``."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        arr = np.array([float(spec)])
    elif isinstance(spec, list):
        try:
            arr = np.array([float(v) for v in spec])
        except (TypeError, ValueError):
            raise ConfigError("grid entries must be numbers", path) from None
    elif isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"missing field {exc.args[0]!r}", path) from None
        spacing = spec.get("spacing", "lin")
        if spacing == "lin":
            arr = np.linspace(start, stop, num)
        elif spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log spacing needs positive endpoints", path)
            arr = np.logspace(np.log10(start), np.log10(stop), num)
        else:
            raise ConfigError("spacing must be 'lin' or 'log'", f"{path}.spacing")
    else:
        raise ConfigError("expected a list or a range object", path)
    if arr.size == 0:
        raise ConfigError("grid must be non-empty", path)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("grid entries must be finite", path)
    return arr


def _growth_case(cfg, u, path="growth_case"):
    if cfg is None:
        return default_growth_case(u) or GrowthCase.case1()
    try:
        if int(cfg.get("case", 1)) == 1:
            return GrowthCase.case1()
        return GrowthCase.case2(float(cfg["alpha"]), float(cfg["beta"]))
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}", path) from None
    except (ConstructionError, DomainError) as exc:
        raise ConfigError(str(exc), path) from None


def _sim_config(cfg, seed):
    if cfg is None:
        return None
    if not isinstance(cfg, dict):
        raise ConfigError("expected an object", "simulation")
    known = {"n_paths", "dt", "seed", "scheme", "antithetic", "y_min", "x_floor", "block_size", "budget", "threads"}
    extra = set(cfg) - known - {"t0", "x0", "y0", "strategies"}
    if extra:
        raise ConfigError(f"unknown field(s) {sorted(extra)}", "simulation")
    kw = {k: cfg[k] for k in known if k in cfg}
    if seed is not None:
        kw["seed"] = seed
    try:
        return SimConfig(**kw)
    except (TypeError, DomainError) as exc:
        raise ConfigError(str(exc), "simulation") from None


@dataclass
class ExperimentConfig:
    raw: dict
    utility: UtilitySpec
    market: MarketModel
    T: float
    case: GrowthCase
    grids: dict = field(default_factory=dict)
    partition: Partition | None = None
    simulation: SimConfig | None = None
    sim_raw: dict = field(default_factory=dict)
    output: str | None = None
    options: dict = field(default_factory=dict)

    @property
    def oracle(self) -> CRRAParams | None:
        """Closed-form parameters when power utility meets the square-root model."""
        if not isinstance(self.utility, Power) or self.market.name != "chacko_viceira":
            return None
        mp = self.market.params
        try:
            return CRRAParams(self.utility.gamma, mp["mu"], mp["m"], mp["beta"], mp["rho"], self.T, mp["r"])
        except ConstructionError:
            return None

    def grid(self, name):
        if name not in self.grids:
            raise ConfigError("grid is required for this command", f"grids.{name}")
        return self.grids[name]


def build_config(raw: dict, seed=None) -> ExperimentConfig:
    if "utility" not in raw:
        raise ConfigError("missing required key", "utility")
    if "market" not in raw:
        raise ConfigError("missing required key", "market")
    if "T" not in raw:
        raise ConfigError("missing required key", "T")
    u = utility_from_config(raw["utility"])
    model = market_from_config(raw["market"])
    try:
        T = float(raw["T"])
    except (TypeError, ValueError):
        raise ConfigError("must be a number", "T") from None
    if not (T > 0):
        raise ConfigError("must be positive", "T")
    grids = {}
    for name, spec in (raw.get("grids") or {}).items():
        grids[name] = parse_grid(spec, f"grids.{name}")
    if "t" in grids and (np.any(grids["t"] < 0) or np.any(grids["t"] > T)):
        raise ConfigError("times must lie in [0, T]", "grids.t")
    if "x" in grids and np.any(grids["x"] <= 0):
        raise ConfigError("wealth must be positive", "grids.x")
    partition = partition_from_config(raw.get("scheme"), T)
    if seed is not None and not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
    sim = _sim_config(raw.get("simulation"), seed)
    return ExperimentConfig(
        raw=raw,
        utility=u,
        market=model,
        T=T,
        case=_growth_case(raw.get("growth_case"), u),
        grids=grids,
        partition=partition,
        simulation=sim,
        sim_raw=dict(raw.get("simulation") or {}),
        output=raw.get("output"),
        options=dict(raw.get("options") or {}),
    )
