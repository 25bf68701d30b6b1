"""Run configuration: YAML in, fully resolved and hashed dictionary out.

Every block is checked against a fixed key set; unknown keys and bad values
raise :class:`ConfigError` naming the offending field (``model.sigma2``).
Defaults are filled in so the resolved dictionary alone reproduces a run.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .levy_core import FiniteAtomic, GammaDensity, LevyModel, TwoPoint
from .problem import BoundaryData, ProblemSpec, RateFunction

__all__ = ["RunConfig", "load_config", "parse_config", "config_hash", "model_from_dict"]

METHODS = ("fk", "pide", "variational", "asymptotics")
FORMATS = ("csv", "json", "bin")

_TOP = {"seed", "model", "problem", "method", "numerics", "output"}
_MODEL = {"drift", "sigma2", "jumps", "hbar"}
_JUMPS = {
    "none": set(),
    "two_point": {"alpha", "mass"},
    "atoms": {"atoms"},
    "gamma": {"eps", "cutoff", "n_nodes"},
}
_RATE = {
    "quadratic": {"c"},
    "quadratic_minus_linear": {"shift"},
    "polynomial": {"coeffs"},
    "half_power": set(),
}
_DATA = {
    "scaled_gaussian": {"c", "normalized"},
    "constant_exp": set(),
    "one": set(),
    "schwartz": {"components"},
}
_PROBLEM = {"rate", "data", "horizon", "direction"}
_OUTPUT = {"format", "path"}

# numerics keys and defaults per method (and per asymptotics mode)
_NUMERICS = {
    "fk": {"points": [0.0], "t": None, "hbars": None, "n_paths": 100_000, "dt": 1e-3, "block_size": 2000},
    "pide": {"L": 8.0, "n": 801, "dt": 1e-3, "theta": 0.5, "hbar": None, "store_every": None},
    "variational": {"which": "config", "p": 1.0, "t": 1.0, "t1": 1.0, "kappa": 1.0, "alpha": None, "probe": False},
    "prefactor": {"times": [0.0, 0.25, 0.5, 0.75, 1.0], "direction": "forward", "n_paths": 100_000, "dt": 1e-3},
    "drift": {
        "setting": "config",
        "p": 1.0,
        "t": 0.5,
        "hbars": [0.2, 0.1, 0.05],
        "kappa": 0.5,
        "dp_factor": 0.05,
        "n_paths": 100_000,
        "dt": 1e-3,
    },
    "sweep": {
        "p": 0.4,
        "t": None,
        "hbars": [0.4, 0.2, 0.1, 0.05, 0.025],
        "source": "pide",
        "n_paths": 100_000,
        "dt": 1e-3,
        "points_per_width": 16.0,
        "margin": 6.0,
    },
}
_MODES = ("prefactor", "drift", "sweep")


def _check_keys(block: Any, allowed: set, where: str) -> dict:
    if block is None:
        return {}
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {where}.{unknown[0]}" if where else f"unknown key {unknown[0]}")
    return dict(block)


def _number(value, field: str, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{field} must be a number")
    if integer and int(value) != value:
        raise ConfigError(f"{field} must be an integer")
    if positive and not value > 0:
        raise ConfigError(f"{field} must be > 0")
    if nonneg and not value >= 0:
        raise ConfigError(f"{field} must be >= 0")
    return int(value) if integer else float(value)


def _resolve_model(block) -> dict:
    block = _check_keys(block, _MODEL, "model")
    out = {
        "drift": _number(block.get("drift", 0.0), "model.drift"),
        "sigma2": _number(block.get("sigma2", 0.0), "model.sigma2", nonneg=True),
        "hbar": None if block.get("hbar") is None else _number(block["hbar"], "model.hbar", positive=True),
    }
    jumps = block.get("jumps") or {"kind": "none"}
    if not isinstance(jumps, dict) or jumps.get("kind") not in _JUMPS:
        raise ConfigError(f"model.jumps.kind must be one of {sorted(_JUMPS)}")
    kind = jumps["kind"]
    jumps = _check_keys(jumps, _JUMPS[kind] | {"kind"}, "model.jumps")
    if kind == "two_point":
        jumps.setdefault("alpha", 1.0)
        jumps.setdefault("mass", 1.0)
        jumps["alpha"] = _number(jumps["alpha"], "model.jumps.alpha", positive=True)
        jumps["mass"] = _number(jumps["mass"], "model.jumps.mass", positive=True)
    elif kind == "atoms":
        atoms = jumps.get("atoms")
        if not atoms or not all(isinstance(a, (list, tuple)) and len(a) == 2 for a in atoms):
            raise ConfigError("model.jumps.atoms must be a list of [size, rate] pairs")
        jumps["atoms"] = [[_number(k, "model.jumps.atoms"), _number(w, "model.jumps.atoms", positive=True)] for k, w in atoms]
    elif kind == "gamma":
        jumps["eps"] = _number(jumps.get("eps", 1e-4), "model.jumps.eps", positive=True)
        jumps["cutoff"] = _number(jumps.get("cutoff", 30.0), "model.jumps.cutoff", positive=True)
        jumps["n_nodes"] = _number(jumps.get("n_nodes", 256), "model.jumps.n_nodes", positive=True, integer=True)
    out["jumps"] = jumps
    return out


def model_from_dict(d: dict) -> LevyModel:
    """Build a :class:`LevyModel` from a resolved ``model`` block."""
    j = d["jumps"]
    if j["kind"] == "two_point":
        jumps = TwoPoint(j["alpha"], j["mass"])
    elif j["kind"] == "atoms":
        jumps = FiniteAtomic(tuple(tuple(a) for a in j["atoms"]))
    elif j["kind"] == "gamma":
        jumps = GammaDensity(j["eps"], j["cutoff"], j["n_nodes"])
    else:
        jumps = None
    return LevyModel(d["drift"], d["sigma2"], jumps, d["hbar"])


def _resolve_problem(block) -> dict:
    block = _check_keys(block, _PROBLEM, "problem")
    rate = block.get("rate") or {"family": "quadratic"}
    if not isinstance(rate, dict) or rate.get("family") not in _RATE:
        raise ConfigError(f"problem.rate.family must be one of {sorted(_RATE)}")
    rate = _check_keys(rate, _RATE[rate["family"]] | {"family"}, "problem.rate")
    if rate["family"] == "quadratic":
        rate["c"] = _number(rate.get("c", 0.5), "problem.rate.c")
    elif rate["family"] == "quadratic_minus_linear":
        rate["shift"] = _number(rate.get("shift", 0.0), "problem.rate.shift")
    elif rate["family"] == "polynomial":
        coeffs = rate.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError("problem.rate.coeffs must be a non-empty list")
        rate["coeffs"] = [_number(c, "problem.rate.coeffs") for c in coeffs]

    data = block.get("data") or {"family": "one"}
    if not isinstance(data, dict) or data.get("family") not in _DATA:
        raise ConfigError(f"problem.data.family must be one of {sorted(_DATA)}")
    data = _check_keys(data, _DATA[data["family"]] | {"family"}, "problem.data")
    if data["family"] == "scaled_gaussian":
        data["c"] = _number(data.get("c", 0.5), "problem.data.c", positive=True)
        data["normalized"] = bool(data.get("normalized", False))
    elif data["family"] == "schwartz":
        comps = data.get("components")
        if not comps or not all(isinstance(c, (list, tuple)) and len(c) == 3 for c in comps):
            raise ConfigError("problem.data.components must be a list of [weight, mean, width] triples")
        data["components"] = [[_number(x, "problem.data.components") for x in c] for c in comps]

    direction = block.get("direction", "forward")
    if direction not in ("forward", "backward"):
        raise ConfigError("problem.direction must be 'forward' or 'backward'")
    return {
        "rate": rate,
        "data": data,
        "horizon": _number(block.get("horizon", 1.0), "problem.horizon", positive=True),
        "direction": direction,
    }


def rate_from_dict(d: dict) -> RateFunction:
    fam = d["family"]
    if fam == "quadratic":
        return RateFunction.quadratic(d["c"])
    if fam == "quadratic_minus_linear":
        return RateFunction.quadratic_minus_linear(d["shift"])
    if fam == "polynomial":
        return RateFunction.polynomial(d["coeffs"])
    return RateFunction.half_power()


def data_from_dict(d: dict) -> BoundaryData:
    fam = d["family"]
    if fam == "scaled_gaussian":
        return BoundaryData.scaled_gaussian(d["c"], d["normalized"])
    if fam == "constant_exp":
        return BoundaryData.constant_exp()
    if fam == "schwartz":
        return BoundaryData.schwartz(d["components"])
    return BoundaryData.one()


def _resolve_method(block) -> dict:
    block = _check_keys(block, {"kind", "mode"}, "method")
    kind = block.get("kind")
    if kind not in METHODS:
        raise ConfigError(f"method.kind must be one of {METHODS}")
    out = {"kind": kind}
    if kind == "asymptotics":
        mode = block.get("mode")
        if mode not in _MODES:
            raise ConfigError(f"method.mode must be one of {_MODES}")
        out["mode"] = mode
    elif "mode" in block:
        raise ConfigError("method.mode applies only to method.kind = asymptotics")
    return out


def _resolve_numerics(block, method: dict) -> dict:
    key = method.get("mode", method["kind"])
    defaults = _NUMERICS[key]
    block = _check_keys(block, set(defaults), "numerics")
    out = copy.deepcopy(defaults)
    out.update(block)
    for name in ("n_paths", "n", "block_size"):
        if name in out and out[name] is not None:
            out[name] = _number(out[name], f"numerics.{name}", positive=True, integer=True)
    for name in ("dt", "L", "hbar", "dp_factor", "points_per_width", "margin", "alpha"):
        if name in out and out[name] is not None:
            out[name] = _number(out[name], f"numerics.{name}", positive=True)
    for name in ("hbars", "points", "times"):
        if name in out and out[name] is not None:
            vals = out[name] if isinstance(out[name], list) else [out[name]]
            out[name] = [_number(v, f"numerics.{name}") for v in vals]
    return out


def _resolve_output(block) -> dict:
    block = _check_keys(block, _OUTPUT, "output")
    fmt = block.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}")
    path = block.get("path")
    return {"format": fmt, "path": None if path is None else str(path)}


def config_hash(resolved: dict) -> str:
    text = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class RunConfig:
    resolved: dict

    @property
    def hash(self) -> str:
        return config_hash(self.resolved)

    @property
    def seed(self) -> int:
        return self.resolved["seed"]

    @property
    def method(self) -> dict:
        return self.resolved["method"]

    @property
    def numerics(self) -> dict:
        return self.resolved["numerics"]

    @property
    def output(self) -> dict:
        return self.resolved["output"]

    def model(self) -> LevyModel:
        return model_from_dict(self.resolved["model"])

    def problem(self) -> ProblemSpec:
        p = self.resolved["problem"]
        return ProblemSpec(self.model(), rate_from_dict(p["rate"]), data_from_dict(p["data"]), p["horizon"], p["direction"])

    def with_overrides(self, seed=None, out=None, fmt=None) -> "RunConfig":
        r = copy.deepcopy(self.resolved)
        if seed is not None:
            r["seed"] = _number(seed, "seed", nonneg=True, integer=True)
        if out is not None:
            r["output"]["path"] = str(out)
        if fmt is not None:
            if fmt not in FORMATS:
                raise ConfigError(f"output.format must be one of {FORMATS}")
            r["output"]["format"] = fmt
        return RunConfig(r)


def parse_config(raw: dict) -> RunConfig:
    raw = _check_keys(raw, _TOP, "")
    method = _resolve_method(raw.get("method"))
    resolved = {
        "seed": _number(raw.get("seed", 0), "seed", nonneg=True, integer=True),
        "model": _resolve_model(raw.get("model")),
        "problem": _resolve_problem(raw.get("problem")),
        "method": method,
        "numerics": _resolve_numerics(raw.get("numerics"), method),
        "output": _resolve_output(raw.get("output")),
    }
    cfg = RunConfig(resolved)
    # construct once so model/problem invariants surface as config errors up front
    cfg.problem()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    return parse_config(raw)
