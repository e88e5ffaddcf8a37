"""Run configuration: a YAML mapping merged over built-in defaults."""
from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .domain import build_grid, build_grid_around, shape_from_spec
from .exponent import exponent_from_spec, scalar_from_spec, trace
from .kernel import kernel_from_spec
from .lebesgue import function_from_expr, random_bump_function
from .operator import DualVector

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config"]


class ConfigError(ValueError):
    """The configuration file cannot be parsed or has the wrong structure."""


DEFAULTS = {
    "seed": 42,
    "grid": {"omega": {"shape": "interval", "bounds": [-1.0, 1.0]}, "n": 64},
    "exponent": {"kind": "sine", "s": 0.3, "base": 2.0, "lam": 0.5},
    "kernel": {"kind": "singular"},
    "function": {"kind": "random"},
    "lebesgue_exponent": None,
    "embedding": {"r": [2.0, 3.0, 4.0]},
    "problem": {
        "kind": "dirichlet",
        "f": "1",
        "kirchhoff": {"a": 1.0, "b": 1.0, "alpha": 1.1, "mu": 0.0, "gamma": 4.0,
                      "theta": None, "A": 1.0, "c1": 1.0, "beta": None},
    },
    "tolerances": {"dirichlet": 1e-8, "kirchhoff": 1e-6, "checks": 1e-9},
    "samples": 20,
    "output": {"dir": "out"},
}

SECTIONS = set(DEFAULTS)


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


@dataclass
class RunConfig:
    raw: dict

    @property
    def seed(self):
        return self.raw.get("seed")

    @property
    def samples(self) -> int:
        return int(self.raw["samples"])

    def tol(self, name) -> float:
        return float(self.raw["tolerances"][name])

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["output"]["dir"])

    def rng_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("this command draws random samples and needs a seed")
        return int(self.seed)

    def rng(self):
        return np.random.default_rng(self.rng_seed())

    # builders; each raises the module's own validation error on bad values

    def grid(self):
        spec = self.raw["grid"]
        omega = shape_from_spec(spec["omega"])
        if "box" in spec:
            return build_grid(omega.dim, spec["box"], float(spec["h"]), omega)
        return build_grid_around(omega, h=spec.get("h"), n=spec.get("n"),
                                 collar=spec.get("collar"))

    def exponent(self, g):
        return exponent_from_spec(self.raw["exponent"], g)

    def kernel(self, p):
        return kernel_from_spec(self.raw["kernel"], p)

    def lebesgue_exponent(self, p):
        spec = self.raw["lebesgue_exponent"]
        return trace(p) if spec is None else scalar_from_spec(spec, p.grid)

    def function(self, g, rng=None):
        spec = self.raw["function"]
        if spec.get("kind", "random") == "random":
            return random_bump_function(g, rng if rng is not None else self.rng())
        return function_from_expr(g, spec["expr"])

    def source(self, g) -> DualVector:
        text = str(self.raw["problem"].get("f", "0"))
        return DualVector(g, function_from_expr(g, text).values)

    def kirchhoff(self, g):
        from .solver import KirchhoffData
        spec = dict(self.raw["problem"]["kirchhoff"])
        for key in ("gamma", "beta"):
            if isinstance(spec.get(key), dict):
                spec[key] = scalar_from_spec(spec[key], g)
        known = set(KirchhoffData.__dataclass_fields__)
        extra = set(spec) - known
        if extra:
            raise ConfigError(f"unknown Kirchhoff parameters {sorted(extra)}")
        return KirchhoffData(**spec)


def load_config(path=None) -> RunConfig:
    """Defaults, optionally overridden by a YAML file.

    A file that omits ``seed`` leaves it unset; randomized commands then
    refuse to run unless ``--seed`` is given.
    """
    if path is None:
        return RunConfig(copy.deepcopy(DEFAULTS))
    try:
        text = Path(path).read_text()
        data = yaml.safe_load(text)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(data) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    merged = _merge(DEFAULTS, data)
    if "seed" not in data:
        merged["seed"] = None
    return RunConfig(merged)
