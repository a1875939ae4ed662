"""Experiment configuration: YAML file, validated section by section before any work.

Schema (all sections optional, defaults shown by ``default_config()``):

    seed: int
    output: {root: str, name: str}
    grid: {n, L (null = causal box), h, dt_factor, t0, T, sponge_width}
    solver: {eps_factor, sigma_max, offset}
    potential: {label, bumps: [{center, radius, amplitude}, ...]}
    ensemble: {pairs, seed, count_range, center_radius, radius_range, amplitude_range}
    carleman: {lam, a, T, s, eta, suite_size, suite_seed, h, p, spread_limit, ibp_h, ibp_p}
    hs: {s, samples, nt}
    frequency: {k, n_theta, taper, min_ppw}
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "output": {"root": "runs", "name": "default"},
    "grid": {"n": 2, "L": None, "h": 1 / 32, "dt_factor": 0.5, "t0": -2.5, "T": 6.5, "sponge_width": 0.5},
    "solver": {"eps_factor": 4.0, "sigma_max": 40.0, "offset": 4.0},
    "potential": {"label": "V", "bumps": [{"center": [0.1, -0.2], "radius": 0.4, "amplitude": 1.0}]},
    "ensemble": {"pairs": 2, "seed": 0, "count_range": [1, 3], "center_radius": 0.4,
                 "radius_range": [0.2, 0.4], "amplitude_range": [-1.0, 1.0]},
    "carleman": {"lam": 0.1, "a": 1.1, "T": 6.5, "s": [0.5, 1.0, 2.0, 4.0], "eta": 0.1, "suite_size": 20,
                 "suite_seed": 7, "h": 1 / 32, "p": 2, "spread_limit": 2.0, "ibp_h": 1 / 32, "ibp_p": 1},
    "hs": {"s": [0.5, 1.0, 2.0, 4.0, 8.0], "samples": 201, "nt": 20001},
    "frequency": {"k": [2.0, 4.0, 8.0], "n_theta": 32, "taper": 0.1, "min_ppw": 6.0},
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"{where}: unknown key")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where}: expected a mapping")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = v
    return out


def _num(cfg: dict, sec: str, key: str, *, pos: bool = False, nonneg: bool = False, integer: bool = False,
         allow_none: bool = False) -> None:
    v = cfg[sec][key]
    where = f"{sec}.{key}"
    if v is None and allow_none:
        return
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    if pos and v <= 0:
        raise ConfigError(f"{where}: must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"{where}: must be >= 0, got {v!r}")


def _numlist(cfg: dict, sec: str, key: str, length: int | None = None, pos: bool = False) -> None:
    v = cfg[sec][key]
    where = f"{sec}.{key}"
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{where}: expected a non-empty list")
    if length is not None and len(v) != length:
        raise ConfigError(f"{where}: expected {length} entries, got {len(v)}")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"{where}[{i}]: expected a finite number, got {x!r}")
        if pos and x <= 0:
            raise ConfigError(f"{where}[{i}]: must be > 0, got {x!r}")


def validate(cfg: dict) -> dict:
    _num(cfg, "grid", "n", integer=True)
    n = int(cfg["grid"]["n"])
    if n not in (2, 3):
        raise ConfigError(f"grid.n: must be 2 or 3, got {n}")
    for key in ("h", "dt_factor", "T"):
        _num(cfg, "grid", key, pos=True)
    _num(cfg, "grid", "t0")
    _num(cfg, "grid", "sponge_width", nonneg=True)
    _num(cfg, "grid", "L", pos=True, allow_none=True)
    g = cfg["grid"]
    if g["dt_factor"] > 1 / math.sqrt(n):
        raise ConfigError(f"grid.dt_factor: CFL needs <= 1/sqrt(n) = {1 / math.sqrt(n):.4f}")
    if g["T"] <= 1:
        raise ConfigError("grid.T: must exceed 1")
    if g["L"] is not None and g["L"] <= 1 + g["sponge_width"]:
        raise ConfigError("grid.L: box must contain the unit ball plus the sponge")
    if g["h"] > 0.25:
        raise ConfigError("grid.h: must be <= 1/4")

    _num(cfg, "solver", "eps_factor", pos=True)
    _num(cfg, "solver", "sigma_max", nonneg=True)
    _num(cfg, "solver", "offset", pos=True)
    if cfg["solver"]["eps_factor"] < 2 * g["dt_factor"]:
        raise ConfigError("solver.eps_factor: pulse must span at least two time steps")
    if g["t0"] > -1 - 5 * cfg["solver"]["eps_factor"] * g["h"]:
        raise ConfigError(f"grid.t0: must be <= -1 - 5 eps = {-1 - 5 * cfg['solver']['eps_factor'] * g['h']}")

    bumps = cfg["potential"]["bumps"]
    if not isinstance(bumps, list):
        raise ConfigError("potential.bumps: expected a list")
    for i, b in enumerate(bumps):
        where = f"potential.bumps[{i}]"
        if not isinstance(b, dict) or set(b) - {"center", "radius", "amplitude"} or not {"center", "radius"} <= set(b):
            raise ConfigError(f"{where}: expected keys center, radius[, amplitude]")
        c = b["center"]
        if not isinstance(c, (list, tuple)) or len(c) != n:
            raise ConfigError(f"{where}.center: expected {n} coordinates")
        r = b["radius"]
        if not isinstance(r, (int, float)) or r <= 0:
            raise ConfigError(f"{where}.radius: must be > 0")
        if math.hypot(*c) + r >= 1:
            raise ConfigError(f"{where}: support leaves the unit ball")

    _num(cfg, "ensemble", "pairs", integer=True, nonneg=True)
    _num(cfg, "ensemble", "seed", integer=True)
    _num(cfg, "ensemble", "center_radius", nonneg=True)
    for key in ("count_range", "radius_range", "amplitude_range"):
        _numlist(cfg, "ensemble", key, 2)
    e = cfg["ensemble"]
    if e["center_radius"] + e["radius_range"][1] >= 1:
        raise ConfigError("ensemble: center_radius + max radius must be < 1")
    if e["radius_range"][0] <= 0 or e["radius_range"][0] > e["radius_range"][1]:
        raise ConfigError("ensemble.radius_range: need 0 < lo <= hi")
    if e["count_range"][0] < 1 or e["count_range"][0] > e["count_range"][1]:
        raise ConfigError("ensemble.count_range: need 1 <= lo <= hi")

    for key in ("lam", "T", "eta", "h", "spread_limit", "ibp_h"):
        _num(cfg, "carleman", key, pos=True)
    _num(cfg, "carleman", "a")
    for key in ("suite_size", "suite_seed", "p", "ibp_p"):
        _num(cfg, "carleman", key, integer=True, nonneg=True)
    _numlist(cfg, "carleman", "s", pos=True)
    c = cfg["carleman"]
    if c["a"] <= 1:
        raise ConfigError("carleman.a: must exceed 1")
    if c["p"] < 1 or c["ibp_p"] < 1:
        raise ConfigError("carleman.p: Gauss-Legendre order must be >= 1")

    _numlist(cfg, "hs", "s", pos=True)
    _num(cfg, "hs", "samples", integer=True, pos=True)
    _num(cfg, "hs", "nt", integer=True, pos=True)

    _numlist(cfg, "frequency", "k", pos=True)
    _num(cfg, "frequency", "n_theta", integer=True, pos=True)
    _num(cfg, "frequency", "taper", nonneg=True)
    _num(cfg, "frequency", "min_ppw", pos=True)
    if cfg["frequency"]["taper"] >= 1:
        raise ConfigError("frequency.taper: must be < 1")

    if isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int):
        raise ConfigError(f"seed: expected an integer, got {cfg['seed']!r}")
    for key in ("root", "name"):
        if not isinstance(cfg["output"][key], str) or not cfg["output"][key]:
            raise ConfigError(f"output.{key}: expected a non-empty string")
    return cfg


@dataclass
class ExperimentConfig:
    data: dict
    source: str = "<defaults>"

    def __getitem__(self, key: str) -> Any:
        return self.data[key]

    @property
    def digest(self) -> str:
        blob = json.dumps(self.data, sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read YAML (or use defaults), merge over the defaults and validate."""
    raw: dict = {}
    src = "<defaults>"
    if path is not None:
        src = str(path)
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML parse error in {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    if overrides:
        cfg = _merge(cfg, overrides)
    return ExperimentConfig(validate(cfg), src)
