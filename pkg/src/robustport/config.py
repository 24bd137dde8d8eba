"""Run configuration: a strict key-value (YAML) schema wiring the model,
uncertainty rectangle, utility, grid, and simulation settings.

Schema (all keys validated, unknown keys rejected)::

    model:
      b:    {kind: smooth-ramp, left: 0.0, right: 0.2, tail_radius: 2.0}
      beta: {kind: constant, value: 0.0}
      r:    {kind: constant, value: 0.0}
      rho: 0.5
    rectangle: {mu_minus: 0.1, mu_plus: 0.3, sigma_minus: 0.2, sigma_plus: 0.4}
    utility: {q: 0.5}
    grid: {horizon: 1.0, n_t: 2001, n_y: 201, y_radius: 3.0, theta: 0.5}
    sim: {n_paths: 200000, n_steps: 500, seed: 7, x0: 1.0, y0: 0.0}
    output_dir: out            # optional

Coefficient kinds: constant {value, tail_radius?}, smooth-ramp {left, right,
tail_radius}, piecewise-linear-clamped {left, right, tail_radius, knots}.
grid.y_radius defaults to the coefficient tail radius + 2; grid.theta to 0.5.
The simulation horizon is grid.horizon (no separate key).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import yaml

from .model import (CoefficientFn, GridSpec, MarketModel, PowerUtility,
                    UncertaintyRectangle, default_y_radius)
from .simulate import SimConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config",
           "canonical_dict", "dump_config", "solve_config_hash"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: MarketModel
    rectangle: UncertaintyRectangle
    utility: PowerUtility
    grid: GridSpec
    sim: SimConfig
    output_dir: str | None = None

    def with_overrides(self, seed: int | None = None, n_paths: int | None = None,
                       n_t: int | None = None, n_y: int | None = None) -> "RunConfig":
        cfg = self
        if seed is not None or n_paths is not None:
            sim = replace(cfg.sim,
                          seed=cfg.sim.seed if seed is None else seed,
                          n_paths=cfg.sim.n_paths if n_paths is None else n_paths)
            cfg = replace(cfg, sim=sim)
        if n_t is not None or n_y is not None:
            grid = replace(cfg.grid,
                           n_t=cfg.grid.n_t if n_t is None else n_t,
                           n_y=cfg.grid.n_y if n_y is None else n_y)
            cfg = replace(cfg, grid=grid)
        return cfg


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, path: str, required: tuple[str, ...],
                optional: tuple[str, ...] = ()):
    unknown = set(node) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in node]
    if missing:
        raise ConfigError(f"{path}: missing required key(s) {missing}")


def _number(node: dict, path: str, key: str, default=None) -> float:
    if key not in node:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(node: dict, path: str, key: str, default=None) -> int:
    if key not in node:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _coefficient(node, path: str) -> CoefficientFn:
    node = _require_mapping(node, path)
    kind = node.get("kind")
    try:
        if kind == "constant":
            _check_keys(node, path, ("kind", "value"), ("tail_radius",))
            v = _number(node, path, "value")
            n = _number(node, path, "tail_radius", 1.0)
            return CoefficientFn("constant", v, v, n)
        if kind == "smooth-ramp":
            _check_keys(node, path, ("kind", "left", "right", "tail_radius"))
            return CoefficientFn.ramp(_number(node, path, "left"),
                                      _number(node, path, "right"),
                                      _number(node, path, "tail_radius"))
        if kind == "piecewise-linear-clamped":
            _check_keys(node, path, ("kind", "left", "right", "tail_radius", "knots"))
            knots = node["knots"]
            if (not isinstance(knots, list)
                    or any(not isinstance(p, list) or len(p) != 2 for p in knots)):
                raise ConfigError(f"{path}.knots: expected a list of [y, value] pairs")
            return CoefficientFn.piecewise(_number(node, path, "left"),
                                           _number(node, path, "right"),
                                           _number(node, path, "tail_radius"),
                                           knots)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: expected one of constant / smooth-ramp / "
                      f"piecewise-linear-clamped, got {kind!r}")


def parse_config(data) -> RunConfig:
    root = _require_mapping(data, "config")
    _check_keys(root, "config", ("model", "rectangle", "utility", "grid", "sim"),
                ("output_dir",))

    mnode = _require_mapping(root["model"], "model")
    _check_keys(mnode, "model", ("b", "beta", "r", "rho"))
    try:
        model = MarketModel(
            b=_coefficient(mnode["b"], "model.b"),
            beta=_coefficient(mnode["beta"], "model.beta"),
            r=_coefficient(mnode["r"], "model.r"),
            rho=_number(mnode, "model", "rho"),
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc

    rnode = _require_mapping(root["rectangle"], "rectangle")
    _check_keys(rnode, "rectangle", ("mu_minus", "mu_plus", "sigma_minus", "sigma_plus"))
    try:
        rect = UncertaintyRectangle(
            _number(rnode, "rectangle", "mu_minus"),
            _number(rnode, "rectangle", "mu_plus"),
            _number(rnode, "rectangle", "sigma_minus"),
            _number(rnode, "rectangle", "sigma_plus"),
        )
    except ValueError as exc:
        raise ConfigError(f"rectangle: {exc}") from exc

    unode = _require_mapping(root["utility"], "utility")
    _check_keys(unode, "utility", ("q",))
    try:
        utility = PowerUtility(_number(unode, "utility", "q"))
    except ValueError as exc:
        raise ConfigError(f"utility: {exc}") from exc

    gnode = _require_mapping(root["grid"], "grid")
    _check_keys(gnode, "grid", ("horizon", "n_t", "n_y"), ("y_radius", "theta"))
    try:
        grid = GridSpec(
            horizon=_number(gnode, "grid", "horizon"),
            n_t=_integer(gnode, "grid", "n_t"),
            n_y=_integer(gnode, "grid", "n_y"),
            y_radius=_number(gnode, "grid", "y_radius", default_y_radius(model)),
            theta=_number(gnode, "grid", "theta", 0.5),
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc

    snode = _require_mapping(root["sim"], "sim")
    _check_keys(snode, "sim", ("n_paths", "n_steps", "seed", "x0", "y0"))
    try:
        sim = SimConfig(
            n_paths=_integer(snode, "sim", "n_paths"),
            n_steps=_integer(snode, "sim", "n_steps"),
            seed=_integer(snode, "sim", "seed"),
            x0=_number(snode, "sim", "x0"),
            y0=_number(snode, "sim", "y0"),
            horizon=grid.horizon,
        )
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc

    out = root.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"output_dir: expected a string, got {out!r}")
    return RunConfig(model, rect, utility, grid, sim, out)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from exc
    return parse_config(data)


def _coefficient_dict(f: CoefficientFn) -> dict:
    if f.kind == "constant":
        return {"kind": "constant", "value": f.left, "tail_radius": f.tail_radius}
    d = {"kind": f.kind, "left": f.left, "right": f.right, "tail_radius": f.tail_radius}
    if f.kind == "piecewise-linear-clamped":
        d["knots"] = [[a, b] for a, b in f.knots]
    return d


def canonical_dict(cfg: RunConfig) -> dict:
    """Fully-defaulted plain-dict form; dump -> parse round-trips identically."""
    d = {
        "model": {
            "b": _coefficient_dict(cfg.model.b),
            "beta": _coefficient_dict(cfg.model.beta),
            "r": _coefficient_dict(cfg.model.r),
            "rho": cfg.model.rho,
        },
        "rectangle": {
            "mu_minus": cfg.rectangle.mu_minus,
            "mu_plus": cfg.rectangle.mu_plus,
            "sigma_minus": cfg.rectangle.sigma_minus,
            "sigma_plus": cfg.rectangle.sigma_plus,
        },
        "utility": {"q": cfg.utility.q},
        "grid": {
            "horizon": cfg.grid.horizon,
            "n_t": cfg.grid.n_t,
            "n_y": cfg.grid.n_y,
            "y_radius": cfg.grid.y_radius,
            "theta": cfg.grid.theta,
        },
        "sim": {
            "n_paths": cfg.sim.n_paths,
            "n_steps": cfg.sim.n_steps,
            "seed": cfg.sim.seed,
            "x0": cfg.sim.x0,
            "y0": cfg.sim.y0,
        },
    }
    if cfg.output_dir is not None:
        d["output_dir"] = cfg.output_dir
    return d


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(canonical_dict(cfg), sort_keys=False)


def solve_config_hash(cfg: RunConfig) -> str:
    """Hash over the solve-relevant sections (model/rectangle/utility/grid)
    only, so simulation-setting edits don't invalidate a cached surface."""
    d = canonical_dict(cfg)
    payload = json.dumps({k: d[k] for k in ("model", "rectangle", "utility", "grid")},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
