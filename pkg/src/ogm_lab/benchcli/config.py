"""Experiment configuration: one table per run.

The on-disk format is chosen by file suffix through :data:`LOADERS`
(TOML by default, JSON also accepted). Loaders return plain mappings; all
validation happens in :func:`config_from_mapping`, so adding a format means
adding one parser function.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from ..methods import ALGORITHMS
from ..problems import KINDS, ProblemSpec


def _load_toml(path: Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _load_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh, object_pairs_hook=_reject_duplicates)


LOADERS: Dict[str, Callable[[Path], dict]] = {
    ".toml": _load_toml,
    ".json": _load_json,
}

RUN_KEYS = {
    "method", "problem", "iterations", "output", "seed", "dim", "kappa", "L",
    "m", "rho", "lam", "data_path", "t", "last_step", "theta", "form", "mode",
    "norm_diag", "L_scale", "x0",
}
TOP_KEYS = {"seed", "plots", "tolerance", "runs"}
TOLERANCE_KEYS = {"base", "drift", "relative", "floor", "cocoercivity"}


@dataclass(frozen=True)
class RunSpec:
    """One run: a method applied to a problem for a number of iterations."""

    name: str
    method: str
    problem: ProblemSpec
    iterations: int
    output: str
    t: Optional[float] = None
    last_step: bool = False
    theta: str = "exact"
    form: Optional[str] = None
    mode: str = "ogm"
    norm_diag: Optional[Tuple[float, ...]] = None
    L_scale: float = 1.0
    x0: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class ExperimentConfig:
    runs: Tuple[RunSpec, ...]
    seed: int = 0
    tolerances: Mapping[str, float] = field(default_factory=dict)
    plots: bool = False


def _typed(table, key, kind, where, default=None):
    if key not in table:
        return default
    v = table[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: {key} must be a number")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{where}: {key} must be an integer")
        return v
    if kind is bool:
        if not isinstance(v, bool):
            raise ConfigError(f"{where}: {key} must be true or false")
        return v
    if kind is str:
        if not isinstance(v, str):
            raise ConfigError(f"{where}: {key} must be a string")
        return v
    if kind is tuple:
        if not isinstance(v, list) or not all(
            isinstance(e, (int, float)) and not isinstance(e, bool) for e in v
        ):
            raise ConfigError(f"{where}: {key} must be a list of numbers")
        return tuple(float(e) for e in v)
    raise AssertionError(kind)


def _run_from_table(name, table, global_seed, base_dir) -> RunSpec:
    where = f"run {name!r}"
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    unknown = set(table) - RUN_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    method = _typed(table, "method", str, where)
    if method not in ALGORITHMS:
        raise ConfigError(f"{where}: unknown method {method!r}")
    kind = _typed(table, "problem", str, where)
    if kind not in KINDS:
        raise ConfigError(f"{where}: unknown problem {kind!r}")
    iterations = _typed(table, "iterations", int, where)
    if iterations is None or iterations < 1:
        raise ConfigError(f"{where}: iterations must be an integer >= 1")
    seed = _typed(table, "seed", int, where, global_seed)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"{where}: seed must be a 64-bit unsigned integer")
    data_path = _typed(table, "data_path", str, where)
    if data_path is not None:
        p = Path(data_path)
        data_path = str(p if p.is_absolute() else base_dir / p)
    pkw = dict(kind=kind, seed=seed, data_path=data_path)
    for key, typ in (("dim", int), ("kappa", float), ("L", float), ("m", int),
                     ("rho", float), ("lam", float)):
        v = _typed(table, key, typ, where)
        if v is not None:
            pkw[key] = v
    try:
        problem = ProblemSpec(**pkw)
    except Exception as exc:
        raise ConfigError(f"{where}: {exc}") from None
    t = _typed(table, "t", float, where)
    if t is not None and not 0.0 < t <= 1.0:
        raise ConfigError(f"{where}: t must lie in (0, 1]")
    theta = _typed(table, "theta", str, where, "exact")
    if theta not in ("exact", "simple"):
        raise ConfigError(f"{where}: theta must be 'exact' or 'simple'")
    form = _typed(table, "form", str, where)
    if form not in (None, "z", "momentum"):
        raise ConfigError(f"{where}: form must be 'z' or 'momentum'")
    mode = _typed(table, "mode", str, where, "ogm")
    if mode not in ("ogm", "agm"):
        raise ConfigError(f"{where}: mode must be 'ogm' or 'agm'")
    L_scale = _typed(table, "L_scale", float, where, 1.0)
    if not (L_scale > 0.0 and math.isfinite(L_scale)):
        raise ConfigError(f"{where}: L_scale must be positive")
    output = _typed(table, "output", str, where, name)
    if not output or "/" in output or "\\" in output:
        raise ConfigError(f"{where}: output must be a plain file prefix")
    return RunSpec(
        name=name, method=method, problem=problem, iterations=iterations, output=output,
        t=t, last_step=_typed(table, "last_step", bool, where, False), theta=theta,
        form=form, mode=mode, norm_diag=_typed(table, "norm_diag", tuple, where),
        L_scale=L_scale, x0=_typed(table, "x0", tuple, where),
    )


def config_from_mapping(data: Mapping, base_dir: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("configuration must be a table")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    seed = _typed(data, "seed", int, "config", 0)
    plots = _typed(data, "plots", bool, "config", False)
    tol = data.get("tolerance", {})
    if not isinstance(tol, Mapping) or set(tol) - TOLERANCE_KEYS:
        raise ConfigError(f"tolerance keys must be among {sorted(TOLERANCE_KEYS)}")
    tolerances = {k: _typed(tol, k, float, "tolerance") for k in tol}
    runs = data.get("runs")
    if not isinstance(runs, Mapping) or not runs:
        raise ConfigError("configuration needs at least one [runs.<name>] table")
    specs = tuple(_run_from_table(str(n), runs[n], seed, base_dir) for n in sorted(runs))
    outputs = [r.output for r in specs]
    if len(set(outputs)) != len(outputs):
        raise ConfigError("runs must use distinct output prefixes")
    return ExperimentConfig(runs=specs, seed=seed, tolerances=tolerances, plots=plots)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    loader = LOADERS.get(path.suffix.lower())
    if loader is None:
        raise ConfigError(f"unsupported config format {path.suffix!r}")
    try:
        data = loader(path)
    except ConfigError:
        raise
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return config_from_mapping(data, path.parent)
