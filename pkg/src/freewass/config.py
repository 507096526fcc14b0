"""Experiment configuration: a versioned JSON schema parsed into dataclasses.

Example::

    {
      "schema_version": 1,
      "output_dir": "out",
      "resolution": {"n_grid": 4096, "n_quantile": 16384},
      "measures": {
        "sc": {"type": "semicircle", "center": 0, "variance": 1},
        "sc2": {"type": "dilate", "alpha": 2, "of": {"type": "semicircle", "variance": 1}}
      },
      "checks": [
        {"check_id": "check_lsi", "measures": ["sc2"]},
        {"check_id": "check_talagrand", "measures": ["sc2"]}
      ],
      "functionals": ["sc", "sc2"],
      "flow": {"measures": ["sc2"], "t_grid": [0.1, 0.5, 1.0]},
      "oracle": {"measure": "sc", "r": 1.0, "n_dim": 400, "n_trials": 50, "seed": 0}
    }

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import hashlib
import inspect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .measure import MeasureError, measure_from_spec
from .verify import CHECKS

SCHEMA_VERSION = 1
N_GRID_BOUNDS = (64, 65537)
N_QUANTILE_BOUNDS = (64, 1 << 20)
N_DIM_BOUNDS = (32, 2000)
_RESERVED = {"m", "m0", "measures", "measure_id", "ids", "tolerance"}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class Resolution:
    n_grid: int = 4096
    n_quantile: int = 16384


@dataclass(frozen=True)
class CheckConfig:
    check_id: str
    measures: tuple
    params: dict = field(default_factory=dict)
    tolerance: float | None = None


@dataclass(frozen=True)
class FlowConfig:
    measures: tuple = ()
    t_grid: tuple = ()


@dataclass(frozen=True)
class OracleConfig:
    measure: str
    r: float = 1.0
    n_dim: int = 400
    n_trials: int = 50
    seed: int = 0
    ks_threshold: float = 0.03
    w2_threshold: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    measures: dict
    checks: tuple = ()
    resolution: Resolution = Resolution()
    flow: FlowConfig = FlowConfig()
    oracle: tuple = ()
    functionals: tuple = ()
    output_dir: Path = Path("out")
    raw: dict = field(default_factory=dict)
    source: Path | None = None

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the config."""
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def build_measures(self):
        """Construct every declared measure (errors carry the field path)."""
        out = {}
        for name, spec in self.measures.items():
            try:
                out[name] = measure_from_spec(spec, n_grid=self.resolution.n_grid,
                                              path=f"measures.{name}")
            except MeasureError as exc:
                raise ConfigError(str(exc)) from exc
        return out


def _int(val, path, lo, hi):
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}: expected an integer, got {val!r}")
    if not lo <= val <= hi:
        raise ConfigError(f"{path}: {val} outside [{lo}, {hi}]")
    return val


def _pos(val, path):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val) \
            or val <= 0:
        raise ConfigError(f"{path}: expected a positive number, got {val!r}")
    return float(val)


def _names(val, path, declared):
    if isinstance(val, str):
        val = [val]
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{path}: expected a non-empty list of measure names")
    for i, name in enumerate(val):
        if name not in declared:
            raise ConfigError(f"{path}[{i}]: undeclared measure {name!r}")
    return tuple(val)


def parse_config(raw: dict, base_dir: Path | None = None, source: Path | None = None):
    """Validate a decoded JSON config."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected an object")
    known = {"schema_version", "measures", "checks", "resolution", "flow", "oracle",
             "functionals", "output_dir", "description"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, "
                          f"got {raw.get('schema_version')!r}")
    measures = raw.get("measures")
    if not isinstance(measures, dict) or not measures:
        raise ConfigError("measures: expected a non-empty object")
    for name, spec in measures.items():
        if not isinstance(spec, dict):
            raise ConfigError(f"measures.{name}: expected an object")
        if "type" not in spec:
            raise ConfigError(f"measures.{name}.type: missing")

    res = raw.get("resolution", {})
    if not isinstance(res, dict):
        raise ConfigError("resolution: expected an object")
    resolution = Resolution(
        n_grid=_int(res.get("n_grid", 4096), "resolution.n_grid", *N_GRID_BOUNDS),
        n_quantile=_int(res.get("n_quantile", 16384), "resolution.n_quantile",
                        *N_QUANTILE_BOUNDS),
    )

    checks = []
    raw_checks = raw.get("checks", [])
    if not isinstance(raw_checks, list):
        raise ConfigError("checks: expected a list")
    for i, c in enumerate(raw_checks):
        path = f"checks[{i}]"
        if not isinstance(c, dict):
            raise ConfigError(f"{path}: expected an object")
        cid = c.get("check_id")
        if cid not in CHECKS:
            raise ConfigError(f"{path}.check_id: unknown check {cid!r}")
        names = _names(c.get("measures"), f"{path}.measures", measures)
        if CHECKS[cid].takes_list and len(names) < 3:
            raise ConfigError(f"{path}.measures: {cid} needs at least three measures")
        params = c.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{path}.params: expected an object")
        accepted = inspect.signature(CHECKS[cid].func).parameters
        for key in params:
            if key not in accepted or key in _RESERVED:
                raise ConfigError(f"{path}.params.{key}: not a parameter of {cid}")
        tol = c.get("tolerance")
        if tol is not None:
            if CHECKS[cid].reported:
                raise ConfigError(f"{path}.tolerance: {cid} is reported-only")
            tol = _pos(tol, f"{path}.tolerance")
        checks.append(CheckConfig(cid, names, dict(params), tol))

    fl = raw.get("flow", {})
    if not isinstance(fl, dict):
        raise ConfigError("flow: expected an object")
    flow = FlowConfig()
    if fl:
        t_grid = fl.get("t_grid")
        if not isinstance(t_grid, list) or not t_grid:
            raise ConfigError("flow.t_grid: expected a non-empty list")
        ts = []
        for i, t in enumerate(t_grid):
            if isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0:
                raise ConfigError(f"flow.t_grid[{i}]: expected a number >= 0")
            ts.append(float(t))
        flow = FlowConfig(_names(fl.get("measures"), "flow.measures", measures), tuple(ts))

    oracles = []
    raw_or = raw.get("oracle", [])
    if isinstance(raw_or, dict):
        raw_or = [raw_or]
    if not isinstance(raw_or, list):
        raise ConfigError("oracle: expected an object or a list")
    for i, o in enumerate(raw_or):
        path = f"oracle[{i}]"
        if not isinstance(o, dict):
            raise ConfigError(f"{path}: expected an object")
        name = o.get("measure")
        if name not in measures:
            raise ConfigError(f"{path}.measure: undeclared measure {name!r}")
        seed = o.get("seed", 0)
        _int(seed, f"{path}.seed", 0, 2 ** 64 - 1)
        oracles.append(OracleConfig(
            measure=name,
            r=_pos(o.get("r", 1.0), f"{path}.r"),
            n_dim=_int(o.get("n_dim", 400), f"{path}.n_dim", *N_DIM_BOUNDS),
            n_trials=_int(o.get("n_trials", 50), f"{path}.n_trials", 1, 10000),
            seed=seed,
            ks_threshold=_pos(o.get("ks_threshold", 0.03), f"{path}.ks_threshold"),
            w2_threshold=_pos(o.get("w2_threshold", 0.05), f"{path}.w2_threshold"),
        ))

    funcs = raw.get("functionals", [])
    funcs = _names(funcs, "functionals", measures) if funcs else ()

    out = raw.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir: expected a path string")
    out_path = Path(out)
    if base_dir is not None and not out_path.is_absolute():
        out_path = Path(base_dir) / out_path

    return ExperimentConfig(measures=dict(measures), checks=tuple(checks), resolution=resolution,
                            flow=flow, oracle=tuple(oracles), functionals=funcs,
                            output_dir=out_path, raw=raw, source=source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(raw, base_dir=path.resolve().parent, source=path.resolve())
