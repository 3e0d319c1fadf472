"""Experiment configuration: schema, TOML parsing, validation.

A config is a single TOML file with nested sections ([model], [grid],
[truth], [solver], [noise], [data]).  Complex numbers are written as
strings in Python syntax, e.g. "0.4+1j".
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional

from .varpro import VarproConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "ModelSpec",
    "GridSpec",
    "NoiseSpec",
    "SolverSpec",
    "ExperimentConfig",
    "load_config",
    "parse_complex",
]

SOLVER_KINDS = ("direct", "esprit", "noneq", "derivatives", "varpro")
MODEL_KINDS = ("classical", "gaussian", "sine")


class ConfigError(ValueError):
    """The experiment configuration is malformed or inconsistent."""


def parse_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, complex):
        return value
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as exc:
            raise ConfigError(f"cannot parse complex number from {value!r}") from exc
    raise ConfigError(f"cannot parse complex number from {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    beta: Optional[complex] = None
    substituted: Optional[bool] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.kind == "gaussian" and (self.beta is None or self.beta == 0):
            raise ConfigError("gaussian model requires a nonzero beta")


@dataclass(frozen=True)
class GridSpec:
    x0: float
    h: float
    count: int
    T: float
    jitter: float = 0.0  # relative node jitter for the noneq solver

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h != 0):
            raise ConfigError("grid step h must be finite and nonzero")
        if not math.isfinite(self.x0):
            raise ConfigError("grid start x0 must be finite")
        if self.count < 2:
            raise ConfigError("grid count must be at least 2")
        if self.T <= 0:
            raise ConfigError("frequency bound T must be positive")
        if not 0 <= self.jitter < 0.5:
            raise ConfigError("jitter must lie in [0, 0.5)")


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("noise sigma must be nonnegative")


@dataclass(frozen=True)
class SolverSpec:
    kind: str
    M: Optional[int] = None
    L: Optional[int] = None
    epsilon: float = 1e-8
    rank_mode: str = "absolute"
    warp_kind: str = "linear"
    varpro: Optional[VarproConfig] = None

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ConfigError(
                f"unknown solver kind {self.kind!r}; expected one of {SOLVER_KINDS}"
            )
        if self.kind in ("direct", "derivatives") and not self.M:
            raise ConfigError(f"solver {self.kind!r} requires the term count M")
        if self.rank_mode not in ("absolute", "relative"):
            raise ConfigError("rank_mode must be 'absolute' or 'relative'")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.warp_kind not in ("linear", "pchip"):
            raise ConfigError("warp_kind must be 'linear' or 'pchip'")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelSpec
    grid: GridSpec
    solver: SolverSpec
    noise: NoiseSpec = NoiseSpec()
    truth: Optional[tuple] = None  # ((c, alpha), ...) in physical parameters
    samples_path: Optional[str] = None
    allow_grid_violation: bool = False

    def __post_init__(self):
        if self.truth is None and self.samples_path is None:
            raise ConfigError("config needs ground-truth terms or a sample file")
        if self.truth is not None:
            object.__setattr__(
                self,
                "truth",
                tuple((parse_complex(c), parse_complex(a)) for c, a in self.truth),
            )


def _section(data: dict, name: str, required: bool = True) -> dict:
    value = data.pop(name, None)
    if value is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(value)


def _take(table: dict, key: str, default=None, required: bool = False):
    if key in table:
        return table.pop(key)
    if required:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _reject_unknown(table: dict, context: str) -> None:
    if table:
        raise ConfigError(f"unknown keys in {context}: {sorted(table)}")


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    name = str(data.pop("name", "experiment"))
    allow = bool(data.pop("allow_grid_violation", False))

    m = _section(data, "model")
    beta = _take(m, "beta")
    model = ModelSpec(
        kind=str(_take(m, "kind", required=True)),
        beta=parse_complex(beta) if beta is not None else None,
        substituted=_take(m, "substituted"),
    )
    _reject_unknown(m, "[model]")

    g = _section(data, "grid")
    grid = GridSpec(
        x0=float(_take(g, "x0", required=True)),
        h=float(_take(g, "h", required=True)),
        count=int(_take(g, "count", required=True)),
        T=float(_take(g, "T", required=True)),
        jitter=float(_take(g, "jitter", 0.0)),
    )
    _reject_unknown(g, "[grid]")

    s = _section(data, "solver")
    varpro_table = _take(s, "varpro")
    varpro_cfg = None
    if varpro_table is not None:
        try:
            varpro_cfg = VarproConfig(**varpro_table)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad [solver.varpro] section: {exc}") from exc
    solver = SolverSpec(
        kind=str(_take(s, "kind", required=True)),
        M=_take(s, "M"),
        L=_take(s, "L"),
        epsilon=float(_take(s, "epsilon", 1e-8)),
        rank_mode=str(_take(s, "rank_mode", "absolute")),
        warp_kind=str(_take(s, "warp_kind", "linear")),
        varpro=varpro_cfg,
    )
    _reject_unknown(s, "[solver]")

    n = _section(data, "noise", required=False)
    noise = NoiseSpec(sigma=float(_take(n, "sigma", 0.0)),
                      seed=int(_take(n, "seed", 0)))
    _reject_unknown(n, "[noise]")

    truth = None
    t = _section(data, "truth", required=False)
    if t:
        terms = _take(t, "terms", required=True)
        if not isinstance(terms, list) or not terms:
            raise ConfigError("[truth].terms must be a nonempty array of tables")
        truth = tuple(
            (parse_complex(item["c"]), parse_complex(item["alpha"])) for item in terms
        )
        _reject_unknown(t, "[truth]")

    samples_path = None
    d = _section(data, "data", required=False)
    if d:
        samples_path = str(_take(d, "samples", required=True))
        _reject_unknown(d, "[data]")

    _reject_unknown(data, "config")
    return ExperimentConfig(
        name=name,
        model=model,
        grid=grid,
        solver=solver,
        noise=noise,
        truth=truth,
        samples_path=samples_path,
        allow_grid_violation=allow,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return config_from_dict(data)
