"""Run configuration: strict loading, validation, overrides and sweep expansion."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .kernels import (
    BathSpec,
    DecoherenceKernel,
    KickedFastKernel,
    KickedParams,
    KickedSmallAngleKernel,
    SpinBosonKernel,
    SpinEnvironment,
    SpinSpinKernel,
    UnitKernel,
)
from .kicksim import KICK_MODES, SCHEDULES, MCConfig
from .qstate import SystemParams

MODELS = ("unitary", "spin-boson", "spin-spin", "kicked-fast", "kicked-small-angle", "kicked-mc")
SWEEPABLE = ("theta0", "omega", "tau", "gamma0", "cutoff", "exponent", "kT", "J", "Gamma", "alpha", "p_z")

_REQUIRED = {
    "unitary": (),
    "spin-boson": ("gamma0", "cutoff", "kT"),
    "spin-spin": (),
    "kicked-fast": ("J", "Gamma"),
    "kicked-small-angle": ("J", "Gamma", "alpha"),
    "kicked-mc": ("J", "Gamma"),
}


@dataclass(frozen=True)
class Numerics:
    n_steps: int = 4096
    richardson_tol: float = 1e-8


@dataclass(frozen=True)
class MCSettings:
    realizations: int = 10_000
    seed: int = 20061011
    schedule: str = "fixed"
    grid_points: int = 257
    kick_mode: str = "full"


@dataclass(frozen=True)
class Sweep:
    param: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    model: str
    theta0: float
    omega: float = 1.0
    tau: float | None = None
    gamma0: float | None = None
    cutoff: float | None = None
    exponent: float = 1.0
    kT: float | None = None
    J: float | None = None
    Gamma: float | None = None
    alpha: float | None = None
    p_z: float = 0.0
    couplings: tuple[float, ...] | None = None
    amplitudes: tuple[tuple[float, float], ...] | None = None
    numerics: Numerics = field(default_factory=Numerics)
    mc: MCSettings = field(default_factory=MCSettings)
    sweep: Sweep | None = None

    # -- derived objects ---------------------------------------------------

    def system(self) -> SystemParams:
        return SystemParams(self.theta0, self.omega, self.tau)

    def bath(self) -> BathSpec:
        return BathSpec(self.gamma0, self.cutoff, self.exponent, self.kT)

    def kicked(self) -> KickedParams:
        return KickedParams(self.J, self.Gamma, self.p_z, self.alpha or 0.0)

    def spin_environment(self) -> SpinEnvironment:
        if self.couplings is not None:
            return SpinEnvironment(self.couplings, self.amplitudes)
        return SpinEnvironment.single(self.J, self.p_z)

    def env_state(self) -> tuple[float, float]:
        return math.sqrt((1.0 + self.p_z) / 2.0), math.sqrt((1.0 - self.p_z) / 2.0)

    def mc_config(self) -> MCConfig:
        return MCConfig(self.mc.realizations, self.mc.seed, self.mc.schedule, self.mc.grid_points)

    def kernel(self) -> DecoherenceKernel:
        """Analytic kernel for every model except ``kicked-mc``."""
        if self.model == "unitary":
            return UnitKernel()
        if self.model == "spin-boson":
            return SpinBosonKernel(self.bath(), t_max=self.system().tau)
        if self.model == "spin-spin":
            return SpinSpinKernel(self.spin_environment())
        if self.model == "kicked-fast":
            return KickedFastKernel(self.kicked())
        if self.model == "kicked-small-angle":
            return KickedSmallAngleKernel(self.kicked())
        raise ConfigError(f"model {self.model!r} has no analytic kernel")

    def expand(self) -> list["RunConfig"]:
        if self.sweep is None:
            return [self]
        return [
            dataclasses.replace(self, sweep=None, **{self.sweep.param: float(v)})
            for v in self.sweep.values
        ]

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        if self.sweep is None:
            d.pop("sweep")
        else:
            d["sweep"]["values"] = list(self.sweep.values)
        for key in ("couplings", "amplitudes"):
            if d[key] is None:
                d.pop(key)
            else:
                d[key] = [list(x) if isinstance(x, tuple) else x for x in d[key]]
        return {k: v for k, v in d.items() if v is not None}


def serialize(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)


# -- loading -----------------------------------------------------------------


def _parse_text(text: str, suffix: str) -> dict:
    if suffix == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        if suffix == ".json":
            raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError:
            raise ConfigError(
                f"could not parse as JSON (line {exc.lineno}, column {exc.colno}: {exc.msg}) or TOML"
            ) from None


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    """Apply ``key=value`` overrides; dotted keys address nested blocks."""
    data = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table value")
        node[parts[-1]] = _parse_value(raw.strip())
    return data


def _strict(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a table/object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _num(name: str, value: Any, kind=float):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _sweep(data: dict) -> Sweep:
    allowed = {"param", "values", "logspace", "linspace"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in sweep: {', '.join(unknown)}")
    param = data.get("param")
    if param not in SWEEPABLE:
        raise ConfigError(f"sweep.param must name one of {', '.join(SWEEPABLE)}, got {param!r}")
    given = [k for k in ("values", "logspace", "linspace") if k in data]
    if len(given) != 1:
        raise ConfigError("sweep needs exactly one of values, logspace, linspace")
    spec = data[given[0]]
    if given[0] == "values":
        values = [_num(f"sweep.values[{i}]", v) for i, v in enumerate(spec)]
    else:
        if not (isinstance(spec, list) and len(spec) == 3):
            raise ConfigError(f"sweep.{given[0]} must be [start, stop, count]")
        lo, hi = _num("sweep start", spec[0]), _num("sweep stop", spec[1])
        n = _num("sweep count", spec[2], int)
        if n < 1:
            raise ConfigError("sweep count must be >= 1")
        if given[0] == "logspace":
            if lo <= 0 or hi <= 0:
                raise ConfigError("sweep.logspace bounds must be positive")
            values = np.geomspace(lo, hi, n).tolist()
        else:
            values = np.linspace(lo, hi, n).tolist()
    if not values:
        raise ConfigError("sweep has no values")
    return Sweep(param=param, values=tuple(values))


def from_dict(data: dict) -> RunConfig:
    _strict(RunConfig, data, "config")
    if "model" not in data:
        raise ConfigError("model is required")
    if data["model"] not in MODELS:
        raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {data['model']!r}")
    if "theta0" not in data:
        raise ConfigError("theta0 is required")

    kw: dict[str, Any] = {"model": data["model"]}
    for name in SWEEPABLE:
        if name in data:
            kw[name] = _num(name, data[name])
    if "couplings" in data:
        kw["couplings"] = tuple(_num("couplings", j) for j in data["couplings"])
        if "amplitudes" not in data:
            raise ConfigError("couplings requires amplitudes")
        kw["amplitudes"] = tuple((_num("amplitudes", a), _num("amplitudes", b)) for a, b in data["amplitudes"])
    elif "amplitudes" in data:
        raise ConfigError("amplitudes requires couplings")

    num = data.get("numerics", {})
    _strict(Numerics, num, "numerics")
    kw["numerics"] = Numerics(
        n_steps=_num("numerics.n_steps", num.get("n_steps", 4096), int),
        richardson_tol=_num("numerics.richardson_tol", num.get("richardson_tol", 1e-8)),
    )
    mc = data.get("mc", {})
    _strict(MCSettings, mc, "mc")
    defaults = MCSettings()
    kw["mc"] = MCSettings(
        realizations=_num("mc.realizations", mc.get("realizations", defaults.realizations), int),
        seed=_num("mc.seed", mc.get("seed", defaults.seed), int),
        schedule=mc.get("schedule", defaults.schedule),
        grid_points=_num("mc.grid_points", mc.get("grid_points", defaults.grid_points), int),
        kick_mode=mc.get("kick_mode", defaults.kick_mode),
    )
    if "sweep" in data:
        kw["sweep"] = _sweep(data["sweep"])
    config = RunConfig(**kw)
    validate(config)
    return config


def validate(config: RunConfig) -> None:
    """Re-check every numeric constraint of the underlying types."""
    for point in config.expand():
        _validate_point(point)
    if config.sweep is not None and config.sweep.param in ("J", "Gamma", "alpha") and config.couplings:
        raise ConfigError("sweeping a single-spin parameter is incompatible with explicit couplings")


def _validate_point(c: RunConfig) -> None:
    if not (0.0 <= c.theta0 <= math.pi):
        raise ConfigError("theta0 must lie in [0, π]")
    missing = [k for k in _REQUIRED[c.model] if getattr(c, k) is None]
    if c.model == "spin-spin" and c.couplings is None and c.J is None:
        missing.append("J (or couplings)")
    if missing:
        raise ConfigError(f"model {c.model} requires {', '.join(missing)}")
    if c.numerics.n_steps < 64 or c.numerics.n_steps & (c.numerics.n_steps - 1):
        raise ConfigError("numerics.n_steps must be a power of two >= 64")
    if not c.numerics.richardson_tol > 0:
        raise ConfigError("numerics.richardson_tol must be > 0")
    if c.mc.schedule not in SCHEDULES:
        raise ConfigError(f"mc.schedule must be one of {', '.join(SCHEDULES)}")
    if c.mc.kick_mode not in KICK_MODES:
        raise ConfigError(f"mc.kick_mode must be one of {', '.join(KICK_MODES)}")
    if c.model == "kicked-mc" and c.mc.kick_mode == "small-angle" and c.alpha is None:
        raise ConfigError("mc.kick_mode small-angle requires alpha")
    if c.model == "kicked-mc" and not (0.0 < c.theta0 < math.pi):
        raise ConfigError("kicked-mc requires 0 < theta0 < π (the coherence must not vanish)")
    try:
        c.system()
        if c.model == "spin-boson":
            c.bath()
        elif c.model == "spin-spin":
            c.spin_environment()
        elif c.model.startswith("kicked"):
            c.kicked()
        if c.model == "kicked-mc":
            c.mc_config()
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None = None, overrides: Iterable[str] = (), data: dict | None = None) -> RunConfig:
    """Load from a file and/or an inline dict, then apply ``key=value`` overrides."""
    base: dict = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        base = _parse_text(text, path.suffix.lower())
    if data is not None:
        base = {**base, **data}
    return from_dict(apply_overrides(base, overrides))
