"""Strict JSON run configuration.

Every section is optional and falls back to the benchmark values. Unknown
keys and wrongly typed values raise ``ConfigError`` naming the field path,
e.g. ``simulation.dt: expected a number, got "fast"``.

Example::

    {
      "plant": {"a": 0.2, "b": 2, "c": 1, "theta1": 1.0472, "theta2": 0.31416,
                "h_m": 0.5, "h_M": 3.5},
      "design": {"N0": 2, "poles": [-3.5, -4.0], "actuation": "both"},
      "scenario": {"delay": {"mean": 2, "amplitude": 1.5, "omega": 1, "phase": 0},
                   "history": {"kind": "benchmark"},
                   "disturbance": {"kind": "pulsed", "pulse_amplitude": 5}},
      "simulation": {"modes": 30, "dt": 0.001, "horizon": 40, "stride": 10},
      "sweep": {"runs": 20, "holdout": 10, "seed": 0},
      "output": {"dir": "out", "field_points": 51}
    }
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, RobinStabError
from .model import Actuation
from .spectral import PlantParams, benchmark_params


def _number(v, path, *, positive=False, nonneg=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}: expected a finite number, got {json.dumps(v)}")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {v}")
    if nonneg and v < 0:
        raise ConfigError(f"{path}: must be >= 0, got {v}")
    return float(v)


def _integer(v, path, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {json.dumps(v)}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _string(v, path, choices=None):
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected a string, got {json.dumps(v)}")
    if choices is not None and v not in choices:
        raise ConfigError(f"{path}: expected one of {'|'.join(choices)}, got {v!r}")
    return v


def _section(d, path, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object, got {json.dumps(d)}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key (allowed: {', '.join(allowed)})")
    return d


@dataclass(frozen=True)
class DesignConfig:
    N0: Optional[int] = None
    poles: Optional[tuple] = None     # complex poles as [re, im] pairs
    actuation: str = "both"
    kappa: Optional[float] = None     # target rate; overrides poles when set


@dataclass(frozen=True)
class DelayConfig:
    mean: float = 2.0
    amplitude: float = 1.5
    omega: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class HistoryConfig:
    kind: str = "benchmark"           # benchmark | polynomial
    scale: float = 1.0
    coeffs: tuple = ()                # polynomial in x, lowest degree first


@dataclass(frozen=True)
class DisturbanceConfig:
    kind: str = "pulsed"              # pulsed | none
    on: float = 8.0
    off: float = 20.0
    pulse_amplitude: float = 5.0
    pulse_center: float = 10.0
    pulse_width: float = 0.5
    offset: float = 1.0
    amplitude: float = 0.5
    freq: float = 3.0


@dataclass(frozen=True)
class ScenarioConfig:
    delay: DelayConfig = DelayConfig()
    history: HistoryConfig = HistoryConfig()
    disturbance: DisturbanceConfig = DisturbanceConfig()


@dataclass(frozen=True)
class SimulationConfig:
    modes: int = 30
    dt: float = 1e-3
    horizon: float = 40.0
    stride: int = 10


@dataclass(frozen=True)
class SweepConfig:
    runs: int = 20
    holdout: int = 10
    seed: int = 0
    amplitude_max: float = 1.5
    omega_min: float = 0.5
    omega_max: float = 2.0


@dataclass(frozen=True)
class OutputConfig:
    dir: Optional[str] = None         # simulate and reproduce-paper fall back to "out"
    field_points: int = 51


@dataclass(frozen=True)
class RunConfig:
    plant: PlantParams = field(default_factory=benchmark_params)
    design: DesignConfig = DesignConfig()
    scenario: ScenarioConfig = ScenarioConfig()
    simulation: SimulationConfig = SimulationConfig()
    sweep: SweepConfig = SweepConfig()
    output: OutputConfig = OutputConfig()

    def replace(self, section: str, **kw) -> "RunConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **kw)})


def _flat(cls, d, path, spec):
    """Parse a flat section whose fields are checked by ``spec[name](value, path)``."""
    _section(d, path, [f.name for f in dataclasses.fields(cls)])
    return cls(**{k: spec[k](v, f"{path}.{k}") for k, v in d.items()})


def _poles(v, path):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a non-empty list of poles")
    out = []
    for i, z in enumerate(v):
        p = f"{path}[{i}]"
        if isinstance(z, list):
            if len(z) != 2:
                raise ConfigError(f"{p}: complex pole must be [re, im]")
            out.append(complex(_number(z[0], p + "[0]"), _number(z[1], p + "[1]")))
        else:
            out.append(complex(_number(z, p)))
    return tuple(out)


def _parse_plant(d, path):
    base = benchmark_params().to_dict()
    _section(d, path, list(base))
    vals = {**base, **{k: _number(v, f"{path}.{k}") for k, v in d.items()}}
    try:
        return PlantParams(**vals)
    except RobinStabError as exc:
        raise ConfigError(f"{path}.{exc}") from None


def _parse_design(d, path):
    return _flat(DesignConfig, d, path, {
        "N0": lambda v, p: None if v is None else _integer(v, p, 1),
        "poles": lambda v, p: None if v is None else _poles(v, p),
        "actuation": lambda v, p: _string(v, p, [a.value for a in Actuation]),
        "kappa": lambda v, p: None if v is None else _number(v, p, positive=True),
    })


def _parse_scenario(d, path):
    _section(d, path, ["delay", "history", "disturbance"])
    num = lambda v, p: _number(v, p)  # noqa: E731
    delay = _flat(DelayConfig, d.get("delay", {}), f"{path}.delay",
                  {k: num for k in ("mean", "amplitude", "omega", "phase")})
    history = _flat(HistoryConfig, d.get("history", {}), f"{path}.history", {
        "kind": lambda v, p: _string(v, p, ["benchmark", "polynomial"]),
        "scale": num,
        "coeffs": lambda v, p: tuple(_number(c, f"{p}[{i}]") for i, c in enumerate(
            v if isinstance(v, list) else _fail(p, "expected a list of numbers"))),
    })
    if history.kind == "polynomial" and not history.coeffs:
        raise ConfigError(f"{path}.history.coeffs: required for a polynomial history")
    dist_spec = {k: num for k in ("on", "off", "pulse_amplitude", "pulse_center",
                                  "offset", "amplitude", "freq")}
    dist_spec["pulse_width"] = lambda v, p: _number(v, p, positive=True)
    dist_spec["kind"] = lambda v, p: _string(v, p, ["pulsed", "none"])
    disturbance = _flat(DisturbanceConfig, d.get("disturbance", {}), f"{path}.disturbance",
                        dist_spec)
    return ScenarioConfig(delay, history, disturbance)


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _parse_simulation(d, path):
    return _flat(SimulationConfig, d, path, {
        "modes": lambda v, p: _integer(v, p, 1),
        "dt": lambda v, p: _number(v, p, positive=True),
        "horizon": lambda v, p: _number(v, p, positive=True),
        "stride": lambda v, p: _integer(v, p, 1),
    })


def _parse_sweep(d, path):
    sweep = _flat(SweepConfig, d, path, {
        "runs": lambda v, p: _integer(v, p, 1),
        "holdout": lambda v, p: _integer(v, p, 0),
        "seed": lambda v, p: _integer(v, p, 0),
        "amplitude_max": lambda v, p: _number(v, p, nonneg=True),
        "omega_min": lambda v, p: _number(v, p, positive=True),
        "omega_max": lambda v, p: _number(v, p, positive=True),
    })
    if sweep.omega_max < sweep.omega_min:
        raise ConfigError(f"{path}.omega_max: must be >= omega_min")
    return sweep


def _parse_output(d, path):
    return _flat(OutputConfig, d, path, {
        "dir": lambda v, p: None if v is None else _string(v, p),
        "field_points": lambda v, p: _integer(v, p, 2),
    })


_SECTIONS = {
    "plant": _parse_plant,
    "design": _parse_design,
    "scenario": _parse_scenario,
    "simulation": _parse_simulation,
    "sweep": _parse_sweep,
    "output": _parse_output,
}


def parse_config(data) -> RunConfig:
    _section(data, "config", list(_SECTIONS))
    return RunConfig(**{k: _SECTIONS[k](v, k) for k, v in data.items()})


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# ------------------------------------------------------------------ builders

def build_delay(cfg: DelayConfig):
    from .sim import SinusoidalDelay
    return SinusoidalDelay(cfg.mean, cfg.amplitude, cfg.omega, cfg.phase)


def build_history(cfg: HistoryConfig):
    from .sim import Separable, benchmark_history
    if cfg.kind == "benchmark":
        return benchmark_history().scaled(cfg.scale)
    coeffs = np.asarray(cfg.coeffs, dtype=float)
    # Constant in time on [-h_M, 0].
    return Separable(lambda t: cfg.scale * np.ones_like(np.asarray(t, dtype=float)),
                     lambda x: np.polynomial.polynomial.polyval(np.asarray(x, dtype=float),
                                                                coeffs),
                     lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def build_disturbance(cfg: DisturbanceConfig):
    from .sim import PulsedDisturbance, benchmark_disturbance
    if cfg.kind == "none":
        return None
    fields = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(PulsedDisturbance)}
    return benchmark_disturbance(PulsedDisturbance(**fields))
