"""Experiment configuration: JSON documents mapped onto frozen dataclasses.

Every section is optional; missing keys take the defaults below, unknown keys are
rejected with the offending dotted path in the message.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

TASKS = ("heom", "redfield_plus", "redfield", "niba", "extract_kernel", "rates")
SWEEP_PARAMS = ("s", "alpha")


class ConfigError(ValueError):
    pass


def _require(cond, key, constraint):
    if not cond:
        raise ConfigError(f"{key}: {constraint}")


def _finite(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


@dataclass(frozen=True)
class SystemSection:
    epsilon: float = 0.0
    delta: float = 1.0

    def validate(self):
        _require(_finite(self.epsilon), "system.epsilon", "must be a finite number")
        _require(_finite(self.delta) and self.delta >= 0, "system.delta", "must be finite and >= 0")


@dataclass(frozen=True)
class BathSection:
    alpha: float = 0.1
    s: float = 0.5
    omega_c: float = 20.0
    temperature: float = 0.0

    def validate(self):
        _require(_finite(self.alpha) and self.alpha >= 0, "bath.alpha", "must be finite and >= 0")
        _require(_finite(self.s) and 0 < self.s <= 1, "bath.s", "must lie in (0, 1]")
        _require(_finite(self.omega_c) and self.omega_c > 0, "bath.omega_c", "must be finite and > 0")
        _require(_finite(self.temperature) and self.temperature >= 0, "bath.temperature",
                 "must be finite and >= 0")


@dataclass(frozen=True)
class FitSection:
    tol: float = 1e-3
    max_degree: int = 60
    t_max: float = 20.0  # certification window [0, t_max]

    def validate(self):
        _require(_finite(self.tol) and 0 < self.tol < 1, "fit.tol", "must lie in (0, 1)")
        _require(isinstance(self.max_degree, int) and self.max_degree >= 2, "fit.max_degree",
                 "must be an integer >= 2")
        _require(_finite(self.t_max) and self.t_max > 0, "fit.t_max", "must be finite and > 0")


@dataclass(frozen=True)
class RunSection:
    L: tuple = (1,)
    dt: float | None = None  # None -> default_time_step
    t_final: float = 10.0
    sample_dt: float = 0.01  # spacing of recorded samples, rounded to a multiple of dt
    record_stride: int | None = None  # overrides sample_dt when given
    stability_bound: float = 1.5  # |P| above this marks a run unstable
    max_ados: int = 5_000_000

    def validate(self):
        _require(len(self.L) > 0 and all(isinstance(x, int) and not isinstance(x, bool) and x >= 0
                                         for x in self.L), "run.L", "must be a non-empty list of integers >= 0")
        _require(self.dt is None or (_finite(self.dt) and self.dt > 0), "run.dt", "must be null or > 0")
        _require(_finite(self.t_final) and self.t_final > 0, "run.t_final", "must be finite and > 0")
        _require(_finite(self.sample_dt) and self.sample_dt > 0, "run.sample_dt", "must be finite and > 0")
        _require(self.record_stride is None or (isinstance(self.record_stride, int) and self.record_stride >= 1),
                 "run.record_stride", "must be null or an integer >= 1")
        _require(_finite(self.stability_bound) and self.stability_bound >= 1, "run.stability_bound",
                 "must be finite and >= 1")
        _require(isinstance(self.max_ados, int) and self.max_ados >= 1, "run.max_ados", "must be an integer >= 1")


@dataclass(frozen=True)
class ExtractSection:
    method: str = "second_kind"  # see gme.extract_kernel

    def validate(self):
        _require(self.method in ("derivative", "second_kind"), "extract.method",
                 "must be 'derivative' or 'second_kind'")


@dataclass(frozen=True)
class SweepSection:
    param: str = "s"
    values: tuple = ()

    def validate(self):
        _require(self.param in SWEEP_PARAMS, "sweep.param", f"must be one of {list(SWEEP_PARAMS)}")
        _require(all(_finite(v) for v in self.values), "sweep.values", "must be a list of finite numbers")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSection = field(default_factory=SystemSection)
    bath: BathSection = field(default_factory=BathSection)
    fit: FitSection = field(default_factory=FitSection)
    run: RunSection = field(default_factory=RunSection)
    tasks: tuple = ()
    extract: ExtractSection = field(default_factory=ExtractSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: str = "out"

    def validate(self):
        for sec in (self.system, self.bath, self.fit, self.run, self.extract, self.sweep):
            sec.validate()
        for t in self.tasks:
            _require(t in TASKS, "tasks", f"unknown task {t!r}; allowed {list(TASKS)}")
        _require(len(set(self.tasks)) == len(self.tasks), "tasks", "must not repeat")
        _require(isinstance(self.output, str) and self.output, "output", "must be a non-empty path")
        if "niba" in self.tasks:
            _require(self.system.epsilon == 0, "tasks", "niba requires system.epsilon = 0")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tasks"] = list(self.tasks)
        d["run"]["L"] = list(self.run.L)
        d["sweep"]["values"] = list(self.sweep.values)
        return d

    def with_param(self, name: str, value: float) -> "ExperimentConfig":
        bath = {**asdict(self.bath), name: float(value)}
        return _replace(self, bath=BathSection(**bath)).validate()


def _replace(cfg, **changes):
    values = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    values.update(changes)
    return type(cfg)(**values)


_SECTIONS = {"system": SystemSection, "bath": BathSection, "fit": FitSection,
             "run": RunSection, "extract": ExtractSection, "sweep": SweepSection}
_LISTS = {("run", "L"), ("sweep", "values")}


def _build_section(name, cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: must be an object")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key")
    kwargs = {}
    for key, value in raw.items():
        if (name, key) in _LISTS:
            if not isinstance(value, list):
                raise ConfigError(f"{name}.{key}: must be a list")
            value = tuple(value)
        elif isinstance(value, int) and not isinstance(value, bool) and cls.__dataclass_fields__[key].type in ("float", "float | None"):
            value = float(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("document: top level must be an object")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown key")
    kwargs = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value)
        elif key == "tasks":
            if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
                raise ConfigError("tasks: must be a list of task names")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs).validate()


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON document; an empty document yields the defaults."""
    if not text.strip():
        return ExperimentConfig().validate()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"document: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(doc)
