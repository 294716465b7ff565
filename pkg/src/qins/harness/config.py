"""Experiment configuration: strict JSON parsing into frozen dataclasses.

Unknown keys are rejected everywhere.  A silently ignored typo in a
sweep config wastes an afternoon, so misspellings fail loudly with the
offending key names in the message.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

from ..models import ModelConfig

EXPERIMENTS = (
    "taylor_green",
    "k_sweep",
    "energy_audit",
    "galilean",
    "transport_check",
    "free_run",
)

IC_KINDS = (
    "taylor_green",
    "compressive_pulse",
    "taylor_green_pulse",
    "random_smooth",
    "from_snapshot",
)


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class InitialConditionSpec:
    """Which initial state to build, with the knobs each kind accepts."""

    kind: str = "taylor_green"
    amplitude: float = 0.1
    seed: int = 0
    modes: int = 2
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in IC_KINDS:
            raise ConfigError(
                f"unknown initial condition {self.kind!r}, expected one of {IC_KINDS}"
            )
        if self.kind == "from_snapshot" and not self.path:
            raise ConfigError("from_snapshot needs a 'path'")
        if self.modes < 1:
            raise ConfigError(f"modes must be >= 1, got {self.modes}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: which driver to run and every parameter it needs."""

    experiment: str
    n: int = 64
    t_final: float = 1.0
    cfl: float = 0.4
    out_dir: str | None = None
    model: ModelConfig = field(
        default_factory=lambda: ModelConfig(model="temam", re=100.0, k=100.0)
    )
    k_list: tuple[float, ...] = (1e2, 1e3, 1e4, 1e5)
    initial_condition: InitialConditionSpec = field(default_factory=InitialConditionSpec)
    snapshot_every: int = 0
    seed: int = 0
    boost_w: tuple[float, float] = (1.0, 0.0)
    particles: int = 32

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}"
            )
        if self.n < 4:
            raise ConfigError(f"n must be >= 4, got {self.n}")
        if not self.t_final > 0.0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if not self.cfl > 0.0:
            raise ConfigError(f"cfl must be positive, got {self.cfl}")
        if len(self.k_list) > 0:
            ks = self.k_list
            if any(not k > 0.0 for k in ks):
                raise ConfigError("k_list entries must be positive")
            if any(b <= a for a, b in zip(ks, ks[1:])):
                raise ConfigError("k_list must be strictly increasing")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        if self.particles < 2:
            raise ConfigError("particles must be >= 2 per side")


def _reject_unknown(raw: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _model_from_dict(raw: dict) -> ModelConfig:
    allowed = {f.name for f in dataclass_fields(ModelConfig)}
    _reject_unknown(raw, allowed, "model")
    try:
        return ModelConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model config: {exc}") from exc


def _ic_from_value(raw) -> InitialConditionSpec:
    if isinstance(raw, str):
        return InitialConditionSpec(kind=raw)
    if not isinstance(raw, dict):
        raise ConfigError("initial_condition must be a string or an object")
    allowed = {f.name for f in dataclass_fields(InitialConditionSpec)}
    _reject_unknown(raw, allowed, "initial_condition")
    return InitialConditionSpec(**raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed JSON, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be a JSON object")
    allowed = {f.name for f in dataclass_fields(ExperimentConfig)}
    _reject_unknown(raw, allowed, "experiment config")
    kwargs = dict(raw)
    if "model" in kwargs:
        kwargs["model"] = _model_from_dict(kwargs["model"])
    if "initial_condition" in kwargs:
        kwargs["initial_condition"] = _ic_from_value(kwargs["initial_condition"])
    if "k_list" in kwargs:
        kwargs["k_list"] = tuple(float(k) for k in kwargs["k_list"])
    if "boost_w" in kwargs:
        w = kwargs["boost_w"]
        if not (isinstance(w, (list, tuple)) and len(w) == 2):
            raise ConfigError("boost_w must be a pair [wx, wy]")
        kwargs["boost_w"] = (float(w[0]), float(w[1]))
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad experiment config: {exc}") from exc


def config_from_json(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config file."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_echo(cfg: ExperimentConfig) -> dict:
    """JSON-serializable echo of a config, for manifests."""

    def scrub(value):
        if isinstance(value, tuple):
            return [scrub(v) for v in value]
        if hasattr(value, "__dataclass_fields__"):
            return {
                f.name: scrub(getattr(value, f.name))
                for f in dataclass_fields(value)
            }
        return value

    return scrub(cfg)


def scrub_dataclass(value) -> dict:
    """Recursive dataclass -> plain dict, used by reports."""
    return config_echo(value)
