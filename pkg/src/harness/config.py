"""Experiment configuration.

Config files are flat ``key=value`` text (parsed with python-dotenv, without
variable interpolation). Recognized keys::

    suite, n_states, n_actions, gamma0, horizon, seeds, base_seed,
    safe_check_period, solver_tol, output_dir,
    axis.<NAME>, epsilon.<NAME>, direction.<NAME>

Each ``<NAME>`` declares one source variant; ``axis`` and ``epsilon`` are
required for it and ``direction`` (``up``/``down``, gamma axis only)
defaults to ``up``. Keys left out fall back to the suite's defaults.
"""
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, model_validator

from src.mdp.errors import ConfigError
from src.mdp.generators import Axis, PerturbSpec

logger = logging.getLogger(__name__)

SuiteName = Literal["exp-similarity", "exp-safecond", "bounds-verify", "custom"]

SCALAR_KEYS = (
    "suite",
    "n_states",
    "n_actions",
    "gamma0",
    "horizon",
    "seeds",
    "base_seed",
    "safe_check_period",
    "solver_tol",
    "output_dir",
)
SOURCE_PREFIXES = ("axis.", "epsilon.", "direction.")

DEFAULT_EPSILONS = (0.05, 0.15, 0.3)


class Settings(BaseModel):
    """Process-level settings read from the environment (and ``.env``)."""

    log_level: str = "INFO"
    workers: PositiveInt = 1
    output_dir: str = "results"
    solver_tol: float = Field(default=1e-8, gt=0)

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        values = {
            "log_level": os.getenv("TTQL_LOG_LEVEL"),
            "workers": os.getenv("TTQL_WORKERS"),
            "output_dir": os.getenv("TTQL_OUTPUT_DIR"),
            "solver_tol": os.getenv("TTQL_SOLVER_TOL"),
        }
        try:
            return cls(**{k: v for k, v in values.items() if v is not None})
        except ValidationError as e:
            raise ConfigError(f"Invalid TTQL_* environment settings: {e}") from e


class SourceVariant(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(pattern=r"^[A-Za-z0-9_\-]+$")
    spec: PerturbSpec


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    suite: SuiteName = "custom"
    n_states: PositiveInt = 50
    n_actions: PositiveInt = 50
    gamma0: float = Field(default=0.9, gt=0, lt=1)
    sources: List[SourceVariant] = Field(default_factory=list)
    horizon: PositiveInt = 10_000
    seeds: PositiveInt = 20
    base_seed: int = 0
    safe_check_period: PositiveInt = 1
    solver_tol: float = Field(default=1e-8, gt=0)
    output_dir: str = "results"

    @model_validator(mode="after")
    def _check_sources(self) -> "ExperimentConfig":
        names = [s.name for s in self.sources]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate source names in {names}")
        if "baseline" in names:
            raise ValueError("'baseline' is reserved for the plain Q-learning variant")
        for source in self.sources:
            source.spec.check_feasible(self.gamma0)
        return self

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def suite_dir(self) -> Path:
        return Path(self.output_dir) / self.suite


def _sources(entries: List[tuple]) -> List[SourceVariant]:
    return [
        SourceVariant(name=name, spec=PerturbSpec(axis=axis, magnitude=eps, direction=direction))
        for name, axis, eps, direction in entries
    ]


def default_sources(suite: str) -> List[SourceVariant]:
    """Source variants used when a config file declares none.

    exp-similarity: M11-M13 shift gamma down, M21-M23 perturb rewards,
    M31-M33 mix transitions, each at eps in (0.05, 0.15, 0.3).
    exp-safecond: M4 (transition 0.05), M5 (gamma down 0.15), M6 (gamma down 0.3),
    at increasing distance from the new task. M4's Bellman error on the new
    task stays below the learner's over the default horizon, so its gate
    stays open.
    """
    if suite == "exp-similarity":
        entries = []
        for row, (axis, direction) in enumerate(
            [(Axis.GAMMA, "down"), (Axis.REWARD, "up"), (Axis.TRANSITION, "up")], start=1
        ):
            for col, eps in enumerate(DEFAULT_EPSILONS, start=1):
                entries.append((f"M{row}{col}", axis, eps, direction))
        return _sources(entries)
    if suite == "exp-safecond":
        return _sources(
            [
                ("M4", Axis.TRANSITION, 0.05, "up"),
                ("M5", Axis.GAMMA, 0.15, "down"),
                ("M6", Axis.GAMMA, 0.3, "down"),
            ]
        )
    return []


def default_config(suite: str, settings: Optional[Settings] = None, **overrides) -> ExperimentConfig:
    settings = settings or Settings()
    values: Dict[str, object] = {
        "suite": suite,
        "output_dir": settings.output_dir,
        "solver_tol": settings.solver_tol,
        "sources": default_sources(suite),
    }
    values.update(overrides)
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config: {e}") from e


def parse_config_values(raw: Dict[str, Optional[str]], settings: Optional[Settings] = None) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from parsed key-value pairs."""
    scalars: Dict[str, Union[str, None]] = {}
    per_source: Dict[str, Dict[str, str]] = {}
    for key, value in raw.items():
        if value is None:
            raise ConfigError(f"config key '{key}' has no value")
        if key in SCALAR_KEYS:
            scalars[key] = value
            continue
        prefix = next((p for p in SOURCE_PREFIXES if key.startswith(p)), None)
        if prefix is None:
            raise ConfigError(f"unknown config key '{key}'")
        name = key[len(prefix):]
        per_source.setdefault(name, {})[prefix.rstrip(".")] = value

    suite = scalars.pop("suite", "custom")
    overrides: Dict[str, object] = dict(scalars)
    if per_source:
        entries = []
        for name, fields in per_source.items():
            if "axis" not in fields or "epsilon" not in fields:
                raise ConfigError(f"source '{name}' needs both axis.{name} and epsilon.{name}")
            entries.append(
                {
                    "name": name,
                    "spec": {
                        "axis": fields["axis"],
                        "magnitude": fields["epsilon"],
                        "direction": fields.get("direction", "up"),
                    },
                }
            )
        overrides["sources"] = entries
    return default_config(suite, settings, **overrides)


def load_config(
    path: Union[str, Path], settings: Optional[Settings] = None, suite: Optional[str] = None
) -> ExperimentConfig:
    """Load a config file.

    ``suite`` fills in a missing ``suite`` key; a file naming a different
    suite is rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file '{path}' not found")
    try:
        raw = dotenv_values(path, interpolate=False)
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"could not read config file '{path}': {e}") from e
    raw = dict(raw)
    if suite is not None:
        declared = raw.setdefault("suite", suite)
        if declared != suite:
            raise ConfigError(f"config file '{path}' is for suite '{declared}', not '{suite}'")
    config = parse_config_values(raw, settings)
    logger.info(f"Loaded {config.suite} config from {path} (hash {config.config_hash()[:12]})")
    return config


def dump_config(config: ExperimentConfig) -> str:
    """Render ``config`` in the key-value file format."""
    lines = [f"{key}={getattr(config, key)}" for key in SCALAR_KEYS]
    for source in config.sources:
        lines.append(f"axis.{source.name}={source.spec.axis.value}")
        lines.append(f"epsilon.{source.name}={source.spec.magnitude!r}")
        lines.append(f"direction.{source.name}={source.spec.direction}")
    return "\n".join(lines) + "\n"


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Revalidated copy of ``config`` with the non-None ``overrides`` applied."""
    values = config.model_dump()
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config: {e}") from e
