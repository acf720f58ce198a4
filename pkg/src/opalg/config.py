"""Configuration management for opalg."""

import os
from dataclasses import dataclass
from pathlib import Path

from .exactla import Field
from .exceptions import ConfigurationError, ValidationError

DEFAULT_CACHE_DIR = Path.home() / ".opalg" / "cache"


@dataclass
class EngineConfig:
    """Engine-wide settings shared by the library entry points and the CLI."""

    # Arithmetic
    field: str = "q"

    # Truncation
    weight_cap: int = 4
    degree_floor: int = -4
    stage_cap: int = 8

    # Execution
    parallel: bool = False
    max_workers: int = 4
    leibniz_samples: int = 24

    # Cache
    use_cache: bool = True
    cache_dir: str = str(DEFAULT_CACHE_DIR)

    def __post_init__(self):
        """Validate configuration after initialization."""
        if not getattr(self, "_skip_validation", False):
            self.validate()

    def validate(self) -> None:
        """Validate all configuration parameters."""
        self._validate_field()
        self._validate_caps()
        self._validate_execution()

    def _validate_field(self) -> None:
        try:
            Field.from_spec(self.field)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid field: {self.field}", field="field") from e
        self.field = Field.from_spec(self.field).spec

    def _validate_caps(self) -> None:
        if self.weight_cap < 1:
            raise ConfigurationError("Weight cap must be at least 1", field="weight_cap")
        if self.stage_cap < 1:
            raise ConfigurationError("Stage cap must be at least 1", field="stage_cap")

    def _validate_execution(self) -> None:
        if self.max_workers < 1:
            raise ConfigurationError("Worker count must be at least 1", field="max_workers")
        if self.leibniz_samples < 0:
            raise ConfigurationError("Leibniz sample count cannot be negative", field="leibniz_samples")
        if self.use_cache and not self.cache_dir:
            raise ConfigurationError("Cache directory is empty", field="cache_dir")

    @property
    def coefficient_field(self) -> Field:
        return Field.from_spec(self.field)

    @property
    def workers(self) -> int:
        """Worker count actually used: 1 unless parallel execution is enabled."""
        return self.max_workers if self.parallel else 1


def _env_int(name: str) -> int | None:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def _env_flag(name: str) -> bool | None:
    raw = os.getenv(name)
    if raw is None:
        return None
    return raw.strip().lower() in ("1", "true", "yes", "on")


def load_config_from_env() -> EngineConfig:
    """Load configuration from OPALG_* environment variables."""
    config = EngineConfig()
    config._skip_validation = True

    config.field = os.getenv("OPALG_FIELD", config.field)
    config.cache_dir = os.getenv("OPALG_CACHE_DIR", config.cache_dir)

    no_cache = _env_flag("OPALG_NO_CACHE")
    if no_cache is not None:
        config.use_cache = not no_cache
    parallel = _env_flag("OPALG_PARALLEL")
    if parallel is not None:
        config.parallel = parallel

    for attr, name in (
        ("max_workers", "OPALG_MAX_WORKERS"),
        ("stage_cap", "OPALG_STAGE_CAP"),
        ("degree_floor", "OPALG_DEGREE_FLOOR"),
        ("weight_cap", "OPALG_WEIGHT_CAP"),
    ):
        value = _env_int(name)
        if value is not None:
            setattr(config, attr, value)

    return config


def load_config(args) -> EngineConfig:
    """Load configuration from environment variables and CLI arguments."""
    env_config = load_config_from_env()

    cli_overrides = {}
    if getattr(args, "field", None):
        cli_overrides["field"] = args.field
    if getattr(args, "cache", None):
        cli_overrides["cache_dir"] = args.cache
    if getattr(args, "no_cache", False):
        cli_overrides["use_cache"] = False
    if getattr(args, "parallel", False):
        cli_overrides["parallel"] = True
    if getattr(args, "workers", None) is not None:
        cli_overrides["max_workers"] = args.workers
    if getattr(args, "stage_cap", None) is not None:
        cli_overrides["stage_cap"] = args.stage_cap

    return merge_config(env_config, **cli_overrides)


def merge_config(base_config: EngineConfig, **overrides) -> EngineConfig:
    """Merge configuration with overrides."""
    config_dict = {
        "field": overrides.get("field") or base_config.field,
        "weight_cap": overrides.get("weight_cap", base_config.weight_cap),
        "degree_floor": overrides.get("degree_floor", base_config.degree_floor),
        "stage_cap": overrides.get("stage_cap", base_config.stage_cap),
        "parallel": overrides.get("parallel", base_config.parallel),
        "max_workers": overrides.get("max_workers", base_config.max_workers),
        "leibniz_samples": overrides.get("leibniz_samples", base_config.leibniz_samples),
        "use_cache": overrides.get("use_cache", base_config.use_cache),
        "cache_dir": overrides.get("cache_dir") or base_config.cache_dir,
    }
    return EngineConfig(**config_dict)
