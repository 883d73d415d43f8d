"""Configuration documents and runtime settings for slice-alloc."""

import functools
import json
import math
import os
import pathlib
import typing

import pydantic
import pydantic_settings
import yaml

from slice_alloc.core import channel
from slice_alloc.core import errors


class ScenarioConfig(pydantic.BaseModel):
    """Scalar parameters of one two-tier deployment.

    Lengths are meters, frequencies and bandwidths Hz, powers dBm and the
    noise density dBm/Hz. Linear-unit views are exposed as properties so the
    rest of the package never mixes units.
    """

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    macro_radius: float = pydantic.Field(500.0, gt=0)
    small_cell_radius: float = pydantic.Field(10.0, gt=0)
    min_small_cell_separation: float = pydantic.Field(20.0, gt=0)
    num_small_cells: int = pydantic.Field(10, ge=0)
    users_per_small_cell: int = pydantic.Field(2, ge=1)
    num_macro_users: int = pydantic.Field(50, ge=0)
    carrier_frequency: float = pydantic.Field(2e9, gt=0)
    total_bandwidth: float = pydantic.Field(10e6, gt=0)
    num_subchannels: int = pydantic.Field(50, ge=1)
    max_tx_power: float = 23.0
    interference_threshold_per_subchannel: float = -101.2
    noise_psd: float = -174.0
    urllc_min_rate: float = pydantic.Field(5e6, ge=0)
    urllc_fraction: float = pydantic.Field(0.5, ge=0.0, le=1.0)
    seed: int = pydantic.Field(1, ge=0)

    @pydantic.model_validator(mode="after")
    def _check_geometry(self) -> "ScenarioConfig":
        if self.min_small_cell_separation >= 2 * self.macro_radius:
            raise ValueError(
                "min_small_cell_separation must be smaller than the macro diameter"
            )
        for name in ("max_tx_power", "interference_threshold_per_subchannel"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self

    @property
    def subchannel_bandwidth(self) -> float:
        """Bandwidth of one subchannel in Hz."""
        return self.total_bandwidth / self.num_subchannels

    @property
    def p_max(self) -> float:
        """Per-user transmit power budget in watts."""
        return channel.dbm_to_watt(self.max_tx_power)

    @property
    def interference_cap(self) -> float:
        """Per-subchannel macro interference threshold in watts."""
        return channel.dbm_to_watt(self.interference_threshold_per_subchannel)

    @property
    def noise_per_subchannel(self) -> float:
        """Thermal noise power over one subchannel in watts."""
        return channel.dbm_to_watt(self.noise_psd) * self.subchannel_bandwidth


class SolverParams(pydantic.BaseModel):
    """Dual decomposition solver parameters."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    max_iters: int = pydantic.Field(500, ge=1)
    step_scale: float = pydantic.Field(1.0, gt=0)
    tolerance: float = pydantic.Field(1e-4, ge=0)
    gap_tolerance: float = pydantic.Field(1e-2, ge=0)
    compress_subgradient: bool = True
    urllc_objective_weight: float = pydantic.Field(0.0, ge=0)


class FixedPointParams(pydantic.BaseModel):
    """Co-tier interference best-response loop parameters."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    rounds: int = pydantic.Field(5, ge=1)
    damping: float = pydantic.Field(0.5, gt=0, le=1)
    num_ttis: int = pydantic.Field(10, ge=1)


class SweepConfig(pydantic.BaseModel):
    """Small-cell density sweep definition."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    num_small_cells: list[int] = pydantic.Field(
        default_factory=lambda: [10, 20, 30, 40, 50], min_length=1
    )
    users_per_small_cell: list[int] = pydantic.Field(
        default_factory=lambda: [2, 4], min_length=1
    )
    seeds: list[int] = pydantic.Field(
        default_factory=lambda: list(range(1, 21)), min_length=1
    )
    include_baseline: bool = False

    @pydantic.field_validator("num_small_cells", "seeds")
    @classmethod
    def validate_non_negative(cls, v: list[int]) -> list[int]:
        """Reject negative counts and seeds."""
        if any(item < 0 for item in v):
            raise ValueError(f"values must be non-negative: {v}")
        return v

    @pydantic.field_validator("users_per_small_cell")
    @classmethod
    def validate_user_counts(cls, v: list[int]) -> list[int]:
        """Require at least one user per small cell."""
        if any(item < 1 for item in v):
            raise ValueError(f"users per small cell must be >= 1: {v}")
        return v

    @property
    def sweep_points(self) -> list[int]:
        """Sweep points in ascending order, baseline included if requested."""
        points = set(self.num_small_cells)
        if self.include_baseline:
            points.add(0)
        return sorted(points)


class RunDocument(pydantic.BaseModel):
    """The single configuration document consumed by every CLI command."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    version: str = "1.0"
    scenario: ScenarioConfig = pydantic.Field(default_factory=ScenarioConfig)
    solver: SolverParams = pydantic.Field(default_factory=SolverParams)
    fixed_point: FixedPointParams = pydantic.Field(default_factory=FixedPointParams)
    sweep: SweepConfig = pydantic.Field(default_factory=SweepConfig)

    def with_seed(self, seed: int | None) -> "RunDocument":
        """Return a copy with the seed override applied."""
        if seed is None:
            return self
        scenario = self.scenario.model_copy(update={"seed": seed})
        sweep = self.sweep.model_copy(update={"seeds": [seed]})
        return self.model_copy(update={"scenario": scenario, "sweep": sweep})


class RuntimeSettings(pydantic_settings.BaseSettings):
    """Environment-level settings (``SLICE_ALLOC_*`` variables)."""

    model_config = pydantic_settings.SettingsConfigDict(env_prefix="SLICE_ALLOC_")

    threads: int = pydantic.Field(0, ge=0)
    log_level: str = "WARNING"


def load_run_document(path: pathlib.Path | None) -> RunDocument:
    """Load a JSON or YAML run document; ``None`` yields the defaults."""
    if path is None:
        return RunDocument()

    try:
        with path.open(encoding="utf-8") as f:
            content = f.read()
    except OSError as e:
        raise errors.ConfigError(f"Cannot read configuration {path}: {e}") from e

    try:
        if path.suffix in {".yaml", ".yml"}:
            data: typing.Any = yaml.safe_load(content) or {}
        else:
            data = json.loads(content) if content.strip() else {}
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise errors.ConfigError(f"Invalid document in {path}: {e}") from e

    try:
        return RunDocument.model_validate(data)
    except pydantic.ValidationError as e:
        raise errors.ConfigError(f"Invalid configuration in {path}: {e}") from e


@functools.cache
def get_runtime_settings() -> RuntimeSettings:
    """Get the process-wide runtime settings."""
    return RuntimeSettings()


def resolve_thread_count(settings: RuntimeSettings) -> int:
    """Translate the ``threads`` setting into a worker count."""
    if settings.threads > 0:
        return settings.threads
    return os.cpu_count() or 1
