"""
Tool configuration: defaults, key=value config files and IRQRACER_* environment overrides
"""

import logging
import os
from typing import Any, Dict, List, Literal, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

ENV_PREFIX = "IRQRACER_"


class ToolConfig(BaseModel):
    """Configuration shared by every pipeline stage."""

    symbolic_timeout: float = Field(
        default=600.0, gt=0,
        description="Wall-clock budget in seconds for exploring one warning"
    )
    lmax: int = Field(
        default=1000, gt=0,
        description="Ceiling for the loop unroll factor during symbolic exploration"
    )
    initial_unroll: int = Field(
        default=2, gt=0,
        description="Unroll factor used by the static graphs and the first exploration round"
    )
    step_limit: int = Field(
        default=1_000_000, gt=0,
        description="Maximum statements the interpreter executes in one run"
    )
    seed: int = Field(
        default=0, ge=0,
        description="RNG seed for state selection tie-breaks and concrete seeding"
    )
    word_width: int = Field(
        default=16, gt=1, le=64,
        description="Bit width of IDL integers"
    )
    interrupt_registers: List[str] = Field(
        default_factory=lambda: ["IER"],
        description="Registers whose writes are treated as implicit interrupt enabling"
    )
    max_widening_attempts: int = Field(
        default=32, gt=0,
        description="Critical-section widening steps allowed per section during repair"
    )
    oracle_budget: int = Field(
        default=65_536, gt=0,
        description="Maximum number of input assignments the exhaustive oracle enumerates"
    )
    max_states: int = Field(
        default=200_000, gt=0,
        description="Symbolic states allowed per warning before giving up with SolverLimit"
    )
    solver_skip: bool = Field(
        default=True,
        description="Defer feasibility checks until a racing point is reached"
    )
    workers: int = Field(
        default=1, gt=0,
        description="Process pool size for per-warning exploration and validation"
    )
    assert_replay: bool = Field(
        default=False,
        description="Replay every Reachable assignment and fail loudly if it does not cover both events"
    )
    repair_strategy: Literal["auto", "ide", "lock"] = Field(
        default="auto",
        description="auto tries IDE then AL then ECS; ide or lock restrict the chain"
    )
    report_timings: bool = Field(
        default=False,
        description="Include per-stage timings in reports (breaks byte-identical output)"
    )

    @field_validator("interrupt_registers", mode="before")
    @classmethod
    def _split_registers(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @property
    def word_mask(self) -> int:
        return (1 << self.word_width) - 1


def _strip_quotes(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _read_config_file(path: str) -> Dict[str, Any]:
    """Read a TOML-style key = value file."""
    values = dotenv_values(path)
    result: Dict[str, Any] = {}
    for key, raw in values.items():
        if raw is None:
            continue
        result[key.strip().lower()] = _strip_quotes(raw)
    return result


def _read_environment() -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for field_name in ToolConfig.model_fields:
        raw = os.getenv(ENV_PREFIX + field_name.upper())
        if raw is not None:
            result[field_name] = raw
    return result


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ToolConfig:
    """
    Build the effective configuration

    Args:
        path: Optional key=value config file
        overrides: Values from the command line (None entries are ignored)

    Returns:
        Validated ToolConfig
    """
    load_dotenv()

    merged: Dict[str, Any] = {}
    if path:
        merged.update(_read_config_file(path))
    merged.update(_read_environment())
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    unknown = sorted(k for k in merged if k not in ToolConfig.model_fields)
    if unknown:
        logger.warning(f"Ignoring unknown configuration keys: {', '.join(unknown)}")
        for key in unknown:
            merged.pop(key)

    return ToolConfig(**merged)
