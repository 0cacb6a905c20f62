"""Archetype documents for the synthetic corpus and their validation."""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from yaml.parser import ParserError
from yaml.scanner import ScannerError

from ..chain.models import Technique
from ..core.errors import ConfigValidationError, InputError
from ..utils.logger import log
from ..utils.utils import PathLike

DEFAULT_ARCHETYPES = Path(__file__).with_name("archetypes.yaml")
WEIGHT_TOLERANCE = 1e-6


def _check_weights(weights: Dict[Any, float], what: str) -> Dict[Any, float]:
    if not weights:
        raise ValueError(f"{what} must not be empty")
    if any(w < 0 for w in weights.values()):
        raise ValueError(f"{what} weights must be >= 0")
    total = sum(weights.values())
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ValueError(f"{what} weights sum to {total:g}, expected 1")
    return weights


def _check_range(value: Tuple[float, float]) -> Tuple[float, float]:
    low, high = value
    if low < 0 or high < low:
        raise ValueError(f"expected 0 <= low <= high, got [{low}, {high}]")
    return value


class SourceProfile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    compilers: Dict[str, float]
    lines: Tuple[int, int]
    runs: Dict[int, float]
    libraries: Dict[str, float] = Field(default_factory=lambda: {"none": 1.0})

    @field_validator("compilers", "runs", "libraries")
    @classmethod
    def _weights(cls, value, info):
        return _check_weights(value, info.field_name)

    @field_validator("lines")
    @classmethod
    def _lines(cls, value):
        return _check_range(value)


class HoneypotArchetype(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    technique: Technique
    weight: float = Field(ge=0)
    creation_value: Tuple[float, float]
    deposit_value: Tuple[float, float]
    victim_value: Tuple[float, float]
    victims: Tuple[int, int]
    onlookers: Tuple[int, int]
    gas: Tuple[int, int]
    source: SourceProfile

    @field_validator("creation_value", "deposit_value", "victim_value", "victims", "onlookers", "gas")
    @classmethod
    def _ranges(cls, value):
        return _check_range(value)

    @field_validator("technique")
    @classmethod
    def _is_trap(cls, value: Technique):
        if value is Technique.NONE:
            raise ValueError("honeypot archetypes need a honeypot technique")
        return value


class NonHoneypotArchetype(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    behavior: Literal["token_like", "utility", "payout"]
    weight: float = Field(ge=0)
    calls: Tuple[int, int]
    creator_calls: Tuple[int, int]
    value: Tuple[float, float]
    error_rate: float = Field(ge=0, le=1)
    gas: Tuple[int, int]
    source: SourceProfile

    @field_validator("calls", "creator_calls", "value", "gas")
    @classmethod
    def _ranges(cls, value):
        return _check_range(value)


class NoiseRates(BaseModel):
    model_config = ConfigDict(extra="forbid")

    omit_creator_deposit: float = Field(default=0.10, ge=0, le=1)
    victim_deposit: float = Field(default=0.35, ge=0, le=1)
    failed_honeypot: float = Field(default=0.0, ge=0, le=1)
    creator_withdrawal: float = Field(default=0.90, ge=0, le=1)
    missing_source: float = Field(default=0.02, ge=0, le=1)
    missing_bytecode: float = Field(default=0.01, ge=0, le=1)
    clone: float = Field(default=0.30, ge=0, le=1)


class SynthConfig(BaseModel):
    """Corpus size, seed and the archetype mix the generator draws from."""

    model_config = ConfigDict(extra="forbid")

    n_honeypots: int = Field(default=300, ge=0)
    n_non_honeypots: int = Field(default=5000, ge=0)
    seed: int = 0
    noise: NoiseRates = Field(default_factory=NoiseRates)
    honeypots: List[HoneypotArchetype]
    non_honeypots: List[NonHoneypotArchetype]

    @model_validator(mode="after")
    def _mix(self):
        if self.honeypots:
            _check_weights({a.name: a.weight for a in self.honeypots}, "honeypots")
        elif self.n_honeypots:
            raise ValueError("n_honeypots > 0 needs at least one honeypot archetype")
        if self.non_honeypots:
            _check_weights({a.name: a.weight for a in self.non_honeypots}, "non_honeypots")
        elif self.n_non_honeypots:
            raise ValueError("n_non_honeypots > 0 needs at least one non-honeypot archetype")
        return self


def load_archetypes(path: Optional[PathLike] = None) -> Dict[str, Any]:
    """Read an archetype YAML document, reporting syntax errors with their line."""
    path = Path(path) if path is not None else DEFAULT_ARCHETYPES
    if not path.is_file():
        raise InputError(f"Archetype file not found: {path}")

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except (ScannerError, ParserError) as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else "unknown"
        log.error(f"The YAML syntax in {path.name} is invalid around line {line}")
        raise InputError(f"{path}: invalid YAML around line {line}") from e

    if not isinstance(data, dict):
        raise InputError(f"{path}: archetype document must be a mapping")
    missing = [key for key in ("honeypots", "non_honeypots") if key not in data]
    if missing:
        raise InputError(f"{path}: missing required sections: {', '.join(missing)}")
    data.setdefault("noise", {})
    return data


def synth_config(
    n_honeypots: int = 300,
    n_non_honeypots: int = 5000,
    seed: int = 0,
    path: Optional[PathLike] = None,
    **noise: float,
) -> SynthConfig:
    """Build a validated :class:`SynthConfig` from an archetype file plus overrides."""
    data = load_archetypes(path)
    data["noise"] = {**data["noise"], **noise}
    raw = {**data, "n_honeypots": n_honeypots, "n_non_honeypots": n_non_honeypots, "seed": seed}
    try:
        return SynthConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigValidationError(
            f"{'.'.join(str(part) for part in err['loc']) or 'synth'}: {err['msg']}"
            for err in e.errors()
        ) from e
