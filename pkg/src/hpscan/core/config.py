import copy
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..gbdt.model import TrainConfig
from ..utils.utils import (
    deep_merge,
    get_config_path,
    get_data_dir,
    get_reports_dir,
    load_config,
    save_config,
)
from .errors import ConfigValidationError

DEFAULT_CONFIG = {
    "client": {
        "base_url": "https://api.etherscan.io/api",
        "api_key_env": "ETHERSCAN_API_KEY",
        "fixtures": None,
        "rate_limit": 5.0,
        "page_size": 10000,
        "max_retries": 5,
        "backoff": 0.5,
        "timeout": 30.0,
        "concurrency": 4,
        "start_block": 0,
        "end_block": 99999999,
    },
    "paths": {
        "dataset": str(get_data_dir() / "dataset.jsonl"),
        "output_dir": str(get_reports_dir()),
    },
    "features": {
        "set": "all",
        "near_zero_variance": 1e-12,
    },
    "train": {
        "n_rounds": 100,
        "learning_rate": 0.1,
        "max_depth": 6,
        "l2_lambda": 1.0,
        "gain_gamma": 0.0,
        "min_child_weight": 1.0,
        "scale_pos_weight": None,
    },
    "evaluation": {
        "k": 10,
        "threshold": 0.5,
    },
    "seed": 0,
    "jobs": 1,
    "system": {
        "debug_mode": False,
    },
}


class ClientSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base_url: str = Field(min_length=1)
    api_key_env: str = "ETHERSCAN_API_KEY"
    fixtures: Optional[str] = None
    rate_limit: float = Field(gt=0)
    page_size: int = Field(ge=1, le=10000)
    max_retries: int = Field(ge=1)
    backoff: float = Field(ge=0)
    timeout: float = Field(gt=0)
    concurrency: int = Field(ge=1)
    start_block: int = Field(ge=0)
    end_block: int = Field(ge=0)


class PathSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: str
    output_dir: str


class FeatureSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    set: Literal["all", "transactions", "source", "fundflow"] = "all"
    near_zero_variance: float = Field(ge=0)


class EvaluationSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(ge=2)
    threshold: float = Field(gt=0, lt=1)


class SystemSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    debug_mode: bool = False


class PipelineConfig(BaseModel):
    """Validated view of the merged config file and command-line flags."""

    model_config = ConfigDict(extra="forbid")

    client: ClientSettings
    paths: PathSettings
    features: FeatureSettings
    train: TrainConfig
    evaluation: EvaluationSettings
    seed: int
    jobs: int = Field(ge=1)
    system: SystemSettings


def validate_config(raw: Dict[str, Any]) -> PipelineConfig:
    """Validate a raw config dict, reporting every violated field at once."""
    try:
        return PipelineConfig.model_validate(raw)
    except ValidationError as e:
        violations = [
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}"
            for err in e.errors()
        ]
        raise ConfigValidationError(violations) from e


class Config:
    """The config file merged over DEFAULT_CONFIG, with dot access per section."""

    def __init__(self, path: Optional[Path] = None):
        self._config_path = Path(path) if path else get_config_path()
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        if os.path.exists(self._config_path):
            return deep_merge(copy.deepcopy(DEFAULT_CONFIG), load_config(self._config_path))
        return copy.deepcopy(DEFAULT_CONFIG)

    def save(self) -> None:
        # keys come from the environment only
        safe_config = copy.deepcopy(self._config)
        safe_config.get("client", {}).pop("api_key", None)
        save_config(safe_config, self._config_path)

    def get_api_key(self, service: str = "etherscan") -> Optional[str]:
        """Key for ``service`` from the variable named by ``client.api_key_env``, or None."""
        env_var_map = {
            "etherscan": self._config.get("client", {}).get("api_key_env")
            or "ETHERSCAN_API_KEY",
        }

        if env_var := env_var_map.get(service):
            return os.getenv(env_var)
        return None

    def validated(self, overrides: Optional[Dict[str, Any]] = None) -> PipelineConfig:
        """Merge flag overrides (flags win) and validate the result."""
        merged = deep_merge(self._config, overrides or {})
        return validate_config(merged)

    @property
    def client(self):
        return ConfigSection(self._config.get("client", {}))

    @property
    def paths(self):
        return ConfigSection(self._config.get("paths", {}))

    @property
    def train(self):
        return ConfigSection(self._config.get("train", {}))

    @property
    def evaluation(self):
        return ConfigSection(self._config.get("evaluation", {}))

    @property
    def config(self):
        return self._config


class ConfigSection:
    """Read-only dot access to one section; missing keys read as None."""

    def __init__(self, section_dict: Dict[str, Any]):
        self._section = section_dict

    def __getattr__(self, key: str) -> Any:
        if key not in self._section:
            return None
        value = self._section[key]
        if isinstance(value, dict):
            return ConfigSection(value)
        return value


config = Config()
