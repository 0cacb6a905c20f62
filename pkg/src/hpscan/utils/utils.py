import io
import os
import sys
import yaml
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, TextIO, Union

import pandas as pd

# Application name - this will be used for the app directory
APP_NAME = "hpscan"

PathLike = Union[str, Path]


def get_app_dir() -> Path:
    """Get the application directory (``$HPSCAN_HOME`` or ``~/.hpscan``)."""
    override = os.getenv("HPSCAN_HOME")
    if override:
        return Path(override).expanduser()
    return Path.home() / f".{APP_NAME}"


def get_config_path() -> Path:
    """Get the path to the config file."""
    return get_app_dir() / "config.yaml"


def get_data_dir() -> Path:
    """Get the datasets directory path."""
    return get_app_dir() / "data"


def get_reports_dir() -> Path:
    """Get the reports directory path."""
    return get_app_dir() / "reports"


def create_app_directory_structure() -> None:
    """Create the application directory structure."""
    get_app_dir().mkdir(exist_ok=True, parents=True)
    get_data_dir().mkdir(exist_ok=True)
    get_reports_dir().mkdir(exist_ok=True)


def save_config(config: Dict[str, Any], path: Optional[PathLike] = None) -> None:
    """Save configuration to the config file."""
    target = Path(path) if path else get_config_path()
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w") as f:
        yaml.dump(config, f, default_flow_style=False)


def load_config(path: Optional[PathLike] = None) -> Dict[str, Any]:
    """Load configuration from the config file."""
    config_path = Path(path) if path else get_config_path()
    if config_path.exists():
        with open(config_path, "r") as f:
            return yaml.safe_load(f) or {}
    return {}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Return ``base`` with ``override`` merged in, recursing into dicts."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def is_stream(path: Optional[PathLike]) -> bool:
    return str(path) == "-"


@contextmanager
def open_text(path: PathLike, mode: str = "r") -> Iterator[TextIO]:
    """Open a UTF-8 text file, treating ``-`` as stdin/stdout."""
    if is_stream(path):
        yield sys.stdin if "r" in mode else sys.stdout
        return
    if "r" not in mode:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode, encoding="utf-8", newline="") as f:
        yield f


def metadata_line(version: str, seed: Optional[int], **extra: Any) -> str:
    """Leading comment line carried by every CSV report."""
    parts = [f"hpscan={version}", f"seed={seed if seed is not None else 'none'}"]
    parts.extend(f"{key}={value}" for key, value in extra.items())
    return "# " + " ".join(parts)


def write_csv(
    frame: pd.DataFrame,
    path: PathLike,
    metadata: Optional[str] = None,
    float_format: str = "%.9g",
) -> None:
    """Write a CSV report with an optional leading ``#`` metadata line."""
    with open_text(path, "w") as f:
        if metadata:
            f.write(metadata + "\n")
        frame.to_csv(f, index=False, float_format=float_format, lineterminator="\n")


def read_csv(path: PathLike, **kwargs: Any) -> pd.DataFrame:
    """Read a CSV written by :func:`write_csv`, skipping leading metadata lines."""
    with open_text(path, "r") as f:
        text = f.read()
    lines = text.splitlines(keepends=True)
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    return pd.read_csv(io.StringIO("".join(lines)), **kwargs)
