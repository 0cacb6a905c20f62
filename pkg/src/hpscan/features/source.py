import json
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Tuple

from ..chain.models import ABSENT, Contract, SourceInfo
from ..core.errors import InputError
from ..utils.utils import PathLike, open_text

DICTIONARY_FORMAT = "hpscan-encoding"
DICTIONARY_VERSION = 1

SOURCE_BASE_COLUMNS = ["hasByteCode", "hasSourceCode", "numSourceCodeLines", "compilerRuns"]

# One-hot block prefix -> SourceInfo attribute
CATEGORICALS = {
    "library": "library",
    "compilerMinorVersion": "compiler_minor",
    "compilerPatchVersion": "compiler_patch",
}


def _category_value(source: SourceInfo, attribute: str) -> Optional[str]:
    value = getattr(source, attribute)
    if not source.has_source_code or value in (None, "", ABSENT):
        return None
    return value


@dataclass(frozen=True)
class EncodingDictionary:
    """Ordered vocabularies for the one-hot encoded source metadata.

    Each value list is sorted lexicographically when fitted; a value's
    position is its one-hot column index (``compilerPatchVersion136``).
    """

    library: Tuple[str, ...] = ()
    compilerMinorVersion: Tuple[str, ...] = ()
    compilerPatchVersion: Tuple[str, ...] = ()

    @classmethod
    def fit(cls, sources: Iterable[SourceInfo]) -> "EncodingDictionary":
        seen: Dict[str, set] = {prefix: set() for prefix in CATEGORICALS}
        for source in sources:
            for prefix, attribute in CATEGORICALS.items():
                value = _category_value(source, attribute)
                if value is not None:
                    seen[prefix].add(value)
        return cls(**{prefix: tuple(sorted(values)) for prefix, values in seen.items()})

    @cached_property
    def _positions(self) -> Dict[str, Dict[str, int]]:
        return {
            prefix: {value: i for i, value in enumerate(self.values(prefix))}
            for prefix in CATEGORICALS
        }

    def values(self, prefix: str) -> Tuple[str, ...]:
        return getattr(self, prefix)

    def columns(self) -> List[str]:
        return [
            f"{prefix}{i}"
            for prefix in CATEGORICALS
            for i in range(len(self.values(prefix)))
        ]

    def index_of(self, prefix: str, value: Optional[str]) -> Optional[int]:
        if value is None:
            return None
        return self._positions[prefix].get(value)

    def to_dict(self) -> Dict:
        return {
            "format": DICTIONARY_FORMAT,
            "version": DICTIONARY_VERSION,
            **{prefix: list(self.values(prefix)) for prefix in CATEGORICALS},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "EncodingDictionary":
        if data.get("format") != DICTIONARY_FORMAT or data.get("version") != DICTIONARY_VERSION:
            raise InputError(
                f"Not an {DICTIONARY_FORMAT} v{DICTIONARY_VERSION} document: "
                f"format={data.get('format')!r} version={data.get('version')!r}"
            )
        return cls(**{prefix: tuple(data.get(prefix, [])) for prefix in CATEGORICALS})

    def save(self, path: PathLike):
        with open_text(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path: PathLike) -> "EncodingDictionary":
        with open_text(path, "r") as f:
            try:
                return cls.from_dict(json.load(f))
            except json.JSONDecodeError as e:
                raise InputError(f"{path}: invalid JSON: {e}") from None


def extract_source_features(
    contract: Contract, source: SourceInfo, dictionary: EncodingDictionary
) -> Dict[str, float]:
    """Source-code feature block; unseen or absent categories leave their block all-zero.

    The compiler major version carries no information and is not emitted.
    """
    features: Dict[str, float] = {
        "hasByteCode": float(len(contract.bytecode) > 0),
        "hasSourceCode": float(source.has_source_code),
        "numSourceCodeLines": float(source.source_line_count if source.has_source_code else 0),
        "compilerRuns": float(source.compiler_runs if source.has_source_code else 0),
    }
    for prefix, attribute in CATEGORICALS.items():
        hot = dictionary.index_of(prefix, _category_value(source, attribute))
        for i in range(len(dictionary.values(prefix))):
            features[f"{prefix}{i}"] = 1.0 if i == hot else 0.0
    return features
