from .client import EtherscanClient, FixtureBackend, HttpBackend
from .dataset import iter_dataset, load_dataset, store_dataset
from .labels import bytecode_hash, load_seed_labels, parse_compiler_version, propagate_labels
from .models import (
    NOT_HONEYPOT,
    Contract,
    ContractBundle,
    HoneypotLabel,
    InternalTransaction,
    NormalTransaction,
    SourceInfo,
    Technique,
)

__all__ = [
    "EtherscanClient",
    "FixtureBackend",
    "HttpBackend",
    "iter_dataset",
    "load_dataset",
    "store_dataset",
    "bytecode_hash",
    "load_seed_labels",
    "parse_compiler_version",
    "propagate_labels",
    "NOT_HONEYPOT",
    "Contract",
    "ContractBundle",
    "HoneypotLabel",
    "InternalTransaction",
    "NormalTransaction",
    "SourceInfo",
    "Technique",
]
