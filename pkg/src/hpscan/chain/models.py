"""Chain records as ingested from the explorer API or fixture files.

All records are frozen dataclasses. Wei amounts stay Python ints end to end
so values beyond 64 bits survive ingestion and storage unchanged.
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

ABSENT = "absent"

_ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")
_HASH_RE = re.compile(r"^0x[0-9a-f]{64}$")


def normalize_address(value: Optional[str]) -> str:
    """Lowercase an address; empty input stays empty."""
    if not value:
        return ""
    return value.strip().lower()


def normalize_tx_hash(value: Optional[str]) -> str:
    """Lowercase a transaction hash, adding the 0x prefix when it is missing."""
    if not value:
        return ""
    text = value.strip().lower()
    return text if text.startswith("0x") else "0x" + text


def is_address(value: str) -> bool:
    return bool(_ADDRESS_RE.match(value))


def is_tx_hash(value: str) -> bool:
    return bool(_HASH_RE.match(value))


class Technique(str, Enum):
    BD = "BD"
    ID = "ID"
    SESL = "SESL"
    TDO = "TDO"
    US = "US"
    HSU = "HSU"
    HT = "HT"
    SMC = "SMC"
    UC = "UC"
    MKET = "MKET"
    NONE = "NONE"

    @property
    def long_name(self) -> str:
        return TECHNIQUE_NAMES[self]


TECHNIQUE_NAMES = {
    Technique.BD: "Balance Disorder",
    Technique.ID: "Inheritance Disorder",
    Technique.SESL: "Skip Empty String Literal",
    Technique.TDO: "Type Deduction Overflow",
    Technique.US: "Uninitialised Struct",
    Technique.HSU: "Hidden State Update",
    Technique.HT: "Hidden Transfer",
    Technique.SMC: "Straw Man Contract",
    Technique.UC: "Unexecuted Call",
    Technique.MKET: "Map Key Encoding Trick",
    Technique.NONE: "Not a honeypot",
}


@dataclass(frozen=True)
class HoneypotLabel:
    is_honeypot: bool
    technique: Technique

    def __post_init__(self):
        if (self.technique is Technique.NONE) == self.is_honeypot:
            raise ValueError(
                f"Inconsistent label: is_honeypot={self.is_honeypot} with technique {self.technique.value}"
            )

    @classmethod
    def honeypot(cls, technique: "Technique | str") -> "HoneypotLabel":
        return cls(True, Technique(technique))


NOT_HONEYPOT = HoneypotLabel(False, Technique.NONE)


@dataclass(frozen=True)
class Contract:
    address: str
    creator: str
    bytecode: bytes
    creation_block: int
    creation_tx_hash: str

    def __post_init__(self):
        if self.creation_block < 0:
            raise ValueError(f"creation_block must be >= 0, got {self.creation_block}")


@dataclass(frozen=True)
class NormalTransaction:
    hash: str
    block_number: int
    timestamp: int
    from_address: str
    to: str
    contract_address: str
    value: int
    gas: int
    gas_used: int
    is_error: bool
    transaction_index: int = 0

    @property
    def is_creation(self) -> bool:
        return not self.to and bool(self.contract_address)

    @property
    def destination(self) -> str:
        return self.to or self.contract_address


@dataclass(frozen=True)
class InternalTransaction:
    parent_hash: str
    from_address: str
    to: str
    contract_address: str
    value: int
    gas: int
    gas_used: int
    is_error: bool
    trace_id: str = ""

    @property
    def destination(self) -> str:
        return self.to or self.contract_address


@dataclass(frozen=True)
class SourceInfo:
    has_source_code: bool
    source_line_count: int = 0
    compiler_version_raw: str = ""
    compiler_minor: str = ABSENT
    compiler_patch: str = ABSENT
    compiler_runs: int = 0
    library: Optional[str] = None

    @classmethod
    def absent(cls) -> "SourceInfo":
        return cls(has_source_code=False)


@dataclass(frozen=True)
class ContractBundle:
    """Everything known about one contract.

    ``found`` is False for addresses the explorer does not know; such bundles
    carry no transactions and are distinct from a failed fetch (which raises).
    """

    contract: Contract
    source: SourceInfo
    normals: Tuple[NormalTransaction, ...] = ()
    internals: Tuple[InternalTransaction, ...] = ()
    label: HoneypotLabel = NOT_HONEYPOT
    found: bool = True

    @property
    def address(self) -> str:
        return self.contract.address

    @classmethod
    def not_found(cls, address: str) -> "ContractBundle":
        contract = Contract(
            address=normalize_address(address),
            creator="",
            bytecode=b"",
            creation_block=0,
            creation_tx_hash="",
        )
        return cls(contract=contract, source=SourceInfo.absent(), found=False)

    def with_label(self, label: HoneypotLabel) -> "ContractBundle":
        return ContractBundle(
            contract=self.contract,
            source=self.source,
            normals=self.normals,
            internals=self.internals,
            label=label,
            found=self.found,
        )

    def scoped_normals(self) -> Tuple[NormalTransaction, ...]:
        """Normal transactions addressed to or creating this contract, chain-ordered."""
        address = self.contract.address
        scoped = [
            tx for tx in self.normals if tx.to == address or tx.contract_address == address
        ]
        return tuple(sorted(scoped, key=lambda tx: (tx.block_number, tx.transaction_index, tx.hash)))
