"""Builders for hand-made chain records used across the test modules."""

from typing import Optional, Sequence

from hpscan.chain.labels import parse_compiler_version
from hpscan.chain.models import (
    NOT_HONEYPOT,
    Contract,
    ContractBundle,
    HoneypotLabel,
    InternalTransaction,
    NormalTransaction,
    SourceInfo,
)

ETHER = 10 ** 18
CREATOR = "0x" + "c" * 40
CONTRACT = "0x" + "a" * 40
ALICE = "0x" + "1" * 40
BOB = "0x" + "2" * 40
CAROL = "0x" + "3" * 40


def tx_hash(n: int) -> str:
    return "0x" + format(n, "064x")


def normal(
    n: int,
    sender: str,
    value: int = 0,
    block: int = 100,
    creation: bool = False,
    error: bool = False,
    gas: int = 100000,
    gas_used: int = 60000,
    timestamp: Optional[int] = None,
    index: int = 0,
) -> NormalTransaction:
    return NormalTransaction(
        hash=tx_hash(n),
        block_number=block,
        timestamp=timestamp if timestamp is not None else 1_500_000_000 + block * 14,
        from_address=sender,
        to="" if creation else CONTRACT,
        contract_address=CONTRACT if creation else "",
        value=value,
        gas=gas,
        gas_used=gas_used,
        is_error=error,
        transaction_index=index,
    )


def internal(parent: NormalTransaction, sender: str, to: str, value: int, error: bool = False) -> InternalTransaction:
    return InternalTransaction(
        parent_hash=parent.hash,
        from_address=sender,
        to=to,
        contract_address="",
        value=value,
        gas=2300,
        gas_used=2300,
        is_error=error,
    )


def source(lines: int = 50, version: str = "v0.4.19+commit.c4cbbb05", runs: int = 200,
           library: Optional[str] = None) -> SourceInfo:
    _, minor, patch = parse_compiler_version(version)
    return SourceInfo(
        has_source_code=True,
        source_line_count=lines,
        compiler_version_raw=version,
        compiler_minor=minor,
        compiler_patch=patch,
        compiler_runs=runs,
        library=library,
    )


def bundle(
    normals: Sequence[NormalTransaction],
    internals: Sequence[InternalTransaction] = (),
    label: HoneypotLabel = NOT_HONEYPOT,
    bytecode: bytes = b"\x60\x80\x60\x40",
    info: Optional[SourceInfo] = None,
    address: str = CONTRACT,
) -> ContractBundle:
    creation = next((tx for tx in normals if tx.is_creation), normals[0])
    contract = Contract(
        address=address,
        creator=creation.from_address,
        bytecode=bytecode,
        creation_block=creation.block_number,
        creation_tx_hash=creation.hash,
    )
    return ContractBundle(
        contract=contract,
        source=info if info is not None else source(),
        normals=tuple(normals),
        internals=tuple(internals),
        label=label,
    )
