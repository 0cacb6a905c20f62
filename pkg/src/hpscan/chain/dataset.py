"""JSON-Lines persistence for contract bundles.

The first line is the header ``{"format":"hpscan-raw","version":1}``; every
following line holds one bundle. Integers are written as decimal strings so
256-bit wei values survive any JSON reader.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List

from ..core.errors import CorruptRecordError, DatasetVersionError
from ..utils.utils import PathLike, is_stream, open_text
from .models import (
    Contract,
    ContractBundle,
    HoneypotLabel,
    InternalTransaction,
    NormalTransaction,
    SourceInfo,
    Technique,
)

DATASET_FORMAT = "hpscan-raw"
DATASET_VERSION = 1
HEADER = {"format": DATASET_FORMAT, "version": DATASET_VERSION}


def _dumps(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _normal_to_dict(tx: NormalTransaction) -> Dict[str, Any]:
    return {
        "hash": tx.hash,
        "blockNumber": str(tx.block_number),
        "timeStamp": str(tx.timestamp),
        "transactionIndex": str(tx.transaction_index),
        "from": tx.from_address,
        "to": tx.to,
        "contractAddress": tx.contract_address,
        "value": str(tx.value),
        "gas": str(tx.gas),
        "gasUsed": str(tx.gas_used),
        "isError": tx.is_error,
    }


def _internal_to_dict(tx: InternalTransaction) -> Dict[str, Any]:
    return {
        "parentHash": tx.parent_hash,
        "from": tx.from_address,
        "to": tx.to,
        "contractAddress": tx.contract_address,
        "value": str(tx.value),
        "gas": str(tx.gas),
        "gasUsed": str(tx.gas_used),
        "isError": tx.is_error,
        "traceId": tx.trace_id,
    }


def bundle_to_dict(bundle: ContractBundle) -> Dict[str, Any]:
    contract = bundle.contract
    source = bundle.source
    return {
        "found": bundle.found,
        "contract": {
            "address": contract.address,
            "creator": contract.creator,
            "bytecode": "0x" + contract.bytecode.hex(),
            "creationBlock": str(contract.creation_block),
            "creationTxHash": contract.creation_tx_hash,
        },
        "source": {
            "hasSourceCode": source.has_source_code,
            "sourceLineCount": str(source.source_line_count),
            "compilerVersionRaw": source.compiler_version_raw,
            "compilerMinor": source.compiler_minor,
            "compilerPatch": source.compiler_patch,
            "compilerRuns": str(source.compiler_runs),
            "library": source.library,
        },
        "label": {
            "isHoneypot": bundle.label.is_honeypot,
            "technique": bundle.label.technique.value,
        },
        "normals": [_normal_to_dict(tx) for tx in bundle.normals],
        "internals": [_internal_to_dict(tx) for tx in bundle.internals],
    }


def bundle_from_dict(record: Dict[str, Any]) -> ContractBundle:
    """Inverse of :func:`bundle_to_dict`; raises KeyError/ValueError on bad input."""
    c = record["contract"]
    s = record["source"]
    bytecode = c["bytecode"]
    if not bytecode.startswith("0x"):
        raise ValueError("bytecode must be 0x-prefixed hex")
    contract = Contract(
        address=c["address"],
        creator=c["creator"],
        bytecode=bytes.fromhex(bytecode[2:]),
        creation_block=int(c["creationBlock"]),
        creation_tx_hash=c["creationTxHash"],
    )
    source = SourceInfo(
        has_source_code=bool(s["hasSourceCode"]),
        source_line_count=int(s["sourceLineCount"]),
        compiler_version_raw=s["compilerVersionRaw"],
        compiler_minor=s["compilerMinor"],
        compiler_patch=s["compilerPatch"],
        compiler_runs=int(s["compilerRuns"]),
        library=s["library"],
    )
    label = HoneypotLabel(
        bool(record["label"]["isHoneypot"]), Technique(record["label"]["technique"])
    )
    normals = tuple(
        NormalTransaction(
            hash=t["hash"],
            block_number=int(t["blockNumber"]),
            timestamp=int(t["timeStamp"]),
            from_address=t["from"],
            to=t["to"],
            contract_address=t["contractAddress"],
            value=int(t["value"]),
            gas=int(t["gas"]),
            gas_used=int(t["gasUsed"]),
            is_error=bool(t["isError"]),
            transaction_index=int(t["transactionIndex"]),
        )
        for t in record["normals"]
    )
    internals = tuple(
        InternalTransaction(
            parent_hash=t["parentHash"],
            from_address=t["from"],
            to=t["to"],
            contract_address=t["contractAddress"],
            value=int(t["value"]),
            gas=int(t["gas"]),
            gas_used=int(t["gasUsed"]),
            is_error=bool(t["isError"]),
            trace_id=t.get("traceId", ""),
        )
        for t in record["internals"]
    )
    return ContractBundle(
        contract=contract,
        source=source,
        normals=normals,
        internals=internals,
        label=label,
        found=bool(record["found"]),
    )


def _check_header(line: str, path: PathLike):
    try:
        header = json.loads(line)
    except json.JSONDecodeError:
        raise DatasetVersionError(f"{path}: first line is not a dataset header") from None
    if not isinstance(header, dict) or header.get("format") != DATASET_FORMAT:
        raise DatasetVersionError(f"{path}: not an {DATASET_FORMAT} dataset")
    if header.get("version") != DATASET_VERSION:
        raise DatasetVersionError(
            f"{path}: dataset version {header.get('version')} is not supported "
            f"(expected {DATASET_VERSION})"
        )


def store_dataset(bundles: Iterable[ContractBundle], path: PathLike, append: bool = False) -> int:
    """Write bundles to a JSONL dataset; returns how many were written.

    With ``append=True`` an existing file must carry a valid header, and the
    new records go after the last one.
    """
    existing = (
        append
        and not is_stream(path)
        and Path(path).exists()
        and Path(path).stat().st_size > 0
    )
    if existing:
        with open_text(path, "r") as f:
            _check_header(f.readline(), path)

    count = 0
    with open_text(path, "a" if existing else "w") as f:
        if not existing:
            f.write(_dumps(HEADER) + "\n")
        for bundle in bundles:
            f.write(_dumps(bundle_to_dict(bundle)) + "\n")
            count += 1
    return count


def iter_dataset(path: PathLike) -> Iterator[ContractBundle]:
    """Stream bundles from a dataset, validating the header first."""
    with open_text(path, "r") as f:
        first = f.readline()
        if not first:
            raise DatasetVersionError(f"{path}: empty file has no dataset header")
        _check_header(first, path)
        for line_number, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                yield bundle_from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as e:
                raise CorruptRecordError(str(path), line_number, f"{type(e).__name__}: {e}") from None


def load_dataset(path: PathLike) -> List[ContractBundle]:
    return list(iter_dataset(path))
