import hashlib
from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Tuple

from ..core.errors import InputError, LabelConflictError
from ..utils.logger import log
from ..utils.utils import PathLike, read_csv
from .models import (
    ABSENT,
    NOT_HONEYPOT,
    Contract,
    HoneypotLabel,
    Technique,
    is_address,
    normalize_address,
)


def parse_compiler_version(raw: str) -> Tuple[str, str, str]:
    """Split a solc version string into (major, minor, patch) tokens.

    Everything after the second dot, commit suffix included, is the patch
    token. Anything that does not look like ``[v]X.Y.Z`` maps to the
    ``absent`` sentinel for all three parts.
    """
    text = (raw or "").strip()
    if text.startswith("v"):
        text = text[1:]
    parts = text.split(".", 2)
    if len(parts) != 3 or not all(parts):
        return ABSENT, ABSENT, ABSENT
    major, minor, patch = parts
    if not (major.isdigit() and minor.isdigit()):
        return ABSENT, ABSENT, ABSENT
    return major, minor, patch


def count_source_lines(source: str) -> int:
    """Lines split on newline characters only; an unterminated last line still counts."""
    if not source:
        return 0
    return source.count("\n") + int(not source.endswith("\n"))


def bytecode_hash(bytecode: bytes) -> bytes:
    """SHA-256 digest of the raw bytecode."""
    return hashlib.sha256(bytecode).digest()


def propagate_labels(
    contracts: Iterable[Contract],
    seed_labels: Mapping[str, HoneypotLabel],
) -> Dict[str, HoneypotLabel]:
    """Spread representative labels to every contract sharing its bytecode.

    Only honeypot seeds propagate; every other contract is labeled
    not-honeypot. Seeds with different labels on one bytecode group raise
    :class:`LabelConflictError`.
    """
    contracts = list(contracts)
    seeds = {normalize_address(address): label for address, label in seed_labels.items()}

    groups: Dict[bytes, List[str]] = defaultdict(list)
    for contract in contracts:
        groups[bytecode_hash(contract.bytecode)].append(contract.address)

    by_address = {contract.address: contract for contract in contracts}
    group_label: Dict[bytes, Tuple[str, HoneypotLabel]] = {}
    for address, label in seeds.items():
        if not label.is_honeypot:
            continue
        contract = by_address.get(address)
        if contract is None:
            log.warning(f"Seed {address} is not in the dataset; skipping it")
            continue
        digest = bytecode_hash(contract.bytecode)
        previous = group_label.get(digest)
        if previous is not None and previous[1] != label:
            raise LabelConflictError(digest.hex(), sorted([previous[0], address]))
        group_label.setdefault(digest, (address, label))

    labels: Dict[str, HoneypotLabel] = {}
    for digest, addresses in groups.items():
        label = group_label[digest][1] if digest in group_label else NOT_HONEYPOT
        for address in addresses:
            labels[address] = label
    return labels


def load_seed_labels(path: PathLike) -> Dict[str, HoneypotLabel]:
    """Read manually confirmed representatives from a CSV ``address,technique``."""
    frame = read_csv(path, dtype=str)
    missing = {"address", "technique"} - set(frame.columns)
    if missing:
        raise InputError(f"{path}: missing columns {', '.join(sorted(missing))}")

    seeds: Dict[str, HoneypotLabel] = {}
    for line, (address, technique) in enumerate(
        zip(frame["address"], frame["technique"]), start=2
    ):
        address = normalize_address(address)
        if not is_address(address):
            raise InputError(f"{path}: line {line}: malformed address {address!r}")
        try:
            tag = Technique(str(technique).strip().upper())
        except ValueError:
            raise InputError(f"{path}: line {line}: unknown technique {technique!r}") from None
        seeds[address] = NOT_HONEYPOT if tag is Technique.NONE else HoneypotLabel.honeypot(tag)
    return seeds
