from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..chain.models import ContractBundle, InternalTransaction, NormalTransaction
from ..core.errors import InputError
from ..utils.utils import PathLike, write_csv
from .cases import (
    NUM_CASES,
    Balance,
    FundFlowCase,
    Sender,
    case_column,
    case_id,
    matching_case_ids,
)


def _direction(delta: int) -> Balance:
    if delta > 0:
        return Balance.UP
    if delta < 0:
        return Balance.DOWN
    return Balance.UNCHANGED


def balance_deltas(
    tx: NormalTransaction, internals: Iterable[InternalTransaction]
) -> Dict[str, int]:
    """Net wei moved per account by a transaction and its internal transfers.

    Errored transfers are rolled back and contribute nothing. Gas is not
    counted.
    """
    deltas: Dict[str, int] = defaultdict(int)
    for transfer in (tx, *internals):
        if transfer.is_error or transfer.value == 0:
            continue
        deltas[transfer.from_address] -= transfer.value
        deltas[transfer.destination] += transfer.value
    return deltas


def event_case(
    tx: NormalTransaction,
    internals: Sequence[InternalTransaction],
    creator: str,
    contract: str,
) -> FundFlowCase:
    deltas = balance_deltas(tx, internals)
    sender = Sender.CREATOR if tx.from_address == creator else Sender.OTHER
    if sender is Sender.CREATOR:
        balance_sender = Balance.NOT_APPLICABLE
    else:
        balance_sender = _direction(deltas.get(tx.from_address, 0))

    others = [
        delta for account, delta in deltas.items()
        if account not in (creator, contract, tx.from_address)
    ]
    return FundFlowCase(
        sender=sender,
        creation=tx.is_creation and sender is Sender.CREATOR,
        error=tx.is_error or any(i.is_error for i in internals),
        balance_creator=_direction(deltas.get(creator, 0)),
        balance_contract=_direction(deltas.get(contract, 0)),
        balance_sender=balance_sender,
        balance_other_positive=any(d > 0 for d in others),
        balance_other_negative=any(d < 0 for d in others),
    )


def classify_event(
    tx: NormalTransaction,
    internals: Sequence[InternalTransaction],
    creator: str,
    contract: str,
) -> int:
    """Case ID of one normal transaction together with the internals it triggered."""
    return case_id(event_case(tx, internals, creator, contract))


def events_for_bundle(bundle: ContractBundle) -> List[int]:
    """Case IDs of every normal transaction scoped to the contract, in chain order."""
    by_parent: Dict[str, List[InternalTransaction]] = defaultdict(list)
    for internal in bundle.internals:
        by_parent[internal.parent_hash].append(internal)
    contract = bundle.contract
    return [
        classify_event(tx, by_parent.get(tx.hash, ()), contract.creator, contract.address)
        for tx in bundle.scoped_normals()
    ]


@dataclass(frozen=True)
class FrequencyVector:
    freq: np.ndarray
    event_count: int

    def matching_share(self, case_ids: Sequence[int]) -> float:
        return float(self.freq[list(case_ids)].sum())


def frequency_vector(events: Sequence[int]) -> FrequencyVector:
    if len(events) == 0:
        raise InputError("Cannot build a frequency vector from zero events (contract unknown?)")
    counts = np.bincount(np.asarray(events, dtype=np.int64), minlength=NUM_CASES)
    return FrequencyVector(freq=counts / len(events), event_count=len(events))


def query_cases(
    predicate: Mapping[str, object], vectors: Mapping[str, FrequencyVector]
) -> Dict[str, float]:
    """Summed frequency of every case matching a partial assignment, per contract."""
    ids = matching_case_ids(predicate)
    return {address: vector.matching_share(ids) for address, vector in vectors.items()}


def frequency_vectors(bundles: Iterable[ContractBundle]) -> Dict[str, FrequencyVector]:
    """Vectors for every bundle that has at least one event."""
    vectors = {}
    for bundle in bundles:
        events = events_for_bundle(bundle)
        if events:
            vectors[bundle.address] = frequency_vector(events)
    return vectors


def case_counts(bundles: Iterable[ContractBundle]) -> pd.DataFrame:
    """Number of normal transactions per case, split by honeypot label.

    Columns: ``caseId``, ``honeypots``, ``nonHoneypots``.
    """
    counts = {True: np.zeros(NUM_CASES, dtype=np.int64), False: np.zeros(NUM_CASES, dtype=np.int64)}
    for bundle in bundles:
        events = events_for_bundle(bundle)
        if events:
            counts[bundle.label.is_honeypot] += np.bincount(events, minlength=NUM_CASES)
    return pd.DataFrame({
        "caseId": np.arange(NUM_CASES),
        "honeypots": counts[True],
        "nonHoneypots": counts[False],
    })


def top_cases(counts: pd.DataFrame, column: str, n: int = 5) -> List[Tuple[int, int]]:
    """The ``n`` most frequent (caseId, count) pairs of a label column; ties by lower ID."""
    ranked = counts[counts[column] > 0].sort_values(
        [column, "caseId"], ascending=[False, True], kind="mergesort"
    ).head(n)
    return [(int(c), int(v)) for c, v in zip(ranked["caseId"], ranked[column])]


def write_frequency_csv(vectors: Mapping[str, FrequencyVector], path: PathLike, metadata: Optional[str] = None):
    columns = [case_column(i) for i in range(NUM_CASES)]
    rows = np.vstack([v.freq for v in vectors.values()]) if vectors else np.zeros((0, NUM_CASES))
    frame = pd.DataFrame(rows, columns=columns)
    frame.insert(0, "address", list(vectors.keys()))
    write_csv(frame, path, metadata=metadata)
