"""Aggregate statistics over a contract's normal and internal transactions.

Undefined statistics (deltas of a single transaction, internal aggregates of
a contract without internal transactions, value statistics without any
error-free transfer) are ``None`` here and become NaN in the matrix; the
preprocessing step decides what they turn into.
"""

import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..chain.models import InternalTransaction, NormalTransaction
from ..core.errors import InputError

WEI_PER_ETHER = 10 ** 18

NORMAL_COLUMNS = [
    "normalTransactionCount",
    "normalTransactionOtherSenderRatio",
    "normalTransactionValueMean",
    "normalTransactionValueStd",
    "normalTransactionGasMean",
    "normalTransactionGasStd",
    "normalTransactionGasUsedMean",
    "normalTransactionGasUsedStd",
    "normalTransactionBlockSpan",
    "normalTransactionTimeSpan",
    "normalTransactionBlockDeltaMean",
    "normalTransactionBlockDeltaStd",
    "normalTransactionTimeDeltaMean",
    "normalTransactionTimeDeltaStd",
]

INTERNAL_COLUMNS = [
    "internalTransactionCount",
    "internalTransactionOtherSenderRatio",
    "internalTransactionValueMean",
    "internalTransactionValueStd",
    "internalTransactionGasMean",
    "internalTransactionGasStd",
    "internalTransactionGasUsedMean",
    "internalTransactionGasUsedStd",
    "internalTransactionCreationCount",
    "internalTransactionToOtherRatio",
]

TRANSACTION_COLUMNS = NORMAL_COLUMNS + INTERNAL_COLUMNS + ["hasInternalTransactions"]

Stats = Dict[str, Optional[float]]
MeanStd = Tuple[Optional[float], Optional[float]]


def other_sender_ratio(parties: Sequence[str], creator: str) -> float:
    """Unique non-creator parties over all non-creator appearances; 0 if none."""
    others = [party for party in parties if party != creator]
    if not others:
        return 0.0
    return len(set(others)) / len(others)


def ether_stats(values: Sequence[int]) -> MeanStd:
    """Population mean and std in ether, accumulated exactly in wei."""
    if not values:
        return None, None
    n = len(values)
    total = sum(values)
    mean = Fraction(total, n * WEI_PER_ETHER)
    variance = Fraction(n * sum(v * v for v in values) - total * total, n * n * WEI_PER_ETHER ** 2)
    return float(mean), math.sqrt(variance)


def _mean_std(values: Sequence[float]) -> MeanStd:
    if len(values) == 0:
        return None, None
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def _prefixed(prefix: str, **stats: Optional[float]) -> Stats:
    return {f"{prefix}{name}": value for name, value in stats.items()}


def extract_transaction_features(
    normals: Sequence[NormalTransaction],
    internals: Sequence[InternalTransaction],
    creator: str,
) -> Stats:
    if not normals:
        raise InputError("A contract needs at least its creation transaction")

    ordered: List[NormalTransaction] = sorted(
        normals, key=lambda tx: (tx.block_number, tx.transaction_index)
    )
    value_mean, value_std = ether_stats([tx.value for tx in ordered if not tx.is_error])
    gas_mean, gas_std = _mean_std([tx.gas for tx in ordered])
    used_mean, used_std = _mean_std([tx.gas_used for tx in ordered])

    blocks = np.array([tx.block_number for tx in ordered], dtype=np.float64)
    times = np.array([tx.timestamp for tx in ordered], dtype=np.float64)
    block_delta_mean, block_delta_std = _mean_std(np.diff(blocks)) if len(ordered) > 1 else (None, None)
    time_delta_mean, time_delta_std = _mean_std(np.diff(times)) if len(ordered) > 1 else (None, None)

    features = _prefixed(
        "normalTransaction",
        Count=float(len(ordered)),
        OtherSenderRatio=other_sender_ratio([tx.from_address for tx in ordered], creator),
        ValueMean=value_mean,
        ValueStd=value_std,
        GasMean=gas_mean,
        GasStd=gas_std,
        GasUsedMean=used_mean,
        GasUsedStd=used_std,
        BlockSpan=float(blocks[-1] - blocks[0]),
        TimeSpan=float(times[-1] - times[0]),
        BlockDeltaMean=block_delta_mean,
        BlockDeltaStd=block_delta_std,
        TimeDeltaMean=time_delta_mean,
        TimeDeltaStd=time_delta_std,
    )

    if internals:
        i_value_mean, i_value_std = ether_stats([i.value for i in internals if not i.is_error])
        i_gas_mean, i_gas_std = _mean_std([i.gas for i in internals])
        i_used_mean, i_used_std = _mean_std([i.gas_used for i in internals])
        features.update(_prefixed(
            "internalTransaction",
            Count=float(len(internals)),
            OtherSenderRatio=other_sender_ratio([i.from_address for i in internals], creator),
            ValueMean=i_value_mean,
            ValueStd=i_value_std,
            GasMean=i_gas_mean,
            GasStd=i_gas_std,
            GasUsedMean=i_used_mean,
            GasUsedStd=i_used_std,
            CreationCount=float(sum(1 for i in internals if i.contract_address)),
            ToOtherRatio=other_sender_ratio([i.destination for i in internals], creator),
        ))
    else:
        features.update({column: None for column in INTERNAL_COLUMNS})
        features["internalTransactionCount"] = 0.0
    features["hasInternalTransactions"] = float(bool(internals))
    return features
