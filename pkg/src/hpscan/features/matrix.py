from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..chain.models import ContractBundle, HoneypotLabel, Technique
from ..core.errors import DictionaryMismatchError, InputError
from ..fundflow.cases import NUM_CASES, case_column
from ..fundflow.events import events_for_bundle, frequency_vector
from ..utils.logger import log
from ..utils.utils import PathLike, read_csv, write_csv
from .source import SOURCE_BASE_COLUMNS, EncodingDictionary, extract_source_features
from .transactions import TRANSACTION_COLUMNS, extract_transaction_features

FUND_FLOW_COLUMNS = [case_column(i) for i in range(NUM_CASES)]
LABEL_COLUMNS = ["isHoneypot", "technique"]

FAMILIES = ("source", "transactions", "fundflow")


def family_of(column: str) -> str:
    if column.startswith("fundFlowCase"):
        return "fundflow"
    if column in TRANSACTION_COLUMNS:
        return "transactions"
    return "source"


@dataclass(frozen=True)
class FeatureRow:
    address: str
    source: Dict[str, float]
    transactions: Dict[str, Optional[float]]
    fund_flow: np.ndarray
    label: HoneypotLabel
    dictionary: EncodingDictionary


@dataclass
class FeatureMatrix:
    """Feature columns plus the per-row address and labels kept alongside.

    Labels never appear among ``features``.
    """

    features: pd.DataFrame
    addresses: List[str]
    is_honeypot: np.ndarray
    techniques: List[str]

    def __post_init__(self):
        n = len(self.features)
        if not (len(self.addresses) == len(self.is_honeypot) == len(self.techniques) == n):
            raise InputError("Feature matrix rows and label columns differ in length")
        self.features = self.features.reset_index(drop=True)
        self.is_honeypot = np.asarray(self.is_honeypot, dtype=np.int8)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def feature_names(self) -> List[str]:
        return list(self.features.columns)

    @property
    def X(self) -> np.ndarray:
        return self.features.to_numpy(dtype=np.float64)

    @property
    def y(self) -> np.ndarray:
        return self.is_honeypot.astype(np.int64)

    def take(self, rows: Sequence[int]) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(
            features=self.features.iloc[rows],
            addresses=[self.addresses[i] for i in rows],
            is_honeypot=self.is_honeypot[rows],
            techniques=[self.techniques[i] for i in rows],
        )

    def with_features(self, features: pd.DataFrame) -> "FeatureMatrix":
        return FeatureMatrix(features, list(self.addresses), self.is_honeypot.copy(), list(self.techniques))

    def select_families(self, families: Iterable[str]) -> "FeatureMatrix":
        wanted = set(families)
        unknown = wanted - set(FAMILIES)
        if unknown:
            raise InputError(f"Unknown feature families: {', '.join(sorted(unknown))}")
        columns = [c for c in self.feature_names if family_of(c) in wanted]
        return self.with_features(self.features[columns])

    def to_frame(self) -> pd.DataFrame:
        frame = self.features.copy()
        frame.insert(0, "address", self.addresses)
        frame["isHoneypot"] = self.is_honeypot
        frame["technique"] = self.techniques
        return frame


def _row_dict(row: FeatureRow) -> Dict[str, float]:
    values: Dict[str, float] = dict(row.source)
    values.update({k: (np.nan if v is None else v) for k, v in row.transactions.items()})
    values.update(zip(FUND_FLOW_COLUMNS, row.fund_flow.tolist()))
    return values


def assemble_matrix(rows: Sequence[FeatureRow]) -> FeatureMatrix:
    """Stack rows in column order: source block, transaction block, fund-flow cases."""
    if rows:
        dictionary = rows[0].dictionary
        for row in rows[1:]:
            if row.dictionary != dictionary:
                raise DictionaryMismatchError(
                    f"Row {row.address} was encoded with a different dictionary than {rows[0].address}"
                )
        columns = SOURCE_BASE_COLUMNS + dictionary.columns() + TRANSACTION_COLUMNS + FUND_FLOW_COLUMNS
    else:
        columns = SOURCE_BASE_COLUMNS + TRANSACTION_COLUMNS + FUND_FLOW_COLUMNS

    data = np.empty((len(rows), len(columns)), dtype=np.float64)
    for i, row in enumerate(rows):
        values = _row_dict(row)
        data[i] = [values[c] for c in columns]
    return FeatureMatrix(
        features=pd.DataFrame(data, columns=columns),
        addresses=[row.address for row in rows],
        is_honeypot=np.array([row.label.is_honeypot for row in rows], dtype=np.int8),
        techniques=[row.label.technique.value for row in rows],
    )


def extract_row(bundle: ContractBundle, dictionary: EncodingDictionary) -> FeatureRow:
    contract = bundle.contract
    return FeatureRow(
        address=bundle.address,
        source=extract_source_features(contract, bundle.source, dictionary),
        transactions=extract_transaction_features(
            bundle.scoped_normals(), bundle.internals, contract.creator
        ),
        fund_flow=frequency_vector(events_for_bundle(bundle)).freq,
        label=bundle.label,
        dictionary=dictionary,
    )


def featurize_bundles(
    bundles: Iterable[ContractBundle],
    dictionary: Optional[EncodingDictionary] = None,
    jobs: int = 1,
) -> FeatureMatrix:
    """Extract every feature family for each known contract.

    Bundles the explorer did not know, or without any scoped normal
    transaction, are skipped. Without ``dictionary`` one is fitted on the
    bundles' source metadata.
    """
    usable = []
    for bundle in bundles:
        if bundle.found and bundle.scoped_normals():
            usable.append(bundle)
        else:
            log.debug(f"Skipping {bundle.address}: no transactions to featurize")
    if dictionary is None:
        dictionary = EncodingDictionary.fit(b.source for b in usable)

    extract = partial(extract_row, dictionary=dictionary)
    if jobs > 1 and len(usable) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            rows = list(executor.map(extract, usable, chunksize=max(1, len(usable) // (jobs * 4))))
    else:
        rows = [extract(bundle) for bundle in usable]
    return assemble_matrix(rows)


def write_matrix(matrix: FeatureMatrix, path: PathLike, metadata: Optional[str] = None):
    write_csv(matrix.to_frame(), path, metadata=metadata)


def read_matrix(path: PathLike) -> FeatureMatrix:
    frame = read_csv(path, dtype={"address": str, "technique": str}, keep_default_na=False, na_values=[""])
    missing = {"address", *LABEL_COLUMNS} - set(frame.columns)
    if missing:
        raise InputError(f"{path}: not a feature matrix (missing {', '.join(sorted(missing))})")

    techniques = [str(t).strip().upper() for t in frame["technique"]]
    flags = frame["isHoneypot"].to_numpy()
    for line, (flag, technique) in enumerate(zip(flags, techniques), start=2):
        try:
            HoneypotLabel(bool(flag), Technique(technique))
        except ValueError as e:
            raise InputError(f"{path}: row {line}: {e}") from None

    features = frame.drop(columns=["address", *LABEL_COLUMNS]).astype(np.float64)
    return FeatureMatrix(
        features=features,
        addresses=[str(a) for a in frame["address"]],
        is_honeypot=flags.astype(np.int8),
        techniques=techniques,
    )
