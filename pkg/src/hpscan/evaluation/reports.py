from typing import Iterable, List, Optional

import pandas as pd

from .. import __version__
from ..chain.models import ABSENT, ContractBundle
from ..features.transactions import WEI_PER_ETHER
from ..utils.utils import PathLike, metadata_line, write_csv
from .protocols import CvReport, LotoResult, TriageRanking


def cv_frame(reports: Iterable[CvReport]) -> pd.DataFrame:
    frames = [report.to_frame() for report in reports]
    if not frames:
        return pd.DataFrame(columns=["featureSet", "fold", "trainAuroc", "testAuroc"])
    return pd.concat(frames, ignore_index=True)


def loto_frame(results: Iterable[LotoResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"technique": r.technique.long_name, "FN": r.fn, "TP": r.tp, "recall": r.recall}
            for r in results
        ],
        columns=["technique", "FN", "TP", "recall"],
    )


def write_cv_report(reports: Iterable[CvReport], path: PathLike, seed: Optional[int], k: int):
    write_csv(cv_frame(reports), path, metadata=metadata_line(__version__, seed, k=k, report="cv"))


def write_loto_report(results: Iterable[LotoResult], path: PathLike, seed: Optional[int], threshold: float):
    write_csv(
        loto_frame(results),
        path,
        metadata=metadata_line(__version__, seed, threshold=threshold, report="loto"),
    )


def write_triage(ranking: TriageRanking, path: PathLike):
    write_csv(
        ranking.to_frame(),
        path,
        metadata=metadata_line(__version__, ranking.seed, k=ranking.k, report="triage"),
    )


def _class_name(bundle: ContractBundle) -> str:
    return "honeypots" if bundle.label.is_honeypot else "nonHoneypots"


def class_summary(bundles: Iterable[ContractBundle]) -> pd.DataFrame:
    """Per-class medians and means of source size, transaction count and received value.

    Source lines only count contracts with verified source; value is the ether
    sent to the contract by its normal transactions.
    """
    rows = []
    for bundle in bundles:
        if not bundle.found:
            continue
        normals = bundle.scoped_normals()
        rows.append({
            "class": _class_name(bundle),
            "sourceLines": bundle.source.source_line_count if bundle.source.has_source_code else float("nan"),
            "transactions": len(normals),
            "valueEther": sum(tx.value for tx in normals if not tx.is_error) / WEI_PER_ETHER,
        })
    columns = ["class", "contracts"] + [
        f"{stat}{name}" for name in ("SourceLines", "Transactions", "ValueEther") for stat in ("median", "mean")
    ]
    if not rows:
        return pd.DataFrame(columns=columns)
    frame = pd.DataFrame(rows)
    grouped = frame.groupby("class", sort=True)
    summary = pd.DataFrame({
        "contracts": grouped.size(),
        "medianSourceLines": grouped["sourceLines"].median(),
        "meanSourceLines": grouped["sourceLines"].mean(),
        "medianTransactions": grouped["transactions"].median(),
        "meanTransactions": grouped["transactions"].mean(),
        "medianValueEther": grouped["valueEther"].median(),
        "meanValueEther": grouped["valueEther"].mean(),
    })
    return summary.reset_index()[columns]


def compiler_counts(bundles: Iterable[ContractBundle]) -> pd.DataFrame:
    """Contracts per technique (rows) and compiler release (columns).

    Commit suffixes are dropped; contracts without a parseable compiler
    version fall in the ``absent`` column.
    """
    rows: List[dict] = []
    for bundle in bundles:
        if not bundle.found:
            continue
        source = bundle.source
        version = ABSENT
        if source.has_source_code and source.compiler_minor != ABSENT:
            version = source.compiler_version_raw.strip().lstrip("v").split("+")[0]
        rows.append({"technique": bundle.label.technique.value, "compiler": version})
    if not rows:
        return pd.DataFrame(columns=["technique"])
    frame = pd.DataFrame(rows)
    table = pd.crosstab(frame["technique"], frame["compiler"])
    table.columns.name = None
    return table.reset_index()
