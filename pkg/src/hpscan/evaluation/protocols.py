"""Evaluation protocols: stratified cross-validation, leave-one-technique-out
and the fold-ensemble triage ranking.

Every protocol drops unusable contracts first, then fits preprocessing on
the training rows of each split only.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..chain.models import Technique
from ..core.errors import InputError
from ..features.matrix import FeatureMatrix, family_of
from ..features.preprocess import apply_preprocess, filter_usable, preprocess
from ..gbdt.model import TrainConfig, feature_importance, train
from ..utils.logger import log
from .folds import FoldAssignment, stratified_kfold
from .metrics import auroc, recall


class FeatureSet(str, Enum):
    ALL = "All"
    TRANSACTIONS = "OnlyTransactions"
    SOURCE = "OnlySourceCode"
    FUND_FLOW = "OnlyFundFlow"

    @property
    def families(self) -> Tuple[str, ...]:
        return {
            FeatureSet.ALL: ("source", "transactions", "fundflow"),
            FeatureSet.TRANSACTIONS: ("transactions",),
            FeatureSet.SOURCE: ("source",),
            FeatureSet.FUND_FLOW: ("fundflow",),
        }[self]

    @classmethod
    def parse(cls, name: "str | FeatureSet") -> "FeatureSet":
        if isinstance(name, FeatureSet):
            return name
        aliases = {"all": cls.ALL, "transactions": cls.TRANSACTIONS, "source": cls.SOURCE, "fundflow": cls.FUND_FLOW}
        key = str(name).strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        try:
            return cls(key)
        except ValueError:
            raise InputError(
                f"Unknown feature set '{name}' (expected one of {', '.join(aliases)})"
            ) from None


def _run_parallel(worker, tasks: List[tuple], jobs: int, description: str) -> list:
    """Run ``worker(*task)`` for every task, in order, on up to ``jobs`` processes."""
    results = []
    with log.progress(description, total=len(tasks)) as progress:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as executor:
                futures = [executor.submit(worker, *task) for task in tasks]
                for future in futures:
                    results.append(future.result())
                    progress.advance()
        else:
            for task in tasks:
                results.append(worker(*task))
                progress.advance()
    return results


def _fit_split(
    matrix: FeatureMatrix,
    train_rows: np.ndarray,
    config: TrainConfig,
    near_zero_variance: float,
):
    processed, scaler, report = preprocess(matrix, fit_on=train_rows, near_zero_variance=near_zero_variance)
    X = processed.X
    model = train(X[train_rows], processed.y[train_rows], config, feature_names=processed.feature_names)
    return model, processed, scaler, report


@dataclass(frozen=True)
class FoldResult:
    fold: int
    train_auroc: float
    test_auroc: float
    n_train: int
    n_test: int


@dataclass
class CvReport:
    feature_set: FeatureSet
    k: int
    seed: int
    folds: List[FoldResult]
    importance: Dict[str, float] = field(default_factory=dict)
    live_fund_flow: int = 0

    @property
    def train_mean(self) -> float:
        return float(np.mean([f.train_auroc for f in self.folds]))

    @property
    def train_std(self) -> float:
        return float(np.std([f.train_auroc for f in self.folds]))

    @property
    def test_mean(self) -> float:
        return float(np.mean([f.test_auroc for f in self.folds]))

    @property
    def test_std(self) -> float:
        return float(np.std([f.test_auroc for f in self.folds]))

    def top_features(self, n: int = 3, family: Optional[str] = None) -> List[Tuple[str, float]]:
        ranked = sorted(
            (item for item in self.importance.items() if family is None or family_of(item[0]) == family),
            key=lambda item: (-item[1], item[0]),
        )
        return ranked[:n]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"featureSet": self.feature_set.value, "fold": str(f.fold), "trainAuroc": f.train_auroc, "testAuroc": f.test_auroc}
            for f in self.folds
        ]
        rows.append({"featureSet": self.feature_set.value, "fold": "mean", "trainAuroc": self.train_mean, "testAuroc": self.test_mean})
        rows.append({"featureSet": self.feature_set.value, "fold": "std", "trainAuroc": self.train_std, "testAuroc": self.test_std})
        return pd.DataFrame(rows, columns=["featureSet", "fold", "trainAuroc", "testAuroc"])


def _cv_fold(
    matrix: FeatureMatrix,
    fold: int,
    train_rows: np.ndarray,
    test_rows: np.ndarray,
    config: TrainConfig,
    near_zero_variance: float,
) -> Tuple[FoldResult, Dict[str, float], int]:
    model, processed, _, report = _fit_split(matrix, train_rows, config, near_zero_variance)
    probabilities = model.predict_proba(processed.X)
    y = processed.y
    result = FoldResult(
        fold=fold,
        train_auroc=auroc(probabilities[train_rows], y[train_rows]),
        test_auroc=auroc(probabilities[test_rows], y[test_rows]),
        n_train=len(train_rows),
        n_test=len(test_rows),
    )
    return result, feature_importance(model).as_dict(), report.live_fund_flow


def cross_validate(
    matrix: FeatureMatrix,
    feature_set: "FeatureSet | str" = FeatureSet.ALL,
    config: Optional[TrainConfig] = None,
    k: int = 10,
    seed: int = 0,
    jobs: int = 1,
    near_zero_variance: float = 1e-12,
) -> CvReport:
    """Stratified k-fold train/test AUROC for one feature subset."""
    feature_set = FeatureSet.parse(feature_set)
    config = config or TrainConfig(seed=seed)
    usable = filter_usable(matrix).select_families(feature_set.families)
    folds = stratified_kfold(usable.y, k=k, seed=seed)
    log.evaluate(f"{feature_set.value}: {k}-fold CV on {len(usable)} contracts ({int(usable.y.sum())} honeypots)")

    tasks = [(usable, fold, tr, te, config, near_zero_variance) for fold, tr, te in folds.splits()]
    outputs = _run_parallel(_cv_fold, tasks, jobs, f"CV {feature_set.value}")

    importance: Dict[str, float] = {}
    for _, fold_importance, _ in outputs:
        for name, value in fold_importance.items():
            importance[name] = importance.get(name, 0.0) + value / k
    return CvReport(
        feature_set=feature_set,
        k=k,
        seed=seed,
        folds=[result for result, _, _ in outputs],
        importance=importance,
        live_fund_flow=int(np.mean([live for _, _, live in outputs])),
    )


@dataclass(frozen=True)
class LotoResult:
    technique: Technique
    fn: int
    tp: int
    n_train: int

    @property
    def recall(self) -> float:
        return recall([1] * self.tp + [0] * self.fn, [1] * (self.tp + self.fn))


def leave_one_technique_out(
    matrix: FeatureMatrix,
    technique: "Technique | str",
    config: Optional[TrainConfig] = None,
    threshold: float = 0.5,
    near_zero_variance: float = 1e-12,
) -> LotoResult:
    """Train on everything except one technique's honeypots, then test on them."""
    try:
        technique = Technique(str(getattr(technique, "value", technique)).upper())
    except ValueError:
        raise InputError(f"Unknown technique '{technique}'") from None
    config = config or TrainConfig()
    usable = filter_usable(matrix)
    held_out = np.array([t == technique.value for t in usable.techniques]) & (usable.y == 1)
    if technique is Technique.NONE or not held_out.any():
        raise InputError(f"No honeypots labeled {technique.value} in the matrix")

    train_rows = np.flatnonzero(~held_out)
    test_rows = np.flatnonzero(held_out)
    model, processed, _, _ = _fit_split(usable, train_rows, config, near_zero_variance)
    probabilities = model.predict_proba(processed.X[test_rows])
    tp = int((probabilities > threshold).sum())
    result = LotoResult(technique=technique, fn=len(test_rows) - tp, tp=tp, n_train=len(train_rows))
    log.evaluate(f"{technique.long_name}: recall {result.recall:.3f} ({tp}/{len(test_rows)})")
    return result


def techniques_present(matrix: FeatureMatrix) -> List[Technique]:
    return sorted(
        {Technique(t) for t, y in zip(matrix.techniques, matrix.is_honeypot) if y == 1},
        key=lambda t: t.value,
    )


def leave_one_technique_out_all(
    matrix: FeatureMatrix,
    config: Optional[TrainConfig] = None,
    threshold: float = 0.5,
    jobs: int = 1,
    near_zero_variance: float = 1e-12,
) -> List[LotoResult]:
    tasks = [
        (matrix, technique, config, threshold, near_zero_variance)
        for technique in techniques_present(filter_usable(matrix))
    ]
    return _run_parallel(leave_one_technique_out, tasks, jobs, "Leave-one-technique-out")


@dataclass
class TriageRanking:
    """Contracts sorted by descending mean honeypot probability over the fold models.

    ``fold_probabilities`` keeps each fold model's output per ranked row.
    ``is_labeled`` is true for every row of the training matrix, whatever its
    class; only pool rows are unlabeled. ``std`` is the disagreement between
    fold models and can be capped with ``filter(max_std=...)``.
    """

    addresses: List[str]
    mean: np.ndarray
    std: np.ndarray
    is_labeled: np.ndarray
    labels: List[str]
    fold_probabilities: np.ndarray
    k: int
    seed: int

    def __len__(self) -> int:
        return len(self.addresses)

    def filter(
        self,
        unlabeled_only: bool = False,
        top: Optional[int] = None,
        max_std: Optional[float] = None,
    ) -> "TriageRanking":
        keep = np.ones(len(self), dtype=bool)
        if unlabeled_only:
            keep &= ~self.is_labeled
        if max_std is not None:
            if max_std < 0:
                raise InputError(f"max_std must be >= 0, got {max_std}")
            keep &= self.std <= max_std
        rows = np.flatnonzero(keep)
        if top is not None:
            rows = rows[:top]
        return TriageRanking(
            addresses=[self.addresses[i] for i in rows],
            mean=self.mean[rows],
            std=self.std[rows],
            is_labeled=self.is_labeled[rows],
            labels=[self.labels[i] for i in rows],
            fold_probabilities=self.fold_probabilities[:, rows],
            k=self.k,
            seed=self.seed,
        )

    def rank_of(self, address: str) -> int:
        return self.addresses.index(address) + 1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "rank": np.arange(1, len(self) + 1),
            "address": self.addresses,
            "meanProb": self.mean,
            "stdProb": self.std,
            "isLabeled": self.is_labeled.astype(np.int8),
            "label": self.labels,
        })


def _triage_fold(
    matrix: FeatureMatrix,
    train_rows: np.ndarray,
    pool: Optional[FeatureMatrix],
    config: TrainConfig,
    near_zero_variance: float,
) -> np.ndarray:
    model, processed, scaler, report = _fit_split(matrix, train_rows, config, near_zero_variance)
    scores = [model.predict_proba(processed.X)]
    if pool is not None and len(pool):
        scores.append(model.predict_proba(apply_preprocess(pool, scaler, report).X))
    return np.concatenate(scores)


def triage_rank(
    matrix: FeatureMatrix,
    config: Optional[TrainConfig] = None,
    k: int = 10,
    seed: int = 0,
    pool: Optional[FeatureMatrix] = None,
    jobs: int = 1,
    near_zero_variance: float = 1e-12,
) -> TriageRanking:
    """Score every contract with each of the k fold-complement models.

    ``pool`` adds contracts that take no part in training (they are scored
    only); pool rows whose address also appears in ``matrix`` are ignored.
    """
    config = config or TrainConfig(seed=seed)
    usable = filter_usable(matrix)
    if pool is not None:
        known = set(usable.addresses)
        pool = filter_usable(pool)
        fresh = [i for i, a in enumerate(pool.addresses) if a not in known]
        if len(fresh) < len(pool):
            log.warning(f"Ignoring {len(pool) - len(fresh)} pool contracts already in the training matrix")
        pool = pool.take(fresh)

    folds: FoldAssignment = stratified_kfold(usable.y, k=k, seed=seed)
    tasks = [(usable, tr, pool, config, near_zero_variance) for _, tr, _ in folds.splits()]
    probabilities = np.vstack(_run_parallel(_triage_fold, tasks, jobs, "Triage ensemble"))

    addresses = list(usable.addresses)
    is_labeled = np.ones(len(usable), dtype=bool)
    labels = list(usable.techniques)
    if pool is not None:
        addresses += pool.addresses
        is_labeled = np.concatenate([is_labeled, np.zeros(len(pool), dtype=bool)])
        labels += pool.techniques

    mean = probabilities.mean(axis=0)
    std = probabilities.std(axis=0)
    order = np.lexsort((np.array(addresses, dtype=str), -mean))
    return TriageRanking(
        addresses=[addresses[i] for i in order],
        mean=mean[order],
        std=std[order],
        is_labeled=is_labeled[order],
        labels=[labels[i] for i in order],
        fold_probabilities=probabilities[:, order],
        k=k,
        seed=seed,
    )


def evaluate_feature_sets(
    matrix: FeatureMatrix,
    feature_sets: Iterable["FeatureSet | str"],
    config: Optional[TrainConfig] = None,
    k: int = 10,
    seed: int = 0,
    jobs: int = 1,
    near_zero_variance: float = 1e-12,
) -> List[CvReport]:
    return [
        cross_validate(matrix, fs, config, k=k, seed=seed, jobs=jobs, near_zero_variance=near_zero_variance)
        for fs in feature_sets
    ]
