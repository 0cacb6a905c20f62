import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import InputError
from ..utils.logger import log
from ..utils.utils import PathLike, open_text
from .loss import log_loss, logistic_grad_hess, sigmoid
from .tree import RegressionTree, TreeBuilder

MODEL_FORMAT = "hpscan-gbdt"
MODEL_VERSION = 1


class TrainConfig(BaseModel):
    """Boosting hyperparameters.

    ``scale_pos_weight`` left unset means negatives/positives of the training
    split. ``seed`` is recorded for reproducibility; training itself draws no
    random numbers (no row or column subsampling).
    ``max_depth`` is capped at 14, so a tree has at most 2**14 leaves and its
    node arrays stay below 2**15 entries.
    """

    model_config = ConfigDict(extra="forbid")

    n_rounds: int = Field(default=100, ge=0)
    learning_rate: float = Field(default=0.1, gt=0)
    max_depth: int = Field(default=6, ge=0, le=14)
    l2_lambda: float = Field(default=1.0, ge=0)
    gain_gamma: float = Field(default=0.0, ge=0)
    min_child_weight: float = Field(default=1.0, ge=0)
    scale_pos_weight: Optional[float] = Field(default=None, gt=0)
    seed: int = 0


@dataclass
class GbdtModel:
    trees: List[RegressionTree]
    base_score: float
    config: TrainConfig
    feature_names: List[str]
    scale_pos_weight: float
    train_loss: List[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise InputError(f"Model expects {self.n_features} columns, got {X.shape[1]}")
        out = np.full(len(X), self.base_score)
        for tree in self.trees:
            out += tree.predict(X)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin(X))

    def predict(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) > threshold).astype(np.int8)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputError(f"Expected a 2-D feature matrix, got shape {X.shape}")
    return X


def train(
    X: np.ndarray,
    y: np.ndarray,
    config: Optional[TrainConfig] = None,
    feature_names: Optional[Sequence[str]] = None,
) -> GbdtModel:
    """Fit a boosted ensemble of regression trees on 0/1 labels."""
    config = config or TrainConfig()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if len(y) != len(X):
        raise InputError(f"{len(X)} rows but {len(y)} labels")
    if not np.isfinite(X).all():
        raise InputError("Feature matrix contains NaN or infinite values")
    if not np.isin(y, (0.0, 1.0)).all():
        raise InputError("Labels must be 0 or 1")
    positives = int(y.sum())
    negatives = len(y) - positives
    if positives == 0 or negatives == 0:
        raise InputError("Training needs at least one sample of each class")
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise InputError(f"{len(names)} feature names for {X.shape[1]} columns")

    if config.scale_pos_weight is None:
        spw = negatives / positives
        # weighted classes balance exactly
        base_score = 0.0
    else:
        spw = config.scale_pos_weight
        base_score = math.log(spw * positives / negatives)
    weight = np.where(y == 1.0, spw, 1.0)

    builder = TreeBuilder(
        X,
        max_depth=config.max_depth,
        learning_rate=config.learning_rate,
        l2_lambda=config.l2_lambda,
        gain_gamma=config.gain_gamma,
        min_child_weight=config.min_child_weight,
    )
    margin = np.full(len(y), base_score)
    losses = [log_loss(margin, y, weight)]
    trees: List[RegressionTree] = []
    for round_index in range(config.n_rounds):
        g, h = logistic_grad_hess(margin, y, weight)
        tree, leaves = builder.build(g, h)
        trees.append(tree)
        margin = margin + tree.value[leaves]
        losses.append(log_loss(margin, y, weight))
        if log.debug_mode and (round_index + 1) % 10 == 0:
            log.debug(f"round {round_index + 1}: weighted log-loss {losses[-1]:.6f}")

    return GbdtModel(
        trees=trees,
        base_score=base_score,
        config=config,
        feature_names=names,
        scale_pos_weight=spw,
        train_loss=losses,
    )


def predict_proba(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    return model.predict_proba(X)


@dataclass(frozen=True)
class ImportanceReport:
    """Total split gain per feature, normalized to sum 1 (all zero without splits)."""

    feature_names: Tuple[str, ...]
    importance: np.ndarray

    @property
    def empty(self) -> bool:
        return not self.importance.any()

    def as_dict(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(self.feature_names, self.importance) if v > 0}

    def top(self, n: int = 3, columns: Optional[Callable[[str], bool]] = None) -> List[Tuple[str, float]]:
        """The ``n`` most important features, optionally restricted by a column predicate."""
        ranked = sorted(
            (
                (name, float(v))
                for name, v in zip(self.feature_names, self.importance)
                if v > 0 and (columns is None or columns(name))
            ),
            key=lambda item: (-item[1], item[0]),
        )
        return ranked[:n]


def feature_importance(model: GbdtModel) -> ImportanceReport:
    totals = np.zeros(model.n_features)
    for tree in model.trees:
        nodes = tree.split_nodes
        np.add.at(totals, tree.feature[nodes], tree.gain[nodes])
    total = totals.sum()
    if total <= 0:
        log.warning("Model has no splits; feature importance is empty")
        return ImportanceReport(tuple(model.feature_names), np.zeros(model.n_features))
    return ImportanceReport(tuple(model.feature_names), totals / total)


def model_to_dict(model: GbdtModel) -> Dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": model.config.model_dump(),
        "baseScore": model.base_score,
        "scalePosWeight": model.scale_pos_weight,
        "featureNames": list(model.feature_names),
        "trainLoss": list(model.train_loss),
        "trees": [tree.to_dict() for tree in model.trees],
    }


def model_from_dict(data: Dict) -> GbdtModel:
    if data.get("format") != MODEL_FORMAT:
        raise InputError(f"Not an {MODEL_FORMAT} model document")
    if data.get("version") != MODEL_VERSION:
        raise InputError(f"Unsupported model version {data.get('version')} (expected {MODEL_VERSION})")
    trees = [RegressionTree.from_dict(t) for t in data["trees"]]
    names = list(data["featureNames"])
    for tree in trees:
        splits = tree.feature[tree.split_nodes]
        if len(splits) and (splits.min() < 0 or splits.max() >= len(names)):
            raise InputError("Model references a feature index outside its feature list")
    return GbdtModel(
        trees=trees,
        base_score=float(data["baseScore"]),
        config=TrainConfig.model_validate(data["config"]),
        feature_names=names,
        scale_pos_weight=float(data["scalePosWeight"]),
        train_loss=[float(v) for v in data.get("trainLoss", [])],
    )


def save_model(model: GbdtModel, path: PathLike):
    with open_text(path, "w") as f:
        json.dump(model_to_dict(model), f)


def load_model(path: PathLike) -> GbdtModel:
    with open_text(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"{path}: invalid model JSON: {e}") from None
    return model_from_dict(data)
