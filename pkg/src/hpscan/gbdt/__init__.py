from .loss import log_loss, logistic_grad_hess, sigmoid, split_gain
from .model import (
    GbdtModel,
    ImportanceReport,
    TrainConfig,
    feature_importance,
    load_model,
    model_to_dict,
    predict_proba,
    save_model,
    train,
)
from .tree import RegressionTree

__all__ = [
    "log_loss",
    "logistic_grad_hess",
    "sigmoid",
    "split_gain",
    "GbdtModel",
    "ImportanceReport",
    "TrainConfig",
    "feature_importance",
    "load_model",
    "model_to_dict",
    "predict_proba",
    "save_model",
    "train",
    "RegressionTree",
]
