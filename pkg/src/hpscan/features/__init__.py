from .matrix import (
    FAMILIES,
    FeatureMatrix,
    FeatureRow,
    assemble_matrix,
    family_of,
    featurize_bundles,
    read_matrix,
    write_matrix,
)
from .preprocess import (
    ColumnReport,
    ScalerParams,
    apply_preprocess,
    filter_usable,
    load_preprocess,
    preprocess,
    save_preprocess,
)
from .source import EncodingDictionary, extract_source_features
from .transactions import extract_transaction_features, other_sender_ratio

__all__ = [
    "FAMILIES",
    "FeatureMatrix",
    "FeatureRow",
    "assemble_matrix",
    "family_of",
    "featurize_bundles",
    "read_matrix",
    "write_matrix",
    "ColumnReport",
    "ScalerParams",
    "apply_preprocess",
    "filter_usable",
    "load_preprocess",
    "preprocess",
    "save_preprocess",
    "EncodingDictionary",
    "extract_source_features",
    "extract_transaction_features",
    "other_sender_ratio",
]
