from .folds import FoldAssignment, stratified_kfold
from .metrics import auroc, recall
from .protocols import (
    CvReport,
    FeatureSet,
    FoldResult,
    LotoResult,
    TriageRanking,
    cross_validate,
    evaluate_feature_sets,
    leave_one_technique_out,
    leave_one_technique_out_all,
    techniques_present,
    triage_rank,
)
from .reports import (
    class_summary,
    compiler_counts,
    cv_frame,
    loto_frame,
    write_cv_report,
    write_loto_report,
    write_triage,
)

__all__ = [
    "FoldAssignment",
    "stratified_kfold",
    "auroc",
    "recall",
    "CvReport",
    "FeatureSet",
    "FoldResult",
    "LotoResult",
    "TriageRanking",
    "cross_validate",
    "evaluate_feature_sets",
    "leave_one_technique_out",
    "leave_one_technique_out_all",
    "techniques_present",
    "triage_rank",
    "class_summary",
    "compiler_counts",
    "cv_frame",
    "loto_frame",
    "write_cv_report",
    "write_loto_report",
    "write_triage",
]
