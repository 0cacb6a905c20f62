from .cases import (
    NUM_CASES,
    Balance,
    FundFlowCase,
    Sender,
    case_by_id,
    case_column,
    case_id,
    catalog_lines,
    describe_case,
    enumerate_valid_cases,
    is_valid,
    matching_case_ids,
    parse_predicate,
)
from .events import (
    FrequencyVector,
    case_counts,
    classify_event,
    events_for_bundle,
    frequency_vector,
    frequency_vectors,
    query_cases,
    top_cases,
    write_frequency_csv,
)

__all__ = [
    "NUM_CASES",
    "Balance",
    "FundFlowCase",
    "Sender",
    "case_by_id",
    "case_column",
    "case_id",
    "catalog_lines",
    "describe_case",
    "enumerate_valid_cases",
    "is_valid",
    "matching_case_ids",
    "parse_predicate",
    "FrequencyVector",
    "case_counts",
    "classify_event",
    "events_for_bundle",
    "frequency_vector",
    "frequency_vectors",
    "query_cases",
    "top_cases",
    "write_frequency_csv",
]
