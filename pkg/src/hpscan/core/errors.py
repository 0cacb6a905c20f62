"""Exception types shared across the pipeline.

Every error carries the process exit code the CLI reports for it:
1 for bad input (files, payloads, configuration), 2 for internal failures.
"""

from typing import Iterable, Sequence


class HpscanError(Exception):
    """Base class for pipeline errors."""

    exit_code = 2


class InputError(HpscanError, ValueError):
    """Something the user supplied is missing, malformed or inconsistent."""

    exit_code = 1


class RetryableFetchError(HpscanError):
    """The explorer API kept failing after every retry."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (gave up after {attempts} attempts)")
        self.attempts = attempts


class PayloadError(InputError):
    """An API or fixture record could not be parsed."""

    def __init__(self, field: str, detail: str, record_id: str = ""):
        where = f" in record {record_id}" if record_id else ""
        super().__init__(f"Malformed field '{field}'{where}: {detail}")
        self.field = field
        self.record_id = record_id


class LabelConflictError(InputError):
    """Two seed labels disagree on contracts with identical bytecode."""

    def __init__(self, bytecode_hash: str, addresses: Sequence[str]):
        joined = ", ".join(addresses)
        super().__init__(
            f"Conflicting seed labels for bytecode {bytecode_hash}: {joined}"
        )
        self.bytecode_hash = bytecode_hash
        self.addresses = tuple(addresses)


class DatasetVersionError(InputError):
    """A dataset file has an unknown format or version header."""


class CorruptRecordError(InputError):
    """A dataset line could not be decoded."""

    def __init__(self, path: str, line_number: int, detail: str):
        super().__init__(f"{path}: corrupt record on line {line_number}: {detail}")
        self.path = path
        self.line_number = line_number


class DictionaryMismatchError(InputError):
    """Feature rows were built with different encoding dictionaries."""


class ConfigValidationError(InputError):
    """Configuration failed validation; lists every violated field."""

    def __init__(self, violations: Iterable[str]):
        self.violations = list(violations)
        super().__init__(
            "Invalid configuration:\n" + "\n".join(f"- {v}" for v in self.violations)
        )
