"""The fund-flow case model: eight variables, 244 valid combinations.

Case IDs come from walking the mixed-radix space in the fixed variable order
below, collapsing ``balanceSender`` to ``n/a`` when the creator is the
sender, and numbering the valid tuples sequentially. The numbering is part
of the feature column names and must never change.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Any, Dict, List, Mapping, Tuple

from ..core.errors import InputError

NUM_CASES = 244


class Sender(str, Enum):
    CREATOR = "creator"
    OTHER = "other"


class Balance(str, Enum):
    UP = "up"
    UNCHANGED = "unchanged"
    DOWN = "down"
    NOT_APPLICABLE = "n/a"


SENDERS = (Sender.CREATOR, Sender.OTHER)
FLAGS = (True, False)
BALANCES = (Balance.UP, Balance.UNCHANGED, Balance.DOWN)

# Camel-case names as they appear in column names and query predicates.
VARIABLES = {
    "sender": "sender",
    "creation": "creation",
    "error": "error",
    "balanceCreator": "balance_creator",
    "balanceContract": "balance_contract",
    "balanceSender": "balance_sender",
    "balanceOtherPositive": "balance_other_positive",
    "balanceOtherNegative": "balance_other_negative",
}


@dataclass(frozen=True)
class FundFlowCase:
    sender: Sender
    creation: bool
    error: bool
    balance_creator: Balance
    balance_contract: Balance
    balance_sender: Balance
    balance_other_positive: bool
    balance_other_negative: bool

    def has_up(self) -> bool:
        return (
            Balance.UP in (self.balance_creator, self.balance_contract, self.balance_sender)
            or self.balance_other_positive
        )

    def has_down(self) -> bool:
        return (
            Balance.DOWN in (self.balance_creator, self.balance_contract, self.balance_sender)
            or self.balance_other_negative
        )

    def as_dict(self) -> Dict[str, Any]:
        return {camel: getattr(self, attr) for camel, attr in VARIABLES.items()}


def is_valid(case: FundFlowCase) -> bool:
    """True iff the case respects every structural constraint."""
    if case.creation and case.sender is not Sender.CREATOR:
        return False
    if (case.balance_sender is Balance.NOT_APPLICABLE) != (case.sender is Sender.CREATOR):
        return False
    if Balance.NOT_APPLICABLE in (case.balance_creator, case.balance_contract):
        return False
    return case.has_up() == case.has_down()


def raw_cases() -> List[FundFlowCase]:
    """All 864 raw assignments, with n/a substituted for creator senders.

    Creator tuples repeat three times after the substitution; callers that
    want the collapsed space deduplicate.
    """
    out = []
    for values in product(SENDERS, FLAGS, FLAGS, BALANCES, BALANCES, BALANCES, FLAGS, FLAGS):
        sender, creation, error, creator_b, contract_b, sender_b, pos, neg = values
        if sender is Sender.CREATOR:
            sender_b = Balance.NOT_APPLICABLE
        out.append(FundFlowCase(sender, creation, error, creator_b, contract_b, sender_b, pos, neg))
    return out


@lru_cache(maxsize=None)
def enumerate_valid_cases() -> Tuple[Tuple[int, FundFlowCase], ...]:
    """Every valid case paired with its canonical ID, in ID order."""
    valid = [case for case in dict.fromkeys(raw_cases()) if is_valid(case)]
    return tuple(enumerate(valid))


@lru_cache(maxsize=None)
def _index() -> Dict[FundFlowCase, int]:
    return {case: case_id for case_id, case in enumerate_valid_cases()}


def case_id(case: FundFlowCase) -> int:
    try:
        return _index()[case]
    except KeyError:
        raise InputError(f"Not a valid fund-flow case: {case}") from None


def case_by_id(case_id: int) -> FundFlowCase:
    if not 0 <= case_id < NUM_CASES:
        raise InputError(f"Fund-flow case ID must be in [0, {NUM_CASES - 1}], got {case_id}")
    return enumerate_valid_cases()[case_id][1]


def case_column(case_id: int) -> str:
    return f"fundFlowCase{case_id}"


def describe_case(case: FundFlowCase) -> str:
    """Compact description: false flags, unchanged balances and n/a are omitted."""
    words = {Balance.UP: "positive", Balance.DOWN: "negative"}
    parts = [f"sender={case.sender.value}"]
    for camel, value in list(case.as_dict().items())[1:]:
        if value is True:
            parts.append(f"{camel}=True")
        elif value in words:
            parts.append(f"{camel}={words[value]}")
    return ", ".join(parts)


def catalog_lines() -> List[str]:
    """One ``<id>\\t<description>`` line per case."""
    return [f"{i}\t{describe_case(case)}" for i, case in enumerate_valid_cases()]


_TRUE_WORDS = {"yes", "true", "1", "y"}
_FALSE_WORDS = {"no", "false", "0", "n"}
_BALANCE_WORDS = {
    "up": Balance.UP,
    "positive": Balance.UP,
    "unchanged": Balance.UNCHANGED,
    "none": Balance.UNCHANGED,
    "down": Balance.DOWN,
    "negative": Balance.DOWN,
    "n/a": Balance.NOT_APPLICABLE,
    "na": Balance.NOT_APPLICABLE,
}


def parse_predicate(raw: Mapping[str, Any]) -> Dict[str, Any]:
    """Normalize a partial assignment such as ``{"sender": "other", "balanceSender": "up"}``.

    Keys are the camel-case variable names; values may be enum members,
    booleans or their textual spellings.
    """
    predicate: Dict[str, Any] = {}
    for key, value in raw.items():
        if key not in VARIABLES:
            raise InputError(
                f"Unknown fund-flow variable '{key}' (expected one of {', '.join(VARIABLES)})"
            )
        text = value.value if isinstance(value, Enum) else str(value).strip().lower()
        if key == "sender":
            try:
                predicate[key] = Sender(text)
            except ValueError:
                raise InputError(f"sender must be creator or other, got {value!r}") from None
        elif key.startswith("balance") and key not in ("balanceOtherPositive", "balanceOtherNegative"):
            if text not in _BALANCE_WORDS:
                raise InputError(f"{key} must be up, unchanged, down or n/a, got {value!r}")
            predicate[key] = _BALANCE_WORDS[text]
        elif isinstance(value, bool):
            predicate[key] = value
        elif text in _TRUE_WORDS:
            predicate[key] = True
        elif text in _FALSE_WORDS:
            predicate[key] = False
        else:
            raise InputError(f"{key} must be yes or no, got {value!r}")
    return predicate


def case_matches(case: FundFlowCase, predicate: Mapping[str, Any]) -> bool:
    values = case.as_dict()
    return all(values[key] == wanted for key, wanted in predicate.items())


def matching_case_ids(predicate: Mapping[str, Any]) -> List[int]:
    predicate = parse_predicate(predicate)
    return [i for i, case in enumerate_valid_cases() if case_matches(case, predicate)]
