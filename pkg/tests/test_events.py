import numpy as np
import pytest

from hpscan.chain.models import HoneypotLabel, NormalTransaction
from hpscan.core.errors import InputError
from hpscan.fundflow.cases import case_by_id
from hpscan.fundflow.events import (
    balance_deltas,
    case_counts,
    classify_event,
    events_for_bundle,
    frequency_vector,
    frequency_vectors,
    query_cases,
    top_cases,
)
from hpscan.synth import generate, synth_config

from helpers import ALICE, BOB, CAROL, CONTRACT, CREATOR, ETHER, bundle, internal, normal


def _classify(tx, *internals):
    return classify_event(tx, internals, CREATOR, CONTRACT)


class TestClassifyEvent:
    def test_creation_without_value(self):
        assert _classify(normal(1, CREATOR, creation=True)) == 33

    def test_creation_with_value(self):
        assert _classify(normal(1, CREATOR, ETHER, creation=True)) == 39

    def test_creator_deposit(self):
        assert _classify(normal(2, CREATOR, ETHER)) == 83

    def test_creator_withdrawal(self):
        tx = normal(3, CREATOR)
        assert _classify(tx, internal(tx, CONTRACT, CREATOR, 2 * ETHER)) == 73

    def test_victim_deposit(self):
        assert _classify(normal(4, ALICE, ETHER)) == 201

    def test_failed_call_moves_nothing(self):
        assert _classify(normal(5, ALICE, ETHER, error=True)) == 127

    def test_forwarded_deposit(self):
        tx = normal(6, ALICE, ETHER)
        assert _classify(tx, internal(tx, CONTRACT, CAROL, ETHER)) == 207

    def test_refund_nets_to_nothing(self):
        tx = normal(7, ALICE, ETHER)
        assert _classify(tx, internal(tx, CONTRACT, ALICE, ETHER)) == 205

    def test_failed_internal_sets_error_and_rolls_back(self):
        tx = normal(8, ALICE, ETHER)
        case = case_by_id(_classify(tx, internal(tx, CONTRACT, BOB, ETHER, error=True)))
        assert case.error
        assert case.balance_contract.value == "up"
        assert not case.balance_other_positive

    def test_zero_value_call(self):
        assert _classify(normal(9, CREATOR)) == 77


def test_balance_deltas_conserve_value():
    tx = normal(1, ALICE, 5 * ETHER)
    deltas = balance_deltas(tx, [internal(tx, CONTRACT, BOB, 2 * ETHER), internal(tx, CONTRACT, CAROL, ETHER)])
    assert deltas[ALICE] == -5 * ETHER
    assert deltas[CONTRACT] == 2 * ETHER
    assert sum(deltas.values()) == 0


def test_classification_is_total_on_random_events():
    rng = np.random.default_rng(11)
    accounts = [CREATOR, ALICE, BOB, CAROL]
    for n in range(10_000):
        sender = accounts[int(rng.integers(len(accounts)))]
        creation = sender == CREATOR and bool(rng.random() < 0.1)
        tx = normal(n, sender, int(rng.integers(0, 3)) * ETHER, creation=creation,
                    error=bool(rng.random() < 0.1))
        internals = [
            internal(tx, CONTRACT, accounts[int(rng.integers(len(accounts)))],
                     int(rng.integers(0, 3)) * ETHER, error=bool(rng.random() < 0.05))
            for _ in range(int(rng.integers(0, 3)))
        ]
        case = case_by_id(_classify(tx, *internals))
        assert case.has_up() == case.has_down()


def test_internal_order_does_not_matter():
    rng = np.random.default_rng(12)
    accounts = [CREATOR, CONTRACT, ALICE, BOB, CAROL]
    for n in range(2_000):
        sender = accounts[int(rng.integers(2, len(accounts)))] if rng.random() < 0.7 else CREATOR
        tx = normal(n, sender, int(rng.integers(0, 3)) * ETHER, error=bool(rng.random() < 0.05))
        internals = [
            internal(tx, accounts[int(rng.integers(len(accounts)))], accounts[int(rng.integers(len(accounts)))],
                     int(rng.integers(0, 4)) * ETHER, error=bool(rng.random() < 0.1))
            for _ in range(int(rng.integers(2, 5)))
        ]
        expected = _classify(tx, *internals)
        assert _classify(tx, *reversed(internals)) == expected
        shuffled = [internals[i] for i in rng.permutation(len(internals))]
        assert _classify(tx, *shuffled) == expected


def test_events_follow_chain_order():
    creation = normal(1, CREATOR, creation=True, block=100)
    deposit = normal(2, CREATOR, ETHER, block=105)
    victim = normal(3, ALICE, 2 * ETHER, block=110)
    withdrawal = normal(4, CREATOR, block=130)
    b = bundle(
        [withdrawal, victim, creation, deposit],
        [internal(withdrawal, CONTRACT, CREATOR, 3 * ETHER)],
    )
    assert events_for_bundle(b) == [33, 83, 201, 73]


def test_events_ignore_transactions_to_other_contracts():
    creation = normal(1, CREATOR, creation=True)
    elsewhere = NormalTransaction(
        hash="0x" + "f" * 64, block_number=120, timestamp=0, from_address=ALICE,
        to="0x" + "e" * 40, contract_address="", value=ETHER, gas=21000, gas_used=21000,
        is_error=False,
    )
    assert events_for_bundle(bundle([creation, elsewhere])) == [33]


class TestFrequencyVector:
    def test_shares(self):
        vector = frequency_vector([83, 201, 201, 73])
        assert vector.event_count == 4
        assert vector.freq.shape == (244,)
        assert vector.freq[201] == pytest.approx(0.5)
        assert vector.freq[83] == pytest.approx(0.25)
        assert vector.freq.sum() == pytest.approx(1.0, abs=1e-12)

    def test_no_events(self):
        with pytest.raises(InputError):
            frequency_vector([])


class TestQuery:
    def test_summed_share_of_matching_cases(self):
        vectors = {CONTRACT: frequency_vector([33, 201, 205, 73])}
        assert query_cases({"sender": "other"}, vectors) == {CONTRACT: pytest.approx(0.5)}
        assert query_cases({"sender": "creator", "balanceCreator": "up"}, vectors)[CONTRACT] == pytest.approx(0.25)
        assert query_cases({"error": True}, vectors)[CONTRACT] == 0.0

    def test_non_creator_withdrawals_only_in_failed_honeypots(self):
        predicate = {"sender": "other", "balanceContract": "down", "balanceSender": "up"}

        trapped = generate(synth_config(n_honeypots=30, n_non_honeypots=0, seed=5, omit_creator_deposit=0.0))
        shares = query_cases(predicate, frequency_vectors(trapped))
        assert all(share == 0.0 for share in shares.values())

        failed = generate(synth_config(
            n_honeypots=30, n_non_honeypots=0, seed=5, omit_creator_deposit=0.0, failed_honeypot=1.0,
        ))
        shares = query_cases(predicate, frequency_vectors(failed))
        assert len(shares) == 30
        assert all(share > 0.0 for share in shares.values())


def test_case_counts_split_by_label():
    honeypot = bundle(
        [normal(1, CREATOR, creation=True), normal(2, CREATOR, ETHER, block=101), normal(3, ALICE, ETHER, block=102)],
        label=HoneypotLabel.honeypot("HSU"),
    )
    other = bundle([normal(4, CREATOR, creation=True), normal(5, BOB, block=101)])
    counts = case_counts([honeypot, other])

    assert counts.loc[83, "honeypots"] == 1
    assert counts.loc[33, "honeypots"] == 1
    assert counts.loc[33, "nonHoneypots"] == 1
    assert counts["honeypots"].sum() == 3
    assert top_cases(counts, "honeypots", n=2) == [(33, 1), (83, 1)]
