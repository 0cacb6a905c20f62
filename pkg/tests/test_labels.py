import pytest

from hpscan.chain.labels import (
    bytecode_hash,
    count_source_lines,
    load_seed_labels,
    parse_compiler_version,
    propagate_labels,
)
from hpscan.chain.models import (
    NOT_HONEYPOT,
    Contract,
    HoneypotLabel,
    Technique,
)
from hpscan.core.errors import InputError, LabelConflictError


def _contract(n: int, bytecode: bytes) -> Contract:
    return Contract(
        address="0x" + format(n, "040x"),
        creator="0x" + "c" * 40,
        bytecode=bytecode,
        creation_block=1,
        creation_tx_hash="0x" + format(n, "064x"),
    )


@pytest.mark.parametrize("raw, expected", [
    ("v0.4.19+commit.c4cbbb05", ("0", "4", "19+commit.c4cbbb05")),
    ("v0.5.0", ("0", "5", "0")),
    ("0.6.12+commit.27d51765", ("0", "6", "12+commit.27d51765")),
    ("", ("absent", "absent", "absent")),
    ("vyper:0.2.8", ("absent", "absent", "absent")),
    ("v0.4", ("absent", "absent", "absent")),
])
def test_parse_compiler_version(raw, expected):
    assert parse_compiler_version(raw) == expected


def test_count_source_lines():
    assert count_source_lines("") == 0
    assert count_source_lines("pragma solidity ^0.4.19;\ncontract A {}\n") == 2
    assert count_source_lines("contract A {}") == 1
    assert count_source_lines("a\r\nb\r\n") == 2


def test_count_source_lines_splits_on_newline_only():
    assert count_source_lines("// page\fbreak\ncontract A {}\n") == 2
    assert count_source_lines("string s = \"a\u2028b\x1cc\";\n") == 1


def test_bytecode_hash_of_empty_input():
    assert bytecode_hash(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_bytecode_hash_distinguishes_single_byte():
    code = bytes(range(200))
    changed = code[:50] + b"\xff" + code[51:]
    assert bytecode_hash(code) == bytecode_hash(bytes(code))
    assert bytecode_hash(code) != bytecode_hash(changed)


def test_propagate_labels_to_whole_group():
    shared = b"\x60\x80\x01"
    contracts = [_contract(1, shared), _contract(2, shared), _contract(3, shared), _contract(4, b"\x60\x80\x02")]
    labels = propagate_labels(contracts, {contracts[1].address: HoneypotLabel.honeypot("HSU")})

    assert set(labels) == {c.address for c in contracts}
    for contract in contracts[:3]:
        assert labels[contract.address] == HoneypotLabel(True, Technique.HSU)
    assert labels[contracts[3].address] == NOT_HONEYPOT


def test_propagate_labels_accepts_mixed_case_seed_addresses():
    contracts = [_contract(10, b"\x01")]
    seed = contracts[0].address.upper().replace("0X", "0x")
    labels = propagate_labels(contracts, {seed: HoneypotLabel.honeypot(Technique.BD)})
    assert labels[contracts[0].address].technique is Technique.BD


def test_conflicting_seeds_raise():
    shared = b"\x60\x80"
    contracts = [_contract(1, shared), _contract(2, shared)]
    seeds = {
        contracts[0].address: HoneypotLabel.honeypot("HSU"),
        contracts[1].address: HoneypotLabel.honeypot("BD"),
    }
    with pytest.raises(LabelConflictError) as excinfo:
        propagate_labels(contracts, seeds)
    assert contracts[0].address in str(excinfo.value)
    assert contracts[1].address in str(excinfo.value)


def test_inconsistent_label_rejected():
    with pytest.raises(ValueError):
        HoneypotLabel(True, Technique.NONE)
    with pytest.raises(ValueError):
        HoneypotLabel(False, Technique.BD)


def test_load_seed_labels(tmp_path):
    path = tmp_path / "seeds.csv"
    path.write_text(
        "address,technique\n"
        f"0x{'A' * 40},hsu\n"
        f"0x{'b' * 40},NONE\n"
    )
    seeds = load_seed_labels(path)
    assert seeds["0x" + "a" * 40] == HoneypotLabel.honeypot("HSU")
    assert seeds["0x" + "b" * 40] == NOT_HONEYPOT


def test_load_seed_labels_rejects_unknown_technique(tmp_path):
    path = tmp_path / "seeds.csv"
    path.write_text(f"address,technique\n0x{'a' * 40},XYZ\n")
    with pytest.raises(InputError, match="line 2"):
        load_seed_labels(path)
