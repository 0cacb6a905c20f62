from pathlib import Path
from unittest.mock import Mock

import json

import pytest
import requests

from hpscan.chain.client import (
    EtherscanClient,
    FixtureBackend,
    HttpBackend,
    RateLimiter,
    parse_internal,
    parse_normal,
)
from hpscan.core.errors import InputError, PayloadError, RetryableFetchError

from hpscan.fundflow.events import balance_deltas, events_for_bundle

from helpers import CONTRACT, CREATOR, ETHER

FIXTURES = Path(__file__).parent / "fixtures"


def _record(n: int, block: int = 100, **overrides):
    record = {
        "blockNumber": str(block),
        "timeStamp": str(1_500_000_000 + block),
        "hash": "0x" + format(n, "064x"),
        "from": "0x" + "1" * 40,
        "to": CONTRACT,
        "value": "0",
        "gas": "100000",
        "gasUsed": "50000",
        "isError": "0",
        "contractAddress": "",
    }
    record.update(overrides)
    return record


def _response(status_code=200, payload=None, headers=None):
    response = Mock(status_code=status_code, headers=headers or {})
    response.json = Mock(return_value=payload if payload is not None else {"status": "1", "result": []})
    return response


def _http_backend(*responses, max_retries=5):
    session = Mock()
    session.get = Mock(side_effect=list(responses))
    sleep = Mock()
    backend = HttpBackend("https://explorer.test/api", api_key="KEY", max_retries=max_retries,
                          backoff=0.5, session=session, sleep=sleep)
    backend.limiter = Mock()
    return backend, session, sleep


class TestFixtureBackend:
    def test_fetches_full_bundle(self):
        client = EtherscanClient(FixtureBackend(FIXTURES))
        bundle = client.fetch_contract_bundle(CONTRACT.upper().replace("0X", "0x"))

        assert bundle.found
        assert len(bundle.normals) == 3
        assert len(bundle.internals) == 1
        assert bundle.contract.creator == CREATOR
        assert bundle.contract.creation_block == 100
        assert bundle.contract.bytecode == bytes.fromhex("6080604052")
        assert bundle.normals[1].value == 2 * ETHER
        assert bundle.internals[0].value == 3 * ETHER
        assert bundle.source.source_line_count == 3
        assert bundle.source.compiler_minor == "4"
        assert bundle.source.compiler_runs == 0
        assert bundle.source.library is None

    def test_unknown_address_is_not_found(self):
        client = EtherscanClient(FixtureBackend(FIXTURES))
        bundle = client.fetch_contract_bundle("0x" + "9" * 40)
        assert not bundle.found
        assert bundle.normals == ()
        assert bundle.internals == ()

    def test_empty_bytecode_kept(self, tmp_path):
        fixture = (FIXTURES / f"{CONTRACT}.json").read_text().replace('"0x6080604052"', '"0x"')
        (tmp_path / f"{CONTRACT}.json").write_text(fixture)
        bundle = EtherscanClient(FixtureBackend(tmp_path)).fetch_contract_bundle(CONTRACT)
        assert bundle.found
        assert bundle.contract.bytecode == b""

    def test_fetching_twice_gives_equal_bundles(self):
        client = EtherscanClient(FixtureBackend(FIXTURES))
        assert client.fetch_contract_bundle(CONTRACT) == client.fetch_contract_bundle(CONTRACT)

    def test_factory_creation_value_counted_once(self, tmp_path):
        factory = "0x" + "f" * 40
        create_hash = "0x" + format(9, "064x")
        fixture = json.loads((FIXTURES / f"{CONTRACT}.json").read_text())
        fixture["txlist"] = []
        fixture["txlistinternal"] = [{
            "blockNumber": "120", "timeStamp": "1500001680", "hash": create_hash,
            "from": factory, "to": "", "contractAddress": CONTRACT, "value": "1000",
            "gas": "500000", "gasUsed": "300000", "isError": "0", "traceId": "0",
        }]
        fixture["getcontractcreation"] = [{"contractAddress": CONTRACT, "contractCreator": CREATOR, "txHash": create_hash}]
        (tmp_path / f"{CONTRACT}.json").write_text(json.dumps(fixture))

        bundle = EtherscanClient(FixtureBackend(tmp_path)).fetch_contract_bundle(CONTRACT)

        (creation,) = bundle.normals
        assert creation.hash == create_hash
        assert creation.value == 1000
        assert bundle.internals == ()
        assert balance_deltas(creation, bundle.internals)[CONTRACT] == 1000
        assert events_for_bundle(bundle) == [39]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(InputError):
            FixtureBackend(tmp_path / "nowhere")

    def test_malformed_address(self):
        with pytest.raises(InputError):
            EtherscanClient(FixtureBackend(FIXTURES)).fetch_contract_bundle("0x1234")


def test_pagination_deduplicates_page_overlap():
    a, b, c = _record(1, 100), _record(2, 101), _record(3, 102)
    backend = Mock()
    backend.request = Mock(side_effect=[
        {"status": "1", "result": [a, b]},
        {"status": "1", "result": [b, c]},
        {"status": "0", "message": "No transactions found", "result": []},
    ])
    client = EtherscanClient(backend, page_size=2)

    records = client._fetch_all("txlist", CONTRACT)

    assert [r["hash"] for r in records] == [a["hash"], b["hash"], c["hash"]]
    pages = [call.args[0]["page"] for call in backend.request.call_args_list]
    assert pages == [1, 2, 3]


def test_fetch_many_keeps_input_order():
    client = EtherscanClient(FixtureBackend(FIXTURES), concurrency=3)
    addresses = ["0x" + "9" * 40, CONTRACT, "0x" + "8" * 40]
    bundles = client.fetch_many(addresses)
    assert [b.address for b in bundles] == addresses
    assert [b.found for b in bundles] == [False, True, False]


class TestHttpBackend:
    def test_retries_on_429_then_succeeds(self):
        payload = {"status": "1", "message": "OK", "result": [_record(1)]}
        backend, session, sleep = _http_backend(_response(429), _response(200, payload))

        assert backend.request({"module": "account", "action": "txlist"}) == payload
        assert session.get.call_count == 2
        sleep.assert_called_once_with(0.5)
        assert session.get.call_args.kwargs["params"]["apikey"] == "KEY"

    def test_honors_retry_after(self):
        backend, _, sleep = _http_backend(_response(503, headers={"Retry-After": "3"}), _response(200))
        backend.request({"action": "txlist"})
        sleep.assert_called_once_with(3.0)

    def test_gives_up_after_max_retries(self):
        backend, session, _ = _http_backend(*[_response(500) for _ in range(3)], max_retries=3)
        with pytest.raises(RetryableFetchError) as excinfo:
            backend.request({"module": "account", "action": "txlist", "address": CONTRACT})
        assert excinfo.value.attempts == 3
        assert session.get.call_count == 3

    def test_connection_errors_are_retried(self):
        backend, session, _ = _http_backend(requests.ConnectionError("reset"), _response(200))
        backend.request({"action": "txlist"})
        assert session.get.call_count == 2

    def test_client_error_is_not_retried(self):
        backend, session, _ = _http_backend(_response(404))
        with pytest.raises(InputError):
            backend.request({"action": "txlist"})
        assert session.get.call_count == 1

    def test_body_that_is_not_json(self):
        response = _response(200)
        response.json = Mock(side_effect=ValueError("Expecting value"))
        backend, _, _ = _http_backend(response)
        with pytest.raises(PayloadError):
            backend.request({"action": "txlist"})

    def test_rate_limit_message_is_retried(self):
        limited = _response(200, {"status": "0", "message": "NOTOK", "result": "Max rate limit reached"})
        backend, session, _ = _http_backend(limited, _response(200))
        backend.request({"action": "txlist"})
        assert session.get.call_count == 2


def test_gas_used_above_gas_rejected():
    with pytest.raises(PayloadError) as excinfo:
        parse_normal(_record(1, gas="21000", gasUsed="30000"))
    assert excinfo.value.field == "gasUsed"


def test_non_integer_value_rejected():
    with pytest.raises(PayloadError):
        parse_normal(_record(1, value="lots"))


def test_wei_values_beyond_64_bits_survive():
    tx = parse_normal(_record(1, value=str(2 ** 200)))
    assert tx.value == 2 ** 200


def test_rate_limiter_spaces_calls():
    clock = Mock(return_value=10.0)
    sleep = Mock()
    limiter = RateLimiter(2.0, clock=clock, sleep=sleep)

    for _ in range(3):
        limiter.wait()

    assert [call.args[0] for call in sleep.call_args_list] == [0.5, 1.0]


def test_transaction_hashes_normalized():
    upper = "0x" + "AB" * 32
    assert parse_normal(_record(1, hash=upper)).hash == upper.lower()
    assert parse_normal(_record(1, hash="ab" * 32)).hash == "0x" + "ab" * 32
    assert parse_internal(_record(1, hash=upper)).parent_hash == upper.lower()


@pytest.mark.parametrize("bad", ["0x1234", "0x" + "g" * 64, ""])
def test_malformed_hash_rejected(bad):
    with pytest.raises(PayloadError) as excinfo:
        parse_normal(_record(1, hash=bad))
    assert excinfo.value.field == "hash"
