"""Etherscan-compatible explorer client with a fixture backend.

Both backends answer the same ``request(params) -> payload`` call, so
pagination, deduplication and record parsing run identically against the
live API and against fixture files on disk.
"""

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Protocol, Tuple

import requests
from requests.adapters import HTTPAdapter

from ..core.errors import InputError, PayloadError, RetryableFetchError
from ..utils.logger import log
from ..utils.utils import PathLike
from .labels import count_source_lines, parse_compiler_version
from .models import (
    Contract,
    ContractBundle,
    InternalTransaction,
    NormalTransaction,
    SourceInfo,
    is_address,
    is_tx_hash,
    normalize_address,
    normalize_tx_hash,
)

logger = logging.getLogger(__name__)

RETRY_STATUS = {429, 500, 502, 503, 504}
# Explorers refuse page * offset beyond this window; deeper history is
# reached by moving the start block forward.
RESULT_WINDOW = 10000
NO_RECORDS_MESSAGES = ("no transactions found", "no records found", "no data found")


class Backend(Protocol):
    def request(self, params: Dict[str, Any]) -> Dict[str, Any]:
        ...


class RateLimiter:
    """Spaces calls at least ``1 / rate`` seconds apart across threads."""

    def __init__(self, rate: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_slot = 0.0

    def wait(self):
        with self._lock:
            now = self._clock()
            slot = max(now, self._next_slot)
            self._next_slot = slot + self.interval
        delay = slot - now
        if delay > 0:
            self._sleep(delay)


class HttpBackend:
    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        rate_limit: float = 5.0,
        max_retries: int = 5,
        backoff: float = 0.5,
        timeout: float = 30.0,
        concurrency: int = 4,
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._sleep = sleep
        self.limiter = RateLimiter(rate_limit, sleep=sleep)
        if session is None:
            session = requests.Session()
            adapter = HTTPAdapter(pool_connections=concurrency, pool_maxsize=concurrency)
            session.mount("http://", adapter)
            session.mount("https://", adapter)
        self.session = session

    def _retry_delay(self, attempt: int, response: Optional[requests.Response] = None) -> float:
        if response is not None:
            retry_after = response.headers.get("Retry-After", "")
            if retry_after.isdigit():
                return float(retry_after)
        return min(self.backoff * (2 ** attempt), 30.0)

    def request(self, params: Dict[str, Any]) -> Dict[str, Any]:
        query = dict(params)
        if self.api_key:
            query["apikey"] = self.api_key

        last_problem = ""
        for attempt in range(self.max_retries):
            self.limiter.wait()
            try:
                response = self.session.get(self.base_url, params=query, timeout=self.timeout)
            except requests.RequestException as e:
                last_problem = f"{type(e).__name__}: {e}"
                logger.debug("Request failed (%s), retrying", last_problem)
                self._sleep(self._retry_delay(attempt))
                continue

            if response.status_code in RETRY_STATUS:
                last_problem = f"HTTP {response.status_code}"
                logger.debug("Explorer answered %s, retrying", last_problem)
                self._sleep(self._retry_delay(attempt, response))
                continue
            if response.status_code >= 400:
                raise InputError(
                    f"Explorer rejected {params.get('action')} with HTTP {response.status_code}"
                )

            try:
                payload = response.json()
            except ValueError:
                raise PayloadError("body", "response is not JSON") from None
            if not isinstance(payload, dict):
                raise PayloadError("body", "response is not a JSON object")

            message = f"{payload.get('message', '')} {payload.get('result', '')}".lower()
            if str(payload.get("status", "1")) == "0" and "rate limit" in message:
                last_problem = "rate limited"
                self._sleep(self._retry_delay(attempt))
                continue
            if str(payload.get("status", "1")) == "0" and "invalid api key" in message:
                raise InputError("Explorer rejected the API key (check ETHERSCAN_API_KEY)")
            return payload

        raise RetryableFetchError(
            f"{params.get('module')}/{params.get('action')} for {params.get('address')}: {last_problem}",
            self.max_retries,
        )


class FixtureBackend:
    """Serves explorer payloads from ``<directory>/<address>.json`` files.

    A fixture file holds the full result list per action (``txlist``,
    ``txlistinternal``, ``getsourcecode``, ``getcontractcreation``) and the
    bytecode under ``eth_getCode``. Pages are sliced like the live API does.
    """

    def __init__(self, directory: PathLike):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise InputError(f"Fixture directory not found: {self.directory}")

    def _load(self, address: str) -> Optional[Dict[str, Any]]:
        path = self.directory / f"{normalize_address(address)}.json"
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as f:
            try:
                return json.load(f)
            except json.JSONDecodeError as e:
                raise PayloadError("fixture", f"{path}: {e}") from None

    def request(self, params: Dict[str, Any]) -> Dict[str, Any]:
        action = params["action"]
        fixture = self._load(params.get("address", "")) or {}

        if action == "eth_getCode":
            return {"jsonrpc": "2.0", "id": 1, "result": fixture.get("eth_getCode", "0x")}

        records = fixture.get(action, [])
        if action in ("txlist", "txlistinternal"):
            start = int(params.get("startblock", 0))
            end = int(params.get("endblock", 99999999))
            records = [r for r in records if start <= int(r.get("blockNumber", 0)) <= end]
            offset = int(params.get("offset", len(records) or 1))
            page = int(params.get("page", 1))
            records = records[(page - 1) * offset: page * offset]

        if not records:
            return {"status": "0", "message": "No transactions found", "result": []}
        return {"status": "1", "message": "OK", "result": records}


def _field(record: Dict[str, Any], name: str, record_id: str) -> Any:
    if name not in record:
        raise PayloadError(name, "missing", record_id)
    return record[name]


def _int_field(record: Dict[str, Any], name: str, record_id: str, default: Optional[int] = None) -> int:
    if name not in record and default is not None:
        return default
    raw = _field(record, name, record_id)
    if raw in ("", None) and default is not None:
        return default
    try:
        value = int(str(raw), 0) if str(raw).startswith("0x") else int(str(raw))
    except ValueError:
        raise PayloadError(name, f"not an integer: {raw!r}", record_id) from None
    if value < 0:
        raise PayloadError(name, f"negative value {value}", record_id)
    return value


def _address_field(record: Dict[str, Any], name: str, record_id: str) -> str:
    value = normalize_address(record.get(name) or "")
    if value and not is_address(value):
        raise PayloadError(name, f"not an address: {value!r}", record_id)
    return value


def _hash_field(record: Dict[str, Any], name: str) -> str:
    value = normalize_tx_hash(str(_field(record, name, "?")))
    if not is_tx_hash(value):
        raise PayloadError(name, f"not a transaction hash: {value!r}")
    return value


def _bool_field(record: Dict[str, Any], name: str, record_id: str) -> bool:
    raw = str(record.get(name, "0")).strip()
    if raw not in ("0", "1"):
        raise PayloadError(name, f"expected 0 or 1, got {raw!r}", record_id)
    return raw == "1"


def parse_normal(record: Dict[str, Any]) -> NormalTransaction:
    tx_hash = _hash_field(record, "hash")
    gas = _int_field(record, "gas", tx_hash)
    gas_used = _int_field(record, "gasUsed", tx_hash)
    if gas_used > gas:
        raise PayloadError("gasUsed", f"{gas_used} exceeds gas {gas}", tx_hash)
    return NormalTransaction(
        hash=tx_hash,
        block_number=_int_field(record, "blockNumber", tx_hash),
        timestamp=_int_field(record, "timeStamp", tx_hash),
        from_address=_address_field(record, "from", tx_hash),
        to=_address_field(record, "to", tx_hash),
        contract_address=_address_field(record, "contractAddress", tx_hash),
        value=_int_field(record, "value", tx_hash),
        gas=gas,
        gas_used=gas_used,
        is_error=_bool_field(record, "isError", tx_hash),
        transaction_index=_int_field(record, "transactionIndex", tx_hash, default=0),
    )


def parse_internal(record: Dict[str, Any]) -> InternalTransaction:
    parent = _hash_field(record, "hash")
    return InternalTransaction(
        parent_hash=parent,
        from_address=_address_field(record, "from", parent),
        to=_address_field(record, "to", parent),
        contract_address=_address_field(record, "contractAddress", parent),
        value=_int_field(record, "value", parent),
        gas=_int_field(record, "gas", parent, default=0),
        gas_used=_int_field(record, "gasUsed", parent, default=0),
        is_error=_bool_field(record, "isError", parent),
        trace_id=str(record.get("traceId", "")),
    )


def parse_source(record: Optional[Dict[str, Any]]) -> SourceInfo:
    if not record or not str(record.get("SourceCode", "")).strip():
        return SourceInfo.absent()
    raw_version = str(record.get("CompilerVersion", ""))
    _, minor, patch = parse_compiler_version(raw_version)
    library = str(record.get("Library", "")).strip()
    return SourceInfo(
        has_source_code=True,
        source_line_count=count_source_lines(str(record["SourceCode"])),
        compiler_version_raw=raw_version,
        compiler_minor=minor,
        compiler_patch=patch,
        compiler_runs=_int_field(record, "Runs", "getsourcecode", default=0),
        library=library or None,
    )


def parse_bytecode(payload: Dict[str, Any]) -> bytes:
    raw = str(payload.get("result") or "0x")
    if not raw.startswith("0x"):
        raise PayloadError("bytecode", f"expected 0x-prefixed hex, got {raw[:16]!r}")
    try:
        return bytes.fromhex(raw[2:])
    except ValueError:
        raise PayloadError("bytecode", "invalid hex") from None


def _result_list(payload: Dict[str, Any], action: str) -> List[Dict[str, Any]]:
    result = payload.get("result")
    if str(payload.get("status", "1")) == "0":
        message = str(payload.get("message", "")).lower()
        if not result or any(m in message for m in NO_RECORDS_MESSAGES):
            return []
    if not isinstance(result, list):
        raise PayloadError("result", f"{action} returned {type(result).__name__}, expected a list")
    return result


def _record_key(record: Dict[str, Any], action: str) -> Tuple:
    if action == "txlist":
        return (str(record.get("hash", "")).lower(),)
    if record.get("traceId"):
        return (str(record.get("hash", "")).lower(), str(record["traceId"]))
    return (json.dumps(record, sort_keys=True),)


class EtherscanClient:
    def __init__(
        self,
        backend: Backend,
        page_size: int = 10000,
        start_block: int = 0,
        end_block: int = 99999999,
        concurrency: int = 4,
    ):
        self.backend = backend
        self.page_size = page_size
        self.start_block = start_block
        self.end_block = end_block
        self.concurrency = concurrency

    @classmethod
    def from_settings(cls, settings, api_key: Optional[str] = None) -> "EtherscanClient":
        """Build a client from validated ``ClientSettings``."""
        if settings.fixtures:
            backend: Backend = FixtureBackend(settings.fixtures)
        else:
            backend = HttpBackend(
                settings.base_url,
                api_key=api_key,
                rate_limit=settings.rate_limit,
                max_retries=settings.max_retries,
                backoff=settings.backoff,
                timeout=settings.timeout,
                concurrency=settings.concurrency,
            )
        return cls(
            backend,
            page_size=settings.page_size,
            start_block=settings.start_block,
            end_block=settings.end_block,
            concurrency=settings.concurrency,
        )

    def _fetch_all(self, action: str, address: str) -> List[Dict[str, Any]]:
        """Every record of a paginated account action, deduplicated, in order."""
        seen: Dict[Tuple, Dict[str, Any]] = {}
        start = self.start_block
        while True:
            page = 1
            while True:
                payload = self.backend.request({
                    "module": "account",
                    "action": action,
                    "address": address,
                    "startblock": start,
                    "endblock": self.end_block,
                    "page": page,
                    "offset": self.page_size,
                    "sort": "asc",
                })
                records = _result_list(payload, action)
                for record in records:
                    seen.setdefault(_record_key(record, action), record)
                if len(records) < self.page_size:
                    return list(seen.values())
                if (page + 1) * self.page_size > RESULT_WINDOW:
                    break
                page += 1
            last_block = _int_field(records[-1], "blockNumber", action)
            if last_block <= start:
                log.warning(f"{address}: more than {RESULT_WINDOW} {action} records in block {start}; truncating")
                return list(seen.values())
            start = last_block

    def _creation_info(self, address: str) -> Optional[Dict[str, Any]]:
        payload = self.backend.request({
            "module": "contract",
            "action": "getcontractcreation",
            "contractaddresses": address,
            "address": address,
        })
        records = _result_list(payload, "getcontractcreation")
        return records[0] if records else None

    def fetch_contract_bundle(self, address: str) -> ContractBundle:
        """Fetch a contract, its source metadata and all its transactions."""
        address = normalize_address(address)
        if not is_address(address):
            raise InputError(f"Malformed address: {address!r}")

        normals = tuple(parse_normal(r) for r in self._fetch_all("txlist", address))
        internal_records = self._fetch_all("txlistinternal", address)
        internals = tuple(parse_internal(r) for r in internal_records)
        bytecode = parse_bytecode(self.backend.request({
            "module": "proxy", "action": "eth_getCode", "address": address, "tag": "latest",
        }))
        source_records = _result_list(
            self.backend.request({"module": "contract", "action": "getsourcecode", "address": address}),
            "getsourcecode",
        )
        source = parse_source(source_records[0] if source_records else None)

        creation = next(
            (tx for tx in normals if tx.is_creation and tx.contract_address == address), None
        )
        if creation is None:
            creation = self._synthesize_creation(address, internal_records)
            if creation is not None:
                normals = (creation,) + normals
                # the create trace now moves its value through the rebuilt normal
                internals = tuple(
                    i for i in internals
                    if not (i.parent_hash == creation.hash and i.contract_address == address and not i.to)
                )

        if creation is None and not normals and not internals and not bytecode:
            log.debug(f"{address}: unknown to the explorer")
            return ContractBundle.not_found(address)
        if creation is None:
            raise PayloadError("contractAddress", "no creation transaction found", address)

        known = {tx.hash for tx in normals}
        orphans = [i for i in internals if i.parent_hash not in known]
        if orphans:
            log.debug(f"{address}: dropping {len(orphans)} internal transactions with unknown parents")
            internals = tuple(i for i in internals if i.parent_hash in known)

        contract = Contract(
            address=address,
            creator=creation.from_address,
            bytecode=bytecode,
            creation_block=creation.block_number,
            creation_tx_hash=creation.hash,
        )
        return ContractBundle(contract=contract, source=source, normals=normals, internals=internals)

    def _synthesize_creation(
        self, address: str, internal_records: List[Dict[str, Any]]
    ) -> Optional[NormalTransaction]:
        """Creation made by another contract: rebuild it as a normal transaction."""
        for record in internal_records:
            internal = parse_internal(record)
            if internal.contract_address == address and not internal.to:
                info = self._creation_info(address)
                creator = (
                    _address_field(info, "contractCreator", address) if info else internal.from_address
                )
                return NormalTransaction(
                    hash=internal.parent_hash,
                    block_number=_int_field(record, "blockNumber", address, default=0),
                    timestamp=_int_field(record, "timeStamp", address, default=0),
                    from_address=creator,
                    to="",
                    contract_address=address,
                    value=internal.value,
                    gas=internal.gas,
                    gas_used=min(internal.gas_used, internal.gas),
                    is_error=internal.is_error,
                )
        return None

    def fetch_many(self, addresses: Iterable[str]) -> List[ContractBundle]:
        """Fetch bundles with bounded parallelism, returned in input order."""
        addresses = list(dict.fromkeys(normalize_address(a) for a in addresses))
        results: Dict[str, ContractBundle] = {}
        with log.progress("Fetching contracts", total=len(addresses)) as task:
            with ThreadPoolExecutor(max_workers=self.concurrency) as executor:
                futures = {executor.submit(self.fetch_contract_bundle, a): a for a in addresses}
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    task.advance()
        return [results[a] for a in addresses]
