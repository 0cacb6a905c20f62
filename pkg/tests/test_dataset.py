import json

import pytest

from hpscan.chain.dataset import HEADER, iter_dataset, load_dataset, store_dataset
from hpscan.chain.models import ContractBundle
from hpscan.core.errors import CorruptRecordError, DatasetVersionError


def test_round_trip_preserves_every_bundle(tmp_path, small_corpus):
    path = tmp_path / "dataset.jsonl"
    bundles = small_corpus[:100]

    assert store_dataset(bundles, path) == 100
    assert load_dataset(path) == bundles


def test_not_found_bundles_round_trip(tmp_path):
    path = tmp_path / "dataset.jsonl"
    missing = ContractBundle.not_found("0x" + "9" * 40)
    store_dataset([missing], path)
    [loaded] = load_dataset(path)
    assert loaded == missing
    assert not loaded.found


def test_empty_dataset_has_only_header(tmp_path):
    path = tmp_path / "dataset.jsonl"
    assert store_dataset([], path) == 0
    assert json.loads(path.read_text().splitlines()[0]) == HEADER
    assert load_dataset(path) == []


def test_truncated_line_reports_line_number(tmp_path, small_corpus):
    path = tmp_path / "dataset.jsonl"
    store_dataset(small_corpus[:5], path)
    lines = path.read_text().splitlines()
    lines[3] = lines[3][: len(lines[3]) // 2]
    path.write_text("\n".join(lines) + "\n")

    records = iter_dataset(path)
    assert next(records) == small_corpus[0]
    assert next(records) == small_corpus[1]
    with pytest.raises(CorruptRecordError) as excinfo:
        next(records)
    assert excinfo.value.line_number == 4


@pytest.mark.parametrize("header", [
    '{"format": "hpscan-raw", "version": 2}',
    '{"format": "something-else", "version": 1}',
    "not json at all",
])
def test_bad_header(tmp_path, header):
    path = tmp_path / "dataset.jsonl"
    path.write_text(header + "\n")
    with pytest.raises(DatasetVersionError):
        load_dataset(path)


def test_empty_file(tmp_path):
    path = tmp_path / "dataset.jsonl"
    path.write_text("")
    with pytest.raises(DatasetVersionError):
        load_dataset(path)


def test_append_adds_after_existing_records(tmp_path, small_corpus):
    path = tmp_path / "dataset.jsonl"
    store_dataset(small_corpus[:3], path)
    store_dataset(small_corpus[3:5], path, append=True)

    assert load_dataset(path) == small_corpus[:5]
    assert path.read_text().count('"format"') == 1


def test_append_to_missing_file_writes_header(tmp_path, small_corpus):
    path = tmp_path / "fresh.jsonl"
    store_dataset(small_corpus[:2], path, append=True)
    assert load_dataset(path) == small_corpus[:2]
