from collections import defaultdict

import pytest
import yaml

from hpscan.chain.dataset import load_dataset, store_dataset
from hpscan.chain.labels import bytecode_hash
from hpscan.chain.models import NOT_HONEYPOT
from hpscan.core.errors import ConfigValidationError, InputError
from hpscan.fundflow.events import events_for_bundle
from hpscan.synth import (
    DEFAULT_ARCHETYPES,
    generate,
    load_archetypes,
    synth_config,
    technique_counts,
    write_corpus,
)


def test_corpus_without_honeypots():
    bundles = generate(synth_config(n_honeypots=0, n_non_honeypots=10, seed=1))
    assert len(bundles) == 10
    assert all(b.label == NOT_HONEYPOT for b in bundles)


def test_counts_and_labels():
    bundles = generate(synth_config(n_honeypots=25, n_non_honeypots=40, seed=2))
    counts = technique_counts(bundles)
    assert counts["NONE"] == 40
    assert sum(counts.values()) == 65
    assert set(counts) <= {"NONE", "HSU", "BD", "ID", "SESL"}
    assert len({b.address for b in bundles}) == 65


def test_same_seed_same_bytes(tmp_path):
    config = synth_config(n_honeypots=15, n_non_honeypots=30, seed=42)
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    store_dataset(generate(config), first)
    store_dataset(generate(config), second)
    assert first.read_bytes() == second.read_bytes()

    other = tmp_path / "c.jsonl"
    store_dataset(generate(synth_config(n_honeypots=15, n_non_honeypots=30, seed=43)), other)
    assert other.read_bytes() != first.read_bytes()


def test_honeypot_lifecycle_events():
    config = synth_config(
        n_honeypots=30, n_non_honeypots=0, seed=8,
        omit_creator_deposit=0.0, victim_deposit=1.0, creator_withdrawal=1.0,
    )
    for bundle in generate(config):
        events = events_for_bundle(bundle)
        assert events[0] == 33, bundle.label.technique.value
        assert 83 in events
        assert 201 in events[events.index(83):]
        assert events[-1] == 73


def test_every_technique_deploys_without_value():
    config = synth_config(n_honeypots=60, n_non_honeypots=0, seed=4)
    first_cases = defaultdict(set)
    for bundle in generate(config):
        first_cases[bundle.label.technique.value].add(events_for_bundle(bundle)[0])
    assert set(first_cases) == {"HSU", "BD", "ID", "SESL"}
    assert all(cases == {33} for cases in first_cases.values())


def test_creator_keeps_bait_without_withdrawal():
    config = synth_config(n_honeypots=20, n_non_honeypots=0, seed=8, creator_withdrawal=0.0)
    for bundle in generate(config):
        assert 73 not in events_for_bundle(bundle)


def test_written_corpus_loads_back(tmp_path):
    config = synth_config(n_honeypots=10, n_non_honeypots=20, seed=4)
    path = tmp_path / "corpus.jsonl"
    assert write_corpus(config, path) == 30
    assert load_dataset(path) == generate(config)


def test_clones_share_bytecode_and_label():
    bundles = generate(synth_config(n_honeypots=40, n_non_honeypots=0, seed=6, clone=1.0))
    groups = defaultdict(set)
    for bundle in bundles:
        groups[bytecode_hash(bundle.contract.bytecode)].add(bundle.label)
    assert len(groups) < 40
    assert all(len(labels) == 1 for labels in groups.values())


def test_missing_source_noise():
    bundles = generate(synth_config(n_honeypots=5, n_non_honeypots=5, seed=1, missing_source=1.0))
    assert not any(b.source.has_source_code for b in bundles)


def test_noise_rates_validated():
    with pytest.raises(ConfigValidationError) as excinfo:
        synth_config(n_honeypots=5, n_non_honeypots=5, victim_deposit=1.5)
    assert any("victim_deposit" in v for v in excinfo.value.violations)


def test_weights_must_sum_to_one(tmp_path):
    data = load_archetypes()
    data["honeypots"][0]["weight"] = 0.9
    path = tmp_path / "archetypes.yaml"
    path.write_text(yaml.safe_dump(data))
    with pytest.raises(ConfigValidationError, match="sum to"):
        synth_config(path=path)


def test_yaml_syntax_error_reports_line(tmp_path):
    path = tmp_path / "archetypes.yaml"
    path.write_text("noise:\n  clone: 0.3\nhoneypots: [\n  - name: broken\n")
    with pytest.raises(InputError, match="line"):
        load_archetypes(path)


def test_missing_sections(tmp_path):
    path = tmp_path / "archetypes.yaml"
    path.write_text("noise:\n  clone: 0.3\n")
    with pytest.raises(InputError, match="honeypots"):
        load_archetypes(path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_archetypes(tmp_path / "absent.yaml")


def test_packaged_archetypes_validate():
    assert DEFAULT_ARCHETYPES.is_file()
    config = synth_config()
    assert config.n_honeypots == 300
    assert config.n_non_honeypots == 5000
    assert {a.technique.value for a in config.honeypots} == {"HSU", "BD", "ID", "SESL"}
