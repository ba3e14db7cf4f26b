import json
from ipaddress import IPv4Address

import pytest

from errors import PolicyInvariantError, PolicyParseError
from policy import DEFAULT_ALPHA, DEFAULT_WARMUP_WINDOWS, load_policy


def write(tmp_path, doc, name="policy.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def test_demo_policy(demo_policy):
    assert demo_policy.version == 1
    assert len(demo_policy.rule_database()) == 3
    assert demo_policy.fingerprint_set().get(IPv4Address("10.0.0.1")).label == "core-dhcp"


def test_defaults(tmp_path):
    policy = load_policy(write(tmp_path, {}))
    assert policy.version == 1
    assert policy.anomaly.alpha == DEFAULT_ALPHA
    assert policy.anomaly.warmup_windows == DEFAULT_WARMUP_WINDOWS
    assert policy.rule_database().rule_ids == ["R1", "R2", "R3"]
    assert len(policy.fingerprints) == 0


def test_inline_rules_and_fingerprints(tmp_path):
    policy = load_policy(write(tmp_path, {
        "version": 4,
        "fingerprints": [{"server_id": "192.168.0.1", "mac": "02:00:00:00:00:10", "label": "lab"}],
        "rules": [{"rule_id": "X1", "field_selector": "fields.service", "matcher": "Equals",
                   "pattern": "ftp", "attack_class": "R2L", "severity": 2}],
        "anomaly": {"k": 2.0},
    }))
    assert policy.version == 4
    assert policy.anomaly.k == 2.0
    assert policy.rule_database().rule_ids == ["X1"]
    assert IPv4Address("192.168.0.1") in policy.fingerprint_set()


def test_relative_files_resolve_next_to_policy(tmp_path):
    (tmp_path / "fps.jsonl").write_text('{"server_id": "10.1.1.1", "mac": "02:00:00:00:00:11", "label": "x"}\n')
    policy = load_policy(write(tmp_path, {"fingerprints_file": "fps.jsonl"}))
    assert [str(fp.server_id) for fp in policy.fingerprints] == ["10.1.1.1"]


def test_override_paths(tmp_path):
    rules = tmp_path / "rules.jsonl"
    rules.write_text('{"rule_id": "Z", "field_selector": "src", "matcher": "Equals", "pattern": "10.0.0.66", '
                     '"attack_class": "Probe", "severity": 1}\n')
    policy = load_policy(write(tmp_path, {}), rules_path=str(rules))
    assert policy.rule_database().rule_ids == ["Z"]


@pytest.mark.parametrize("text", ["", "   \n", "{not json", "[1, 2]"])
def test_unparseable(tmp_path, text):
    with pytest.raises(PolicyParseError):
        load_policy(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(PolicyParseError):
        load_policy(str(tmp_path / "absent.json"))


def test_missing_rules_file(tmp_path):
    with pytest.raises(PolicyParseError):
        load_policy(write(tmp_path, {"rules_file": "nowhere.jsonl"}))


@pytest.mark.parametrize("doc", [
    {"version": 0},
    {"anomaly": {"alpha": 0}},
    {"anomaly": {"unknown_knob": 1}},
    {"verifier": {"pool_size": 0}},
    {"rules": [{"rule_id": "A", "field_selector": "src", "matcher": "Regex", "pattern": "(",
                "attack_class": "Probe", "severity": 1}]},
    {"rules": [{"rule_id": "A", "field_selector": "src", "matcher": "Equals", "pattern": "x",
                "attack_class": "Probe", "severity": 1}] * 2},
    {"fingerprints": [{"server_id": "10.0.0.1", "mac": "02:00:00:00:00:01", "label": "a"}] * 2},
])
def test_invariant_violations(tmp_path, doc):
    with pytest.raises(PolicyInvariantError):
        load_policy(write(tmp_path, doc))
