import csv
import json

import pytest

from errors import MalformedEventFile, UsageError
from export_engine import dump_jsonl, export_alerts_to_csv, iter_jsonl, read_jsonl, write_jsonl
from schemas import Alert, AttackClass, Layer


@pytest.fixture
def alerts():
    return [
        Alert(alert_id=1, event_id=7, timestamp=0.25, layer=Layer.SIGNATURE, attack_class=AttackClass.MALWARE,
              severity=4, evidence={"rules": [{"rule_id": "R3"}]}, policy_version=1),
        Alert(alert_id=2, window_index=3, timestamp=3.0, layer=Layer.ANOMALY, attack_class=AttackClass.DOS,
              severity=4, evidence={"triggers": ["packet_rate"]}, policy_version=2),
    ]


def test_jsonl_omits_nulls(alerts):
    first = json.loads(dump_jsonl(alerts).splitlines()[0])
    assert "window_index" not in first
    assert list(first)[:3] == ["alert_id", "event_id", "timestamp"]


def test_write_and_read(tmp_path, alerts):
    path = str(tmp_path / "alerts.jsonl")
    assert write_jsonl(path, alerts) == 2
    assert read_jsonl(path, Alert) == alerts


def test_blank_lines_skipped(tmp_path, alerts):
    path = tmp_path / "alerts.jsonl"
    path.write_text("\n" + dump_jsonl(alerts) + "\n")
    assert len(read_jsonl(str(path), Alert)) == 2


def test_error_type_is_configurable(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"alert_id": 0}\n')
    with pytest.raises(UsageError):
        read_jsonl(str(path), Alert, UsageError)


def test_missing_file(tmp_path):
    with pytest.raises(MalformedEventFile):
        next(iter_jsonl(str(tmp_path / "absent.jsonl"), Alert))


def test_csv(tmp_path, alerts):
    path = str(tmp_path / "alerts.csv")
    assert export_alerts_to_csv(alerts, path) == 2
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["event_id"] == "7" and rows[0]["window_index"] == ""
    assert rows[1]["layer"] == "Anomaly"
    assert json.loads(rows[1]["evidence"]) == {"triggers": ["packet_rate"]}
