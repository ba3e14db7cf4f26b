import pytest

from database import archive_run, list_runs, load_run_alerts
from errors import ArchiveError, UsageError
from schemas import Alert, AttackClass, Layer


@pytest.fixture
def url(tmp_path):
    return f"sqlite:///{tmp_path / 'archive.db'}"


@pytest.fixture
def alerts():
    return [
        Alert(alert_id=1, event_id=12, timestamp=1.5, layer=Layer.DHCP_VERIFIER,
              attack_class=AttackClass.ROGUE_DHCP, severity=5, evidence={"xid": 77}, policy_version=1),
        Alert(alert_id=2, window_index=30, timestamp=30.0, layer=Layer.ANOMALY, attack_class=AttackClass.DOS,
              severity=4, evidence={"triggers": ["packet_rate"]}, policy_version=2),
    ]


def test_round_trip(url, alerts, demo_policy):
    newer = demo_policy.model_copy(update={"version": 2})
    run_id = archive_run(url, alerts, [demo_policy, newer], label="events.jsonl")
    assert load_run_alerts(url, run_id) == alerts
    assert list_runs(url) == [
        {"id": run_id, "label": "events.jsonl", "alert_count": 2, "policy_versions": [1, 2]},
    ]


def test_runs_are_separate(url, alerts, demo_policy):
    first = archive_run(url, alerts[:1], [demo_policy])
    second = archive_run(url, alerts, [demo_policy])
    assert second == first + 1
    assert len(load_run_alerts(url, first)) == 1


def test_empty_run(url, demo_policy):
    run_id = archive_run(url, [], [demo_policy])
    assert load_run_alerts(url, run_id) == []


def test_unknown_run(url):
    with pytest.raises(UsageError):
        load_run_alerts(url, 404)


def test_unreachable_archive(tmp_path):
    with pytest.raises(ArchiveError):
        archive_run(f"sqlite:///{tmp_path / 'missing' / 'dir' / 'a.db'}", [], [])
