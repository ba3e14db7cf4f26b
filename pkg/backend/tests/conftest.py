# Shared fixtures: demo policy, authorised server set, event factories, a small labelled truth set
import os

import pytest

from attack_sim import AttackKind
from dhcp_codec import DhcpMessage
from policy import DATA_DIR, DetectionPolicy, load_policy
from schemas import AttackClass, EventKind, Layer, NetworkEvent
from tests.helpers import LEGIT, LEGIT_MAC, make_alert, truth_event, truth_window
from verifier import FingerprintSet, ServerFingerprint

DEMO_POLICY = os.path.join(DATA_DIR, "demo_policy.json")
DEMO_SPEC = os.path.join(DATA_DIR, "demo_spec.json")


@pytest.fixture
def fingerprints() -> FingerprintSet:
    return FingerprintSet([ServerFingerprint(server_id=LEGIT, mac=LEGIT_MAC, label="core", gateway=LEGIT,
                                             dns=(LEGIT,))])


@pytest.fixture
def demo_policy() -> DetectionPolicy:
    return load_policy(DEMO_POLICY)


@pytest.fixture
def quick_policy(demo_policy) -> DetectionPolicy:
    """Demo policy with a three-window warmup."""
    return demo_policy.model_copy(update={"anomaly": demo_policy.anomaly.model_copy(update={"warmup_windows": 3})})


@pytest.fixture
def make_event():
    """Factory for events with increasing ids."""
    counter = {"id": 0}

    def _make(ts: float, kind: EventKind = EventKind.TCP, **attrs) -> NetworkEvent:
        counter["id"] += 1
        values = {"src": "10.0.0.21", "dst": "10.0.0.10", "payload_bytes": 300}
        if kind == EventKind.TCP:
            values.update(acked=True, duration=1.0)
        values.update(attrs)
        return NetworkEvent(event_id=counter["id"], timestamp=ts, kind=kind, **values)

    return _make


@pytest.fixture
def dhcp_event(make_event):
    def _make(ts: float, msg: DhcpMessage, src_mac: str = LEGIT_MAC) -> NetworkEvent:
        return make_event(ts, EventKind.DHCP, src=str(msg.server_id or "0.0.0.0"), dst="255.255.255.255",
                          src_mac=src_mac, payload_bytes=60, dhcp=msg)

    return _make


@pytest.fixture
def small_truth():
    """Five events and four windows: one of each outcome per unit, plus an anomaly-layer attack event."""
    return [
        truth_event(1),
        truth_event(2, AttackKind.KNOWN_SIGNATURE, AttackClass.U2R, Layer.SIGNATURE),
        truth_event(3, AttackKind.SYN_FLOOD, AttackClass.DOS, Layer.ANOMALY),
        truth_event(4),
        truth_event(5, AttackKind.ROGUE_RACE, AttackClass.ROGUE_DHCP, Layer.DHCP_VERIFIER),
        truth_window(0), truth_window(1, AttackKind.SYN_FLOOD), truth_window(2, AttackKind.SYN_FLOOD), truth_window(3),
    ]


@pytest.fixture
def small_alerts():
    return [make_alert(1, event_id=2), make_alert(2, event_id=4), make_alert(3, window_index=1),
            make_alert(4, window_index=3)]
