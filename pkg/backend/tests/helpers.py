# Builders shared across test modules
from ipaddress import IPv4Address

from attack_sim import GroundTruthRecord, TruthUnit
from dhcp_codec import DhcpMessage, MsgType
from schemas import Alert, AttackClass, Layer

LEGIT = IPv4Address("10.0.0.1")
ROGUE = IPv4Address("10.0.0.66")
LEGIT_MAC = "02:00:00:00:01:01"
ROGUE_MAC = "02:00:00:00:06:06"


def offer(server=LEGIT, xid=7, mac="02:00:00:00:00:02", gateway=LEGIT, msg_type=MsgType.OFFER) -> DhcpMessage:
    return DhcpMessage(msg_type=msg_type, xid=xid, client_mac=mac, your_ip="10.0.0.150",
                       server_id=server, gateway=gateway, dns=(server,), lease_secs=3600)


def discover(mac: str, xid: int = 1) -> DhcpMessage:
    return DhcpMessage(msg_type=MsgType.DISCOVER, xid=xid, client_mac=mac)


def starvation_mac(i: int) -> str:
    return f"de:ad:00:00:{(i >> 8) & 0xFF:02x}:{i & 0xFF:02x}"


# ─── Truth and alert records ───

def truth_event(event_id, kind=None, category=None, layer=None) -> GroundTruthRecord:
    return GroundTruthRecord(unit=TruthUnit.EVENT, id=event_id, is_attack=kind is not None,
                             attack_class=kind, category=category, expected_layer=layer)


def truth_window(index, kind=None) -> GroundTruthRecord:
    return GroundTruthRecord(unit=TruthUnit.WINDOW, id=index, is_attack=kind is not None, attack_class=kind,
                             category=AttackClass.DOS if kind else None, expected_layer=Layer.ANOMALY if kind else None)


def make_alert(alert_id, event_id=None, window_index=None) -> Alert:
    layer = Layer.SIGNATURE if event_id is not None else Layer.ANOMALY
    return Alert(alert_id=alert_id, event_id=event_id, window_index=window_index, timestamp=1.0, layer=layer,
                 attack_class=AttackClass.DOS, severity=3, policy_version=1)
