# backend/attack_sim.py - Seeded generator of labelled event streams (benign mix + attack phases)
# PRNG: numpy PCG64 (see docs/simulator.md). Same spec and seed give byte-identical output.
import enum
import json
import logging
import math
from ipaddress import IPv4Address
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from dhcp_codec import DhcpMessage, MsgType, encode
from errors import InvalidSpec, MalformedEventFile, PoolExhausted
from export_engine import iter_jsonl, read_jsonl, write_jsonl
from schemas import AttackClass, EventKind, Layer, NetworkEvent
from verifier import LeasePoolModel

logger = logging.getLogger("simulator")

MAX_SEED = 2 ** 64 - 1
REQUEST_DELAY = 0.005   # client answers the first offer after this long
BROADCAST = "255.255.255.255"
UNSPECIFIED = "0.0.0.0"


class AttackKind(str, enum.Enum):
    ROGUE_RACE = "RogueRace"
    STARVATION = "Starvation"
    GATEWAY_REWRITE_SNIFF = "GatewayRewriteSniff"
    SMURF = "Smurf"
    SYN_FLOOD = "SynFlood"
    DNS_FLOOD = "DnsFlood"
    PROBE = "Probe"
    U2R = "U2R"
    R2L = "R2L"
    KNOWN_SIGNATURE = "KnownSignature"


# Phases whose overlap makes a window an attack window
WINDOW_ATTACK_KINDS = frozenset({
    AttackKind.SMURF, AttackKind.SYN_FLOOD, AttackKind.DNS_FLOOD,
    AttackKind.PROBE, AttackKind.U2R, AttackKind.R2L,
})

KIND_CATEGORY: Dict[AttackKind, AttackClass] = {
    AttackKind.ROGUE_RACE: AttackClass.ROGUE_DHCP,
    AttackKind.GATEWAY_REWRITE_SNIFF: AttackClass.ROGUE_DHCP,
    AttackKind.STARVATION: AttackClass.STARVATION,
    AttackKind.SMURF: AttackClass.DOS,
    AttackKind.SYN_FLOOD: AttackClass.DOS,
    AttackKind.DNS_FLOOD: AttackClass.DOS,
    AttackKind.PROBE: AttackClass.PROBE,
    AttackKind.U2R: AttackClass.U2R,
    AttackKind.R2L: AttackClass.R2L,
}

KIND_LAYER: Dict[AttackKind, Layer] = {
    AttackKind.ROGUE_RACE: Layer.DHCP_VERIFIER,
    AttackKind.GATEWAY_REWRITE_SNIFF: Layer.DHCP_VERIFIER,
    AttackKind.STARVATION: Layer.DHCP_VERIFIER,
    AttackKind.KNOWN_SIGNATURE: Layer.SIGNATURE,
}

# The three known-attack exemplars the shipped rules describe
KNOWN_SIGNATURE_EVENTS: Tuple[Tuple[Dict[str, str], AttackClass], ...] = (
    ({"service": "telnet", "username": "root", "login": "success"}, AttackClass.POLICY_VIOLATION),
    ({"service": "http", "status_code": "645"}, AttackClass.U2R),
    ({"service": "smtp", "attachment_name": "freepics.exe"}, AttackClass.MALWARE),
)

R2L_USERNAMES = ("guest", "admin", "oracle", "backup", "ftpuser")
R2L_SERVICES = ("telnet", "ftp")
BENIGN_STATUS = ("200", "404", "403")


class NetworkSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    legit_server_id: IPv4Address = IPv4Address("10.0.0.1")
    legit_server_mac: str = "02:00:00:00:01:01"
    legit_gateway: IPv4Address = IPv4Address("10.0.0.1")
    legit_dns: IPv4Address = IPv4Address("10.0.0.1")
    rogue_server_id: IPv4Address = IPv4Address("10.0.0.66")
    rogue_server_mac: str = "02:00:00:00:06:06"
    attacker_ip: IPv4Address = IPv4Address("10.0.0.66")
    victim_ip: IPv4Address = IPv4Address("10.0.0.20")
    app_server_ip: IPv4Address = IPv4Address("10.0.0.10")
    pool_base: IPv4Address = IPv4Address("10.0.0.100")
    pool_size: int = Field(default=50, ge=1)
    rogue_pool_base: IPv4Address = IPv4Address("10.0.0.200")
    legit_latency: float = Field(default=0.05, gt=0)
    rogue_latency: float = Field(default=0.01, gt=0)
    dhcp_rate: float = Field(default=0.2, ge=0)   # benign DHCP transactions per second
    benign_clients: int = Field(default=20, ge=1, le=255)
    lease_secs: int = Field(default=3600, ge=1)


class AttackPhase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: AttackKind
    start: float = Field(ge=0)
    end: float = Field(ge=0)
    intensity: float = Field(default=10.0, gt=0)  # multiple of benign_rate
    params: Dict[str, float] = Field(default_factory=dict)


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(ge=0, le=MAX_SEED)
    duration: float = Field(gt=0)
    benign_rate: float = Field(ge=0)
    window_secs: float = Field(default=1.0, gt=0)
    attacks: List[AttackPhase] = Field(default_factory=list)
    network: NetworkSettings = Field(default_factory=NetworkSettings)


class TruthUnit(str, enum.Enum):
    EVENT = "event"
    WINDOW = "window"


class GroundTruthRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    unit: TruthUnit
    id: int
    is_attack: bool
    attack_class: Optional[AttackKind] = None
    category: Optional[AttackClass] = None
    expected_layer: Optional[Layer] = None


class _Label(NamedTuple):
    kind: AttackKind
    category: AttackClass
    layer: Optional[Layer]


class _Draft(NamedTuple):
    ts: float
    seq: int
    event: Dict[str, Any]
    label: Optional[_Label]


# ─── Validation ───

def window_count(spec: ScenarioSpec) -> int:
    return math.ceil(spec.duration / spec.window_secs - 1e-9)


def _benign_per_window(spec: ScenarioSpec) -> int:
    n = spec.benign_rate * spec.window_secs
    if abs(n - round(n)) > 1e-9:
        raise InvalidSpec(f"benign_rate x window_secs = {n} is not a whole number of events")
    return int(round(n))


def validate_spec(spec: ScenarioSpec) -> None:
    _benign_per_window(spec)
    for phase in spec.attacks:
        if not (0 <= phase.start < phase.end <= spec.duration):
            raise InvalidSpec(f"{phase.kind.value} phase [{phase.start}, {phase.end}) "
                              f"is not inside [0, {spec.duration}]")
        if any(v < 0 for v in phase.params.values()):
            raise InvalidSpec(f"{phase.kind.value} phase has negative parameters")
    net = spec.network
    if net.legit_server_id == net.rogue_server_id:
        raise InvalidSpec("rogue and legitimate server share a server_id")
    if net.rogue_latency >= net.legit_latency and any(
            p.kind == AttackKind.ROGUE_RACE for p in spec.attacks):
        logger.warning("Rogue latency is not below legitimate latency; the rogue will lose its races")


# ─── Generator ───

class _Scenario:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.net = spec.network
        self.rng = np.random.Generator(np.random.PCG64(spec.seed))
        self.drafts: List[_Draft] = []
        self.pool = LeasePoolModel(self.net.pool_size)
        self._rogue_leases = 0

    # ─── helpers ───

    def _add(self, ts: float, label: Optional[_Label] = None, **event: Any) -> None:
        ts = round(ts, 6)
        if ts < self.spec.duration:
            self.drafts.append(_Draft(ts, len(self.drafts), event, label))

    def _uniform(self, low: float, high: float) -> float:
        return float(self.rng.uniform(low, high))

    def _int(self, low: int, high: int) -> int:
        """Integer in [low, high]."""
        return int(self.rng.integers(low, high + 1))

    def _pick(self, options):
        return options[int(self.rng.integers(0, len(options)))]

    def _client_ip(self) -> str:
        return f"10.0.0.{self._int(20, 49)}"

    def _spoofed_ip(self) -> str:
        return f"172.16.{self._int(0, 255)}.{self._int(1, 254)}"

    def _stratified(self, start: float, end: float, count: int) -> Iterator[float]:
        step = (end - start) / count if count else 0.0
        for j in range(count):
            yield start + (j + float(self.rng.random())) * step

    # ─── benign traffic ───

    def benign(self) -> None:
        n = _benign_per_window(self.spec)
        ws = self.spec.window_secs
        for w in range(window_count(self.spec)):
            for ts in self._stratified(w * ws, (w + 1) * ws, n):
                self._benign_event(ts)

    def _benign_event(self, ts: float) -> None:
        roll = float(self.rng.random())
        if roll < 0.5:
            self._add(ts, kind=EventKind.TCP, src=self._client_ip(), dst=str(self.net.app_server_ip),
                      payload_bytes=self._int(200, 460), acked=True, duration=round(self._uniform(0.01, 30.0), 3),
                      fields={"dport": "443"})
        elif roll < 0.8:
            self._add(ts, kind=EventKind.UDP, src=self._client_ip(), dst=str(self.net.legit_dns),
                      payload_bytes=self._int(60, 120), acked=True, fields={"dport": "53"})
        else:
            self._add(ts, kind=EventKind.APP_LOG, src=self._client_ip(), dst=str(self.net.app_server_ip),
                      payload_bytes=self._int(200, 400),
                      fields={"service": "http", "status_code": self._pick(BENIGN_STATUS)})

    # ─── DHCP ───

    def _dhcp(self, ts: float, msg: DhcpMessage, src: str, src_mac: str, label: Optional[_Label]) -> None:
        wire = encode(msg)
        self._add(ts, label, kind=EventKind.DHCP, src=src, dst=BROADCAST, src_mac=src_mac,
                  payload_bytes=len(wire), dhcp_wire=wire.hex())

    def _legit_lease(self, client_mac: str) -> Optional[IPv4Address]:
        candidate = self.net.pool_base + len(self.pool.leased)
        try:
            return self.pool.lease(client_mac, candidate)
        except PoolExhausted:
            return None

    def _rogue_offer_ip(self) -> IPv4Address:
        ip = self.net.rogue_pool_base + (self._rogue_leases % 50)
        self._rogue_leases += 1
        return ip

    def transaction(self, t0: float, client_mac: str, rogue: Optional[_Label] = None,
                    client_label: Optional[_Label] = None, rewrite_gateway: bool = False) -> None:
        """Discover, offers from the legitimate server (if it has a free address) and the rogue, Request, Ack."""
        net = self.net
        xid = int(self.rng.integers(1, 2 ** 32))
        self._dhcp(t0, DhcpMessage(msg_type=MsgType.DISCOVER, xid=xid, client_mac=client_mac),
                   UNSPECIFIED, client_mac, client_label)

        offers: List[Tuple[float, DhcpMessage, str, Optional[_Label]]] = []
        legit_ip = self._legit_lease(client_mac)
        if legit_ip is not None:
            offers.append((t0 + net.legit_latency, DhcpMessage(
                msg_type=MsgType.OFFER, xid=xid, client_mac=client_mac, your_ip=legit_ip,
                server_id=net.legit_server_id, gateway=net.legit_gateway, dns=(net.legit_dns,),
                lease_secs=net.lease_secs,
            ), net.legit_server_mac, None))
        if rogue is not None:
            offers.append((t0 + net.rogue_latency, DhcpMessage(
                msg_type=MsgType.OFFER, xid=xid, client_mac=client_mac, your_ip=self._rogue_offer_ip(),
                server_id=net.rogue_server_id,
                gateway=net.attacker_ip if rewrite_gateway else net.legit_gateway,
                dns=(net.attacker_ip,), lease_secs=600,
            ), net.rogue_server_mac, rogue))
        if not offers:
            return

        for ts, offer, mac, label in offers:
            self._dhcp(ts, offer, str(offer.server_id), mac, label)

        ts, chosen, server_mac, label = min(offers, key=lambda o: o[0])
        request_ts = ts + REQUEST_DELAY
        self._dhcp(request_ts, DhcpMessage(msg_type=MsgType.REQUEST, xid=xid, client_mac=client_mac),
                   UNSPECIFIED, client_mac, client_label)
        latency = net.rogue_latency if label is not None else net.legit_latency
        self._dhcp(request_ts + latency, chosen.model_copy(update={"msg_type": MsgType.ACK}),
                   str(chosen.server_id), server_mac, label)

    def dhcp_traffic(self) -> None:
        """Benign and attack DHCP transactions, replayed in start order so the lease pool sees them causally."""
        pending: List[Tuple[float, int, Dict[str, Any]]] = []
        net = self.net
        benign_count = int(self.spec.duration * net.dhcp_rate)
        for ts in self._stratified(0.0, benign_count / net.dhcp_rate if benign_count else 0.0, benign_count):
            mac = f"02:00:00:00:aa:{self._int(0, net.benign_clients - 1):02x}"
            pending.append((ts, len(pending), {"client_mac": mac}))

        for phase in self.spec.attacks:
            label = _Label(phase.kind, KIND_CATEGORY.get(phase.kind), KIND_LAYER.get(phase.kind))
            if phase.kind in (AttackKind.ROGUE_RACE, AttackKind.GATEWAY_REWRITE_SNIFF):
                count = int((phase.end - phase.start) * phase.params.get("rate", 1.0))
                for ts in self._stratified(phase.start, phase.end, count):
                    mac = f"02:00:00:00:aa:{self._int(0, net.benign_clients - 1):02x}"
                    pending.append((ts, len(pending), {
                        "client_mac": mac, "rogue": label,
                        "rewrite_gateway": phase.kind == AttackKind.GATEWAY_REWRITE_SNIFF,
                    }))
            elif phase.kind == AttackKind.STARVATION:
                macs = int(phase.params.get("macs", net.pool_size + 10))
                # Forged clients below the distinct-MAC threshold are not yet detectable
                threshold = int(phase.params.get("threshold", net.pool_size))
                quiet = label._replace(layer=None)
                prefix = self._int(0, 255)
                for i, ts in enumerate(self._stratified(phase.start, phase.end, macs)):
                    mac = f"de:ad:{prefix:02x}:{(i >> 16) & 0xFF:02x}:{(i >> 8) & 0xFF:02x}:{i & 0xFF:02x}"
                    pending.append((ts, len(pending), {
                        "client_mac": mac, "client_label": label if i >= threshold - 1 else quiet,
                    }))

        for ts, _, kwargs in sorted(pending, key=lambda p: (p[0], p[1])):
            self.transaction(ts, **kwargs)

    # ─── transport / application attacks ───

    def _attack_event(self, kind: AttackKind, ts: float, label: _Label) -> None:
        net = self.net
        if kind == AttackKind.SMURF:
            self._add(ts, label, kind=EventKind.ICMP, src=f"10.0.0.{self._int(2, 254)}", dst=str(net.victim_ip),
                      payload_bytes=self._int(64, 128), fields={"icmp_type": "echo-reply"})
        elif kind == AttackKind.SYN_FLOOD:
            self._add(ts, label, kind=EventKind.TCP, src=self._spoofed_ip(), dst=str(net.app_server_ip),
                      payload_bytes=self._int(40, 60), acked=False, duration=0.0,
                      fields={"flags": "S", "dport": "443"})
        elif kind == AttackKind.DNS_FLOOD:
            self._add(ts, label, kind=EventKind.UDP, src=self._spoofed_ip(), dst=str(net.legit_dns),
                      payload_bytes=self._int(60, 120), acked=False, fields={"dport": "53"})
        elif kind == AttackKind.PROBE:
            self._add(ts, label, kind=EventKind.TCP, src=str(net.attacker_ip), dst=str(net.victim_ip),
                      payload_bytes=self._int(1200, 1460), acked=True, duration=round(self._uniform(0.01, 1.0), 3),
                      fields={"dport": str(self._int(1, 65535))})
        elif kind == AttackKind.U2R:
            self._add(ts, label, kind=EventKind.TCP, src=str(net.attacker_ip), dst=str(net.app_server_ip),
                      payload_bytes=self._int(200, 460), acked=True, duration=round(self._uniform(400.0, 3600.0), 3),
                      fields={"dport": "22"})
        elif kind == AttackKind.R2L:
            self._add(ts, label, kind=EventKind.APP_LOG, src=str(net.attacker_ip), dst=str(net.app_server_ip),
                      payload_bytes=self._int(60, 200),
                      fields={"service": self._pick(R2L_SERVICES), "username": self._pick(R2L_USERNAMES),
                              "login": "failed"})

    def attacks(self) -> None:
        ws = self.spec.window_secs
        for phase in self.spec.attacks:
            if phase.kind == AttackKind.KNOWN_SIGNATURE:
                slots = max(1, int((phase.end - phase.start) / ws))
                for ts in self._stratified(phase.start, phase.start + slots * ws, slots):
                    for offset, (fields, category) in enumerate(KNOWN_SIGNATURE_EVENTS):
                        self._add(ts + offset * 1e-3, _Label(phase.kind, category, Layer.SIGNATURE),
                                  kind=EventKind.APP_LOG, src=str(self.net.attacker_ip),
                                  dst=str(self.net.app_server_ip), payload_bytes=self._int(200, 400),
                                  fields=dict(fields))
                continue
            if phase.kind not in WINDOW_ATTACK_KINDS:
                continue
            label = _Label(phase.kind, KIND_CATEGORY[phase.kind], Layer.ANOMALY)
            rate = phase.params.get("rate", phase.intensity * self.spec.benign_rate)
            count = int(round(rate * (phase.end - phase.start)))
            for ts in self._stratified(phase.start, phase.end, count):
                self._attack_event(phase.kind, ts, label)

    # ─── assembly ───

    def build(self) -> Tuple[List[NetworkEvent], List[GroundTruthRecord]]:
        self.benign()
        self.dhcp_traffic()
        self.attacks()

        events: List[NetworkEvent] = []
        truth: List[GroundTruthRecord] = []
        for event_id, draft in enumerate(sorted(self.drafts, key=lambda d: (d.ts, d.seq)), start=1):
            events.append(NetworkEvent(event_id=event_id, timestamp=draft.ts, **draft.event))
            label = draft.label
            truth.append(GroundTruthRecord(
                unit=TruthUnit.EVENT, id=event_id, is_attack=label is not None,
                attack_class=label.kind if label else None,
                category=label.category if label else None,
                expected_layer=label.layer if label else None,
            ))
        truth.extend(window_truth(self.spec))
        return events, truth


def window_truth(spec: ScenarioSpec) -> List[GroundTruthRecord]:
    ws = spec.window_secs
    phases = sorted((p for p in spec.attacks if p.kind in WINDOW_ATTACK_KINDS), key=lambda p: (p.start, p.end))
    records = []
    for w in range(window_count(spec)):
        lo, hi = w * ws, (w + 1) * ws
        hit = next((p for p in phases if p.start < hi and p.end > lo), None)
        records.append(GroundTruthRecord(
            unit=TruthUnit.WINDOW, id=w, is_attack=hit is not None,
            attack_class=hit.kind if hit else None,
            category=KIND_CATEGORY[hit.kind] if hit else None,
            expected_layer=Layer.ANOMALY if hit else None,
        ))
    return records


def generate(spec: ScenarioSpec) -> Tuple[List[NetworkEvent], List[GroundTruthRecord]]:
    validate_spec(spec)
    events, truth = _Scenario(spec).build()
    attacks = sum(1 for r in truth if r.unit == TruthUnit.EVENT and r.is_attack)
    logger.info(f"Generated {len(events)} events ({attacks} attack) over {window_count(spec)} windows, seed {spec.seed}")
    return events, truth


# ─── Files ───

def load_scenario_spec(path: str) -> ScenarioSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        return ScenarioSpec.model_validate(doc)
    except OSError as e:
        raise InvalidSpec(f"cannot read scenario spec {path}: {e}")
    except json.JSONDecodeError as e:
        raise InvalidSpec(f"scenario spec {path} is not JSON: {e}")
    except ValidationError as e:
        raise InvalidSpec(f"scenario spec {path}: {e}")


def write_scenario(events: List[NetworkEvent], truth: List[GroundTruthRecord],
                   events_path: str, truth_path: str) -> None:
    write_jsonl(events_path, events)
    write_jsonl(truth_path, truth)
    logger.info(f"Wrote {len(events)} events to {events_path} and {len(truth)} truth records to {truth_path}")


def replay(path: str) -> Iterator[NetworkEvent]:
    """Events in stored order; unreadable or truncated files raise MalformedEventFile."""
    return iter_jsonl(path, NetworkEvent, MalformedEventFile)


def load_truth(path: str) -> List[GroundTruthRecord]:
    return read_jsonl(path, GroundTruthRecord, MalformedEventFile)
