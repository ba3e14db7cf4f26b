# backend/verifier.py - Top layer: authorised-server whitelist, offer races, pool starvation
import enum
import logging
import math
from ipaddress import IPv4Address
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from dhcp_codec import DhcpMessage, MsgType, normalize_mac
from errors import DuplicateFingerprint, MixedXid, NotAServerMessage, PolicyInvariantError, PolicyParseError, PoolExhausted

logger = logging.getLogger("verifier")

RACE_BUCKET_SECS = 1.0  # offers with unknown xid group per client MAC and bucket

CLIENT_LEASE_TYPES = frozenset({MsgType.DISCOVER, MsgType.REQUEST})


class ServerVerdict(str, enum.Enum):
    LEGITIMATE = "Legitimate"
    ROGUE = "Rogue"


class ServerFingerprint(BaseModel):
    model_config = ConfigDict(frozen=True)

    server_id: IPv4Address
    mac: str
    label: str = Field(min_length=1, max_length=64)
    gateway: Optional[IPv4Address] = None  # the gateway this server hands out
    dns: Tuple[IPv4Address, ...] = ()

    @field_validator("mac")
    @classmethod
    def _mac(cls, v: str) -> str:
        return normalize_mac(v)


class FingerprintSet:
    """Immutable set of authorised servers keyed by server_id."""

    def __init__(self, fingerprints: Iterable[ServerFingerprint] = ()):
        by_id: Dict[IPv4Address, ServerFingerprint] = {}
        for fp in fingerprints:
            if fp.server_id in by_id:
                raise DuplicateFingerprint(f"server_id {fp.server_id} fingerprinted twice")
            by_id[fp.server_id] = fp
        self._by_id = by_id
        self._gateways = frozenset(fp.gateway for fp in by_id.values() if fp.gateway is not None)

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(sorted(self._by_id.values(), key=lambda fp: fp.server_id))

    def __contains__(self, server_id) -> bool:
        return server_id in self._by_id

    def get(self, server_id) -> Optional[ServerFingerprint]:
        return self._by_id.get(server_id)

    @property
    def authorised_gateways(self) -> frozenset:
        return self._gateways


def load_fingerprints(path: str) -> List[ServerFingerprint]:
    """Read a JSON-lines fingerprint file (one ServerFingerprint per line)."""
    fingerprints: List[ServerFingerprint] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    fingerprints.append(ServerFingerprint.model_validate_json(line))
                except ValidationError as e:
                    raise PolicyInvariantError(f"{path}:{lineno}: bad fingerprint: {e.errors()[0]['msg']}")
    except OSError as e:
        raise PolicyParseError(f"cannot read fingerprint file {path}: {e}")
    logger.info(f"Loaded {len(fingerprints)} server fingerprints from {path}")
    return fingerprints


# ─── Server identity ───

def classify_server_message(msg: DhcpMessage, fingerprints: FingerprintSet,
                            strict_mac: bool = False, src_mac: Optional[str] = None) -> ServerVerdict:
    """Legitimate iff the message's server_id is fingerprinted (and, in strict mode, the sender MAC matches)."""
    if not msg.is_server_message:
        raise NotAServerMessage(f"{msg.msg_type.value} is not server-originated")
    fp = fingerprints.get(msg.server_id) if msg.server_id is not None else None
    if fp is None:
        return ServerVerdict.ROGUE
    if strict_mac and (src_mac is None or normalize_mac(src_mac) != fp.mac):
        return ServerVerdict.ROGUE
    return ServerVerdict.LEGITIMATE


def detect_gateway_rewrite(msg: DhcpMessage, fingerprints: FingerprintSet) -> bool:
    """True when the lease points clients at a gateway no authorised server hands out."""
    if msg.gateway is None or not fingerprints.authorised_gateways:
        return False
    return msg.gateway not in fingerprints.authorised_gateways


# ─── Offer race ───

class RaceFinding(BaseModel):
    model_config = ConfigDict(frozen=True)

    rogue_first: bool
    lead_time: float
    first_server: IPv4Address
    second_server: IPv4Address


def detect_offer_race(offers: Sequence[Tuple[float, DhcpMessage]],
                      fingerprints: FingerprintSet) -> Optional[RaceFinding]:
    offers = [(ts, m) for ts, m in offers if m.msg_type == MsgType.OFFER]
    if not offers:
        return None
    xids = {m.xid for _, m in offers}
    if len(xids) > 1:
        raise MixedXid(f"offers span transaction ids {sorted(xids)}")

    first_ts, first = offers[0]
    for ts, m in offers[1:]:
        if m.server_id != first.server_id:
            return RaceFinding(
                rogue_first=classify_server_message(first, fingerprints) == ServerVerdict.ROGUE,
                lead_time=ts - first_ts,
                first_server=first.server_id,
                second_server=m.server_id,
            )
    return None


def race_key(ts: float, msg: DhcpMessage) -> Hashable:
    """Group offers by xid; xid 0 means unknown and falls back to (client_mac, 1 s bucket)."""
    if msg.xid:
        return ("xid", msg.xid)
    return ("mac", msg.client_mac, math.floor(ts / RACE_BUCKET_SECS))


# ─── Pool starvation ───

class LeasePoolModel:
    """Lease book of one DHCP server: at most pool_size clients hold an address."""

    def __init__(self, pool_size: int):
        if pool_size <= 0:
            raise ValueError("pool_size must be positive")
        self.pool_size = pool_size
        self.leased: Dict[str, IPv4Address] = {}

    def is_exhausted(self) -> bool:
        return len(self.leased) >= self.pool_size

    def lease(self, client_mac: str, ip: IPv4Address) -> IPv4Address:
        mac = normalize_mac(client_mac)
        if mac in self.leased:
            return self.leased[mac]
        if self.is_exhausted():
            raise PoolExhausted(f"pool of {self.pool_size} addresses exhausted")
        self.leased[mac] = ip
        return ip

    def release(self, client_mac: str) -> None:
        self.leased.pop(normalize_mac(client_mac), None)


class StarvationFinding(BaseModel):
    model_config = ConfigDict(frozen=True)

    distinct_macs: int
    threshold: int
    first_ts: float
    last_ts: float


def detect_starvation(window: Sequence[Tuple[float, DhcpMessage]], pool: LeasePoolModel,
                      min_distinct_macs: Optional[int] = None) -> Optional[StarvationFinding]:
    threshold = min(pool.pool_size, min_distinct_macs if min_distinct_macs is not None else pool.pool_size)
    macs = set()
    first_ts = last_ts = None
    for ts, m in window:
        if m.msg_type not in CLIENT_LEASE_TYPES:
            continue
        macs.add(m.client_mac)
        if first_ts is None:
            first_ts = ts
        last_ts = ts
    if first_ts is None or len(macs) < threshold:
        return None
    return StarvationFinding(distinct_macs=len(macs), threshold=threshold,
                             first_ts=first_ts, last_ts=last_ts)
