# backend/schemas.py - Shared record types: events in, alerts and diagnostics out
import enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from dhcp_codec import DhcpMessage, decode_hex, normalize_mac


class EventKind(str, enum.Enum):
    DHCP = "Dhcp"
    TCP = "Tcp"
    UDP = "Udp"
    ICMP = "Icmp"
    APP_LOG = "AppLog"


class Layer(str, enum.Enum):
    DHCP_VERIFIER = "DhcpVerifier"
    SIGNATURE = "Signature"
    ANOMALY = "Anomaly"


class AttackClass(str, enum.Enum):
    DOS = "DOS"
    PROBE = "Probe"
    U2R = "U2R"
    R2L = "R2L"
    MALWARE = "Malware"
    POLICY_VIOLATION = "PolicyViolation"
    ROGUE_DHCP = "RogueDhcp"
    GATEWAY_REWRITE = "GatewayRewrite"
    STARVATION = "Starvation"


# Classes a signature rule may carry
SIGNATURE_CLASSES = frozenset({
    AttackClass.DOS, AttackClass.PROBE, AttackClass.U2R, AttackClass.R2L,
    AttackClass.MALWARE, AttackClass.POLICY_VIOLATION,
})


class NetworkEvent(BaseModel):
    """One observed record: a DHCP packet, a transport-level flow, or an application log line."""
    model_config = ConfigDict(frozen=True)

    event_id: int = Field(ge=1)
    timestamp: float = Field(ge=0)
    kind: EventKind
    src: Optional[str] = None
    dst: Optional[str] = None
    src_mac: Optional[str] = None
    payload_bytes: int = Field(default=0, ge=0)
    acked: Optional[bool] = None
    duration: Optional[float] = Field(default=None, ge=0)
    fields: Dict[str, str] = Field(default_factory=dict)
    dhcp: Optional[DhcpMessage] = None
    dhcp_wire: Optional[str] = None  # captured bytes, hex

    @field_validator("src_mac")
    @classmethod
    def _mac(cls, v: Optional[str]) -> Optional[str]:
        return None if v is None else normalize_mac(v)

    @model_validator(mode="after")
    def _check(self):
        if (self.dhcp is not None or self.dhcp_wire is not None) and self.kind != EventKind.DHCP:
            raise ValueError("only Dhcp events carry a DHCP message")
        return self

    def dhcp_message(self) -> Optional[DhcpMessage]:
        """Structured message if present, else the decoded wire bytes (may raise MalformedPacket)."""
        if self.dhcp is not None:
            return self.dhcp
        if self.dhcp_wire is not None:
            return decode_hex(self.dhcp_wire)
        return None


class Alert(BaseModel):
    model_config = ConfigDict(frozen=True)

    alert_id: int = Field(ge=1)
    event_id: Optional[int] = None
    window_index: Optional[int] = None
    timestamp: float
    layer: Layer
    attack_class: AttackClass
    severity: int = Field(ge=1, le=5)
    evidence: Dict[str, Any] = Field(default_factory=dict)
    policy_version: int = Field(ge=1)

    @model_validator(mode="after")
    def _one_subject(self):
        if (self.event_id is None) == (self.window_index is None):
            raise ValueError("an alert names exactly one of event_id / window_index")
        if self.layer == Layer.ANOMALY and self.window_index is None:
            raise ValueError("anomaly alerts are per window")
        return self


class Diagnostic(BaseModel):
    """Side-channel record: findings that are not alerts (suppressed, races, decode failures)."""
    kind: str
    event_id: Optional[int] = None
    window_index: Optional[int] = None
    detail: Dict[str, Any] = Field(default_factory=dict)
