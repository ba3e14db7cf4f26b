# backend/dhcp_codec.py - DHCP message subset: typed model + fixed-layout wire codec
# Layout (docs/wire-format.md): op | xid | client_mac | your_ip | magic | TLV options | end
import io
import enum
import ipaddress
from ipaddress import IPv4Address
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors import InvariantViolation, MalformedPacket

MAGIC = b"\x63\x82\x53\x63"
HEADER_LEN = 1 + 4 + 6 + 4

OP_CLIENT = 1
OP_SERVER = 2

OPT_PAD = 0
OPT_GATEWAY = 3
OPT_DNS = 6
OPT_LEASE = 51
OPT_MSG_TYPE = 53
OPT_SERVER_ID = 54
OPT_END = 255

KNOWN_OPTIONS = {OPT_GATEWAY, OPT_DNS, OPT_LEASE, OPT_MSG_TYPE, OPT_SERVER_ID}
MAX_DNS = 63  # 63 * 4 = 252 fits the one-byte length
MAX_U32 = 0xFFFFFFFF
UNSET_IP = IPv4Address("0.0.0.0")


class MsgType(str, enum.Enum):
    DISCOVER = "Discover"
    OFFER = "Offer"
    REQUEST = "Request"
    ACK = "Ack"
    NAK = "Nak"
    RELEASE = "Release"


MSG_TYPE_CODES: Dict[MsgType, int] = {
    MsgType.DISCOVER: 1,
    MsgType.OFFER: 2,
    MsgType.REQUEST: 3,
    MsgType.ACK: 5,
    MsgType.NAK: 6,
    MsgType.RELEASE: 7,
}
CODE_MSG_TYPES: Dict[int, MsgType] = {code: t for t, code in MSG_TYPE_CODES.items()}

SERVER_TYPES = frozenset({MsgType.OFFER, MsgType.ACK, MsgType.NAK})
CLIENT_TYPES = frozenset({MsgType.DISCOVER, MsgType.REQUEST, MsgType.RELEASE})


def bytes_to_mac(b: bytes) -> str:
    return ":".join(f"{octet:02x}" for octet in b)


def mac_to_bytes(mac: str) -> bytes:
    return bytes.fromhex(mac.replace(":", "").strip())


def normalize_mac(value: str) -> str:
    parts = str(value).strip().lower().replace("-", ":").split(":")
    if len(parts) != 6 or any(len(p) != 2 for p in parts):
        raise ValueError(f"not a 6-byte hardware address: {value!r}")
    try:
        bytes.fromhex("".join(parts))
    except ValueError:
        raise ValueError(f"not a 6-byte hardware address: {value!r}")
    return ":".join(parts)


class DhcpMessage(BaseModel):
    """One DHCP message of the supported subset.

    Field types are checked on construction; the per-type invariants (server_id on
    Offer/Ack, no your_ip on Discover/Request, positive lease) are checked by
    `check_invariants`, which `encode` and `decode` both run.
    """
    model_config = ConfigDict(frozen=True)

    msg_type: MsgType
    xid: int = Field(ge=0, le=MAX_U32)
    client_mac: str
    your_ip: Optional[IPv4Address] = None
    server_id: Optional[IPv4Address] = None
    gateway: Optional[IPv4Address] = None
    dns: Tuple[IPv4Address, ...] = ()
    lease_secs: Optional[int] = Field(default=None, ge=0)

    @field_validator("client_mac")
    @classmethod
    def _mac(cls, v: str) -> str:
        return normalize_mac(v)

    @property
    def is_server_message(self) -> bool:
        return self.msg_type in SERVER_TYPES


def check_invariants(msg: DhcpMessage) -> None:
    if msg.msg_type in (MsgType.OFFER, MsgType.ACK) and msg.server_id is None:
        raise InvariantViolation(f"{msg.msg_type.value} must carry server_id")
    if msg.msg_type in (MsgType.DISCOVER, MsgType.REQUEST) and msg.your_ip is not None:
        raise InvariantViolation(f"{msg.msg_type.value} carries no your_ip")
    if msg.your_ip == UNSET_IP:
        raise InvariantViolation("your_ip 0.0.0.0 is reserved for 'unset'")
    if msg.lease_secs is not None and not (0 < msg.lease_secs <= MAX_U32):
        raise InvariantViolation(f"lease_secs must be in 1..{MAX_U32}, got {msg.lease_secs}")
    if len(msg.dns) > MAX_DNS:
        raise InvariantViolation(f"at most {MAX_DNS} dns servers fit one option")


def _op_for(msg_type: MsgType) -> int:
    return OP_SERVER if msg_type in SERVER_TYPES else OP_CLIENT


# ─── Encoder ───

def encode(msg: DhcpMessage) -> bytes:
    check_invariants(msg)

    t = _op_for(msg.msg_type).to_bytes(1, byteorder="big")
    t += msg.xid.to_bytes(4, byteorder="big")
    t += mac_to_bytes(msg.client_mac)
    t += (msg.your_ip or UNSET_IP).packed
    t += MAGIC

    # Ascending option-code order
    if msg.gateway is not None:
        t += bytes([OPT_GATEWAY, 4]) + msg.gateway.packed
    if msg.dns:
        t += bytes([OPT_DNS, 4 * len(msg.dns)]) + b"".join(ip.packed for ip in msg.dns)
    if msg.lease_secs is not None:
        t += bytes([OPT_LEASE, 4]) + msg.lease_secs.to_bytes(4, byteorder="big")
    t += bytes([OPT_MSG_TYPE, 1, MSG_TYPE_CODES[msg.msg_type]])
    if msg.server_id is not None:
        t += bytes([OPT_SERVER_ID, 4]) + msg.server_id.packed
    t += bytes([OPT_END])
    return t


# ─── Decoder ───

def _read(buff: io.BytesIO, n: int, what: str) -> bytes:
    chunk = buff.read(n)
    if len(chunk) != n:
        raise MalformedPacket(f"truncated {what}: wanted {n} bytes, got {len(chunk)}")
    return chunk


def _parse_options(buff: io.BytesIO) -> Dict[int, bytes]:
    options: Dict[int, bytes] = {}
    while True:
        code = buff.read(1)
        if not code:
            raise MalformedPacket("options region ends without end marker")
        code = code[0]
        if code == OPT_PAD:
            continue
        if code == OPT_END:
            trailer = buff.read()
            if trailer.strip(b"\x00"):
                raise MalformedPacket("non-padding bytes after end marker")
            return options
        length = _read(buff, 1, f"length of option {code}")[0]
        value = _read(buff, length, f"option {code}")
        if code not in KNOWN_OPTIONS:
            continue  # unknown options are skipped
        if code in options:
            raise MalformedPacket(f"duplicate option {code}")
        options[code] = value


def _ipv4(value: bytes, code: int) -> IPv4Address:
    if len(value) != 4:
        raise MalformedPacket(f"option {code} must be 4 bytes, got {len(value)}")
    return ipaddress.IPv4Address(value)


def decode(data: bytes) -> DhcpMessage:
    """Parse wire bytes; any defect raises MalformedPacket, never anything else."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise MalformedPacket(f"expected bytes, got {type(data).__name__}")
    buff = io.BytesIO(bytes(data))

    header = _read(buff, HEADER_LEN, "header")
    op = header[0]
    if op not in (OP_CLIENT, OP_SERVER):
        raise MalformedPacket(f"bad op {op}")
    xid = int.from_bytes(header[1:5], byteorder="big")
    client_mac = bytes_to_mac(header[5:11])
    your_ip = ipaddress.IPv4Address(header[11:15])

    if _read(buff, 4, "magic") != MAGIC:
        raise MalformedPacket("bad magic cookie")

    options = _parse_options(buff)

    raw_type = options.get(OPT_MSG_TYPE)
    if raw_type is None:
        raise MalformedPacket("missing message-type option")
    if len(raw_type) != 1 or raw_type[0] not in CODE_MSG_TYPES:
        raise MalformedPacket(f"invalid message type {raw_type.hex()}")
    msg_type = CODE_MSG_TYPES[raw_type[0]]
    if _op_for(msg_type) != op:
        raise MalformedPacket(f"op {op} does not match {msg_type.value}")

    dns: Tuple[IPv4Address, ...] = ()
    if OPT_DNS in options:
        raw = options[OPT_DNS]
        if not raw or len(raw) % 4:
            raise MalformedPacket(f"dns option length {len(raw)} is not a positive multiple of 4")
        dns = tuple(ipaddress.IPv4Address(raw[i:i + 4]) for i in range(0, len(raw), 4))

    lease = None
    if OPT_LEASE in options:
        raw = options[OPT_LEASE]
        if len(raw) != 4:
            raise MalformedPacket(f"lease option must be 4 bytes, got {len(raw)}")
        lease = int.from_bytes(raw, byteorder="big")

    msg = DhcpMessage(
        msg_type=msg_type,
        xid=xid,
        client_mac=client_mac,
        your_ip=None if your_ip == UNSET_IP else your_ip,
        server_id=_ipv4(options[OPT_SERVER_ID], OPT_SERVER_ID) if OPT_SERVER_ID in options else None,
        gateway=_ipv4(options[OPT_GATEWAY], OPT_GATEWAY) if OPT_GATEWAY in options else None,
        dns=dns,
        lease_secs=lease,
    )
    try:
        check_invariants(msg)
    except InvariantViolation as e:
        raise MalformedPacket(str(e))
    return msg


def encode_hex(msg: DhcpMessage) -> str:
    return encode(msg).hex()


def decode_hex(text: str) -> DhcpMessage:
    try:
        data = bytes.fromhex(text)
    except (ValueError, TypeError) as e:
        raise MalformedPacket(f"wire payload is not hex: {e}")
    return decode(data)
