"""Typed message model and deterministic binary codec for the E2 control link.

Frame layout (everything big-endian):

    magic 0xE2AF (2B) | version 0x01 (1B) | msg_type (1B) | payload_len (4B) | payload

Message types: 0x01 E2SetupRequest, 0x02 E2SetupResponse, 0x03 SubscriptionRequest,
0x04 SubscriptionResponse, 0x05 RicIndication, 0x06 RicControlRequest,
0x07 RicControlAcknowledge.

Payload conventions: integers are fixed-width big-endian; strings are a u16 byte
length followed by UTF-8 bytes; lists are a u16 element count followed by the
elements in order; floats are IEEE-754 f64 big-endian.  Encoding is a pure
function: identical messages yield identical bytes.  Worked hex examples live
in docs/wire-format.md.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Union

MAGIC = 0xE2AF
VERSION = 0x01
FRAME_HEADER_LEN = 8

# RAN function ids of the two service models carried over this link.
KPM_FUNCTION_ID = 200
RC_FUNCTION_ID = 300

_U8_MAX = 0xFF
_U16_MAX = 0xFFFF
_U32_MAX = 0xFFFFFFFF
_U64_MAX = 0xFFFFFFFFFFFFFFFF

_PLMN_RE = re.compile(r"\d+-\d+")


class MsgType(IntEnum):
    SETUP_REQUEST = 0x01
    SETUP_RESPONSE = 0x02
    SUBSCRIPTION_REQUEST = 0x03
    SUBSCRIPTION_RESPONSE = 0x04
    INDICATION = 0x05
    CONTROL_REQUEST = 0x06
    CONTROL_ACKNOWLEDGE = 0x07


class NodeKind(IntEnum):
    ENB = 0x00
    GNB = 0x01


class UnitType(IntEnum):
    CU_CP = 0x00
    CU_UP = 0x01
    DU = 0x02


class ControlKind(IntEnum):
    HANDOVER = 0x00


class AckStatus(IntEnum):
    SUCCESS = 0x00
    REJECTED = 0x01


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class WireError(Exception):
    """Base class for codec errors."""


class EncodeError(WireError):
    """A message cannot be represented on the wire (oversized string or list)."""


class DecodeError(WireError):
    """Base class for decoder errors."""


class BadMagic(DecodeError):
    pass


class UnsupportedVersion(DecodeError):
    pass


class TruncatedFrame(DecodeError):
    """More bytes are required; ``needed`` is the full frame length in bytes."""

    def __init__(self, needed: int):
        super().__init__(f"truncated frame: need {needed} bytes")
        self.needed = needed


class MalformedPayload(DecodeError):
    """The frame is complete but its payload is internally inconsistent."""


# ---------------------------------------------------------------------------
# Field validation helpers
# ---------------------------------------------------------------------------

def _check_uint(value: int, bits: int, name: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"{name} must be an int, got {type(value).__name__}")
    if not 0 <= value <= (1 << bits) - 1:
        raise ValueError(f"{name}={value} outside u{bits} range")


def _check_unique_names(pairs, scope: str) -> None:
    names = [name for name, _ in pairs]
    if len(names) != len(set(names)):
        raise ValueError(f"duplicate measurement name in {scope}")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalNodeId:
    """Identity of one base station: PLMN, eNB/gNB kind and numeric id."""

    plmn: str
    node_kind: NodeKind
    node_id: int

    def __post_init__(self):
        if not self.plmn or not _PLMN_RE.fullmatch(self.plmn):
            raise ValueError(f"plmn {self.plmn!r} must match digits-digits")
        _check_uint(self.node_id, 32, "node_id")
        object.__setattr__(self, "node_kind", NodeKind(self.node_kind))


@dataclass(frozen=True)
class RanFunctionDefinition:
    """A node capability advertised at setup (200 = KPM report, 300 = RC control).

    Unknown function ids are carried opaquely by the codec; admission policy
    lives in the agents and the RIC.
    """

    function_id: int
    revision: int
    description: str

    def __post_init__(self):
        _check_uint(self.function_id, 16, "function_id")
        _check_uint(self.revision, 8, "revision")


@dataclass(frozen=True)
class KpmHeader:
    timestamp_ms: int
    node_display_id: str

    def __post_init__(self):
        _check_uint(self.timestamp_ms, 64, "timestamp_ms")
        if self.timestamp_ms == 0:
            raise ValueError("timestamp_ms must be > 0")
        if not self.node_display_id:
            raise ValueError("node_display_id must be non-empty")


@dataclass(frozen=True)
class KpmBody:
    """One unit's measurements: cell-level pairs plus per-UE item lists."""

    unit_type: UnitType
    cell_measurements: tuple
    ue_measurements: tuple

    def __init__(self, unit_type, cell_measurements=(), ue_measurements=()):
        object.__setattr__(self, "unit_type", UnitType(unit_type))
        object.__setattr__(
            self,
            "cell_measurements",
            tuple((str(n), float(v)) for n, v in cell_measurements),
        )
        object.__setattr__(
            self,
            "ue_measurements",
            tuple(
                (int(ue), tuple((str(n), float(v)) for n, v in items))
                for ue, items in ue_measurements
            ),
        )
        _check_unique_names(self.cell_measurements, "cell scope")
        for ue_id, items in self.ue_measurements:
            _check_uint(ue_id, 64, "ue_id")
            _check_unique_names(items, f"ue {ue_id} scope")

    def cell_value(self, name: str) -> float:
        for n, v in self.cell_measurements:
            if n == name:
                return v
        raise KeyError(name)

    def ue_items(self) -> dict:
        return {ue: dict(items) for ue, items in self.ue_measurements}


@dataclass(frozen=True)
class ControlAction:
    kind: ControlKind
    ue_id: int
    source_cell: int
    target_cell: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ControlKind(self.kind))
        _check_uint(self.ue_id, 64, "ue_id")
        _check_uint(self.source_cell, 32, "source_cell")
        _check_uint(self.target_cell, 32, "target_cell")
        if self.source_cell == self.target_cell:
            raise ValueError("source_cell must differ from target_cell")


# ---------------------------------------------------------------------------
# Messages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class E2SetupRequest:
    node: GlobalNodeId
    functions: tuple

    def __init__(self, node, functions=()):
        object.__setattr__(self, "node", node)
        object.__setattr__(self, "functions", tuple(functions))


@dataclass(frozen=True)
class E2SetupResponse:
    accepted_function_ids: tuple

    def __init__(self, accepted_function_ids=()):
        ids = tuple(int(i) for i in accepted_function_ids)
        for i in ids:
            _check_uint(i, 16, "accepted function id")
        object.__setattr__(self, "accepted_function_ids", ids)


@dataclass(frozen=True)
class SubscriptionRequest:
    request_id: int
    function_id: int
    report_period_ms: int

    def __post_init__(self):
        _check_uint(self.request_id, 32, "request_id")
        _check_uint(self.function_id, 16, "function_id")
        _check_uint(self.report_period_ms, 32, "report_period_ms")


@dataclass(frozen=True)
class SubscriptionResponse:
    request_id: int
    admitted: bool

    def __post_init__(self):
        _check_uint(self.request_id, 32, "request_id")
        object.__setattr__(self, "admitted", bool(self.admitted))


@dataclass(frozen=True)
class RicIndication:
    request_id: int
    function_id: int
    sequence_number: int
    header: KpmHeader
    body: KpmBody

    def __post_init__(self):
        _check_uint(self.request_id, 32, "request_id")
        _check_uint(self.function_id, 16, "function_id")
        _check_uint(self.sequence_number, 32, "sequence_number")


@dataclass(frozen=True)
class RicControlRequest:
    function_id: int
    action: ControlAction

    def __post_init__(self):
        _check_uint(self.function_id, 16, "function_id")


@dataclass(frozen=True)
class RicControlAcknowledge:
    status: AckStatus
    detail: str

    def __post_init__(self):
        object.__setattr__(self, "status", AckStatus(self.status))


E2Message = Union[
    E2SetupRequest,
    E2SetupResponse,
    SubscriptionRequest,
    SubscriptionResponse,
    RicIndication,
    RicControlRequest,
    RicControlAcknowledge,
]


@dataclass(frozen=True)
class KpmReport:
    """A header/body pair as handed from the statistics calculators to an agent."""

    header: KpmHeader
    body: KpmBody


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def _w_u8(out: list, v: int) -> None:
    out.append(struct.pack(">B", v))


def _w_u16(out: list, v: int) -> None:
    out.append(struct.pack(">H", v))


def _w_u32(out: list, v: int) -> None:
    out.append(struct.pack(">I", v))


def _w_u64(out: list, v: int) -> None:
    out.append(struct.pack(">Q", v))


def _w_f64(out: list, v: float) -> None:
    out.append(struct.pack(">d", v))


def _w_str(out: list, s: str) -> None:
    raw = s.encode("utf-8")
    if len(raw) > _U16_MAX:
        raise EncodeError(f"string of {len(raw)} bytes exceeds u16 length")
    _w_u16(out, len(raw))
    out.append(raw)


def _w_count(out: list, n: int, what: str) -> None:
    if n > _U16_MAX:
        raise EncodeError(f"{what} with {n} entries exceeds u16 count")
    _w_u16(out, n)


def _w_node_id(out: list, node: GlobalNodeId) -> None:
    _w_str(out, node.plmn)
    _w_u8(out, node.node_kind)
    _w_u32(out, node.node_id)


def _w_measurements(out: list, pairs) -> None:
    _w_count(out, len(pairs), "measurement list")
    for name, value in pairs:
        _w_str(out, name)
        _w_f64(out, value)


def _encode_payload(msg: E2Message) -> tuple:
    out: list = []
    if isinstance(msg, E2SetupRequest):
        _w_node_id(out, msg.node)
        _w_count(out, len(msg.functions), "function list")
        for fn in msg.functions:
            _w_u16(out, fn.function_id)
            _w_u8(out, fn.revision)
            _w_str(out, fn.description)
        return MsgType.SETUP_REQUEST, out
    if isinstance(msg, E2SetupResponse):
        _w_count(out, len(msg.accepted_function_ids), "accepted id list")
        for fid in msg.accepted_function_ids:
            _w_u16(out, fid)
        return MsgType.SETUP_RESPONSE, out
    if isinstance(msg, SubscriptionRequest):
        _w_u32(out, msg.request_id)
        _w_u16(out, msg.function_id)
        _w_u32(out, msg.report_period_ms)
        return MsgType.SUBSCRIPTION_REQUEST, out
    if isinstance(msg, SubscriptionResponse):
        _w_u32(out, msg.request_id)
        _w_u8(out, 1 if msg.admitted else 0)
        return MsgType.SUBSCRIPTION_RESPONSE, out
    if isinstance(msg, RicIndication):
        _w_u32(out, msg.request_id)
        _w_u16(out, msg.function_id)
        _w_u32(out, msg.sequence_number)
        _w_u64(out, msg.header.timestamp_ms)
        _w_str(out, msg.header.node_display_id)
        _w_u8(out, msg.body.unit_type)
        _w_measurements(out, msg.body.cell_measurements)
        _w_count(out, len(msg.body.ue_measurements), "ue measurement list")
        for ue_id, items in msg.body.ue_measurements:
            _w_u64(out, ue_id)
            _w_measurements(out, items)
        return MsgType.INDICATION, out
    if isinstance(msg, RicControlRequest):
        _w_u16(out, msg.function_id)
        _w_u8(out, msg.action.kind)
        _w_u64(out, msg.action.ue_id)
        _w_u32(out, msg.action.source_cell)
        _w_u32(out, msg.action.target_cell)
        return MsgType.CONTROL_REQUEST, out
    if isinstance(msg, RicControlAcknowledge):
        _w_u8(out, msg.status)
        _w_str(out, msg.detail)
        return MsgType.CONTROL_ACKNOWLEDGE, out
    raise EncodeError(f"not an E2 message: {type(msg).__name__}")


def encode(msg: E2Message) -> bytes:
    """Encode one message into one frame. Pure: equal inputs, equal bytes."""
    msg_type, chunks = _encode_payload(msg)
    payload = b"".join(chunks)
    return struct.pack(">HBBI", MAGIC, VERSION, msg_type, len(payload)) + payload


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

class _Reader:
    """Bounded cursor over one frame's payload; overruns are malformed."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise MalformedPayload("payload field extends past frame end")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack(">d", self._take(8))[0]

    def string(self) -> str:
        n = self.u16()
        try:
            return self._take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedPayload(f"invalid UTF-8 in string: {exc}") from exc

    def done(self) -> bool:
        return self._pos == len(self._data)


def _r_measurements(r: _Reader) -> list:
    return [(r.string(), r.f64()) for _ in range(r.u16())]


def _decode_payload(msg_type: int, payload: bytes) -> E2Message:
    r = _Reader(payload)
    if msg_type == MsgType.SETUP_REQUEST:
        plmn = r.string()
        kind = r.u8()
        node_id = r.u32()
        functions = [
            RanFunctionDefinition(r.u16(), r.u8(), r.string())
            for _ in range(r.u16())
        ]
        msg: E2Message = E2SetupRequest(GlobalNodeId(plmn, kind, node_id), functions)
    elif msg_type == MsgType.SETUP_RESPONSE:
        msg = E2SetupResponse([r.u16() for _ in range(r.u16())])
    elif msg_type == MsgType.SUBSCRIPTION_REQUEST:
        msg = SubscriptionRequest(r.u32(), r.u16(), r.u32())
    elif msg_type == MsgType.SUBSCRIPTION_RESPONSE:
        request_id = r.u32()
        flag = r.u8()
        if flag > 1:
            raise MalformedPayload(f"admitted flag must be 0 or 1, got {flag}")
        msg = SubscriptionResponse(request_id, flag == 1)
    elif msg_type == MsgType.INDICATION:
        request_id = r.u32()
        function_id = r.u16()
        sequence_number = r.u32()
        header = KpmHeader(r.u64(), r.string())
        unit = r.u8()
        cell = _r_measurements(r)
        ue = [(r.u64(), _r_measurements(r)) for _ in range(r.u16())]
        msg = RicIndication(
            request_id, function_id, sequence_number, header, KpmBody(unit, cell, ue)
        )
    elif msg_type == MsgType.CONTROL_REQUEST:
        function_id = r.u16()
        action = ControlAction(r.u8(), r.u64(), r.u32(), r.u32())
        msg = RicControlRequest(function_id, action)
    elif msg_type == MsgType.CONTROL_ACKNOWLEDGE:
        msg = RicControlAcknowledge(r.u8(), r.string())
    else:
        raise MalformedPayload(f"unknown message type 0x{msg_type:02x}")
    if not r.done():
        raise MalformedPayload("trailing bytes after payload fields")
    return msg


def decode(data: bytes) -> tuple:
    """Decode exactly one frame from ``data``.

    Returns ``(message, bytes_consumed)``.  Raises a typed ``DecodeError`` on
    any malformed input; never consumes a partial frame.
    """
    if len(data) < 2:
        raise TruncatedFrame(FRAME_HEADER_LEN)
    magic = struct.unpack(">H", data[:2])[0]
    if magic != MAGIC:
        raise BadMagic(f"bad magic 0x{magic:04x}")
    if len(data) < 3:
        raise TruncatedFrame(FRAME_HEADER_LEN)
    if data[2] != VERSION:
        raise UnsupportedVersion(f"unsupported version 0x{data[2]:02x}")
    if len(data) < FRAME_HEADER_LEN:
        raise TruncatedFrame(FRAME_HEADER_LEN)
    msg_type = data[3]
    payload_len = struct.unpack(">I", data[4:8])[0]
    frame_len = FRAME_HEADER_LEN + payload_len
    if len(data) < frame_len:
        raise TruncatedFrame(frame_len)
    payload = data[FRAME_HEADER_LEN:frame_len]
    try:
        msg = _decode_payload(msg_type, payload)
    except ValueError as exc:
        # Field-level invariant violations surface as malformed payloads.
        raise MalformedPayload(str(exc)) from exc
    return msg, frame_len


class FrameBuffer:
    """Stream reassembler: feed raw bytes, pop complete decoded messages.

    ``max_frame`` guards against absurd length prefixes from a broken or
    hostile peer; exceeding it raises MalformedPayload so the owner can drop
    the connection instead of buffering gigabytes.
    """

    def __init__(self, max_frame: int = 1 << 24):
        self._buf = bytearray()
        self._max_frame = max_frame

    def feed(self, data: bytes) -> list:
        self._buf.extend(data)
        frames = []
        while True:
            try:
                msg, consumed = decode(bytes(self._buf))
            except TruncatedFrame as exc:
                if exc.needed > self._max_frame:
                    raise MalformedPayload(
                        f"frame of {exc.needed} bytes exceeds cap {self._max_frame}"
                    ) from exc
                return frames
            del self._buf[:consumed]
            frames.append((msg, consumed))


# ---------------------------------------------------------------------------
# Display ids
# ---------------------------------------------------------------------------

def format_node_id(node: GlobalNodeId, pad_width: int = 8) -> str:
    """Render a node's display id, e.g. ``gnb:131-133-300000002``.

    The numeric id is zero-padded on the left to ``pad_width`` digits behind a
    literal ``3``.  eNBs use the ``enb:`` prefix with the same layout.
    """
    prefix = "gnb:" if node.node_kind == NodeKind.GNB else "enb:"
    return f"{prefix}{node.plmn}-3{node.node_id:0{pad_width}d}"


def parse_node_id(display_id: str) -> GlobalNodeId:
    """Inverse of :func:`format_node_id`."""
    m = re.fullmatch(r"(gnb|enb):(\d+-\d+)-3(\d+)", display_id)
    if m is None:
        raise ValueError(f"not a node display id: {display_id!r}")
    kind = NodeKind.GNB if m.group(1) == "gnb" else NodeKind.ENB
    return GlobalNodeId(m.group(2), kind, int(m.group(3)))
