"""Codec unit tests: frozen hex vectors, error taxonomy, display-id format."""

import re

import pytest

from e2loop import wire
from e2loop.wire import (
    AckStatus,
    BadMagic,
    ControlAction,
    ControlKind,
    E2SetupRequest,
    E2SetupResponse,
    EncodeError,
    FrameBuffer,
    GlobalNodeId,
    KpmBody,
    KpmHeader,
    MalformedPayload,
    NodeKind,
    RanFunctionDefinition,
    RicControlAcknowledge,
    RicControlRequest,
    RicIndication,
    SubscriptionRequest,
    SubscriptionResponse,
    TruncatedFrame,
    UnitType,
    UnsupportedVersion,
    decode,
    encode,
    format_node_id,
)

# Hand-encoded per the framing rules: magic 0xE2AF, version 0x01, type 0x02,
# payload_len 4, payload = u16 count 1 + u16 200.
SETUP_RESPONSE_200_HEX = "e2af010200000004000100c8"

# u32 request_id 1, u16 function 200, u32 period 100.
SUB_REQUEST_PAYLOAD_HEX = "0000000100c800000064"


def test_setup_response_frozen_hex():
    frame = encode(E2SetupResponse([200]))
    assert frame.hex() == SETUP_RESPONSE_200_HEX


def test_setup_request_empty_function_list_ends_with_zero_count():
    node = GlobalNodeId("131-133", NodeKind.GNB, 2)
    frame = encode(E2SetupRequest(node, []))
    assert frame.endswith(b"\x00\x00")
    msg, consumed = decode(frame)
    assert msg.functions == ()
    assert consumed == len(frame)


def test_subscription_request_frozen_payload():
    frame = encode(SubscriptionRequest(request_id=1, function_id=200, report_period_ms=100))
    assert frame[8:].hex() == SUB_REQUEST_PAYLOAD_HEX
    assert frame[:8].hex() == "e2af0103" + "0000000a"


def test_subscription_response_round_trip():
    msg = SubscriptionResponse(request_id=7, admitted=True)
    decoded, consumed = decode(encode(msg))
    assert decoded == msg
    assert consumed == len(encode(msg))


def test_frame_length_is_header_plus_payload():
    msgs = [
        E2SetupResponse([200, 300]),
        SubscriptionRequest(1, 200, 100),
        RicControlAcknowledge(AckStatus.SUCCESS, "handover applied"),
    ]
    for msg in msgs:
        frame = encode(msg)
        payload_len = int.from_bytes(frame[4:8], "big")
        assert len(frame) == 8 + payload_len


def test_encode_is_deterministic():
    msg = RicIndication(
        request_id=3,
        function_id=200,
        sequence_number=9,
        header=KpmHeader(1234, "gnb:131-133-300000002"),
        body=KpmBody(UnitType.CU_CP, [("num_active_ues", 3.0)], [(5, [("sinr_db_serving", -2.5)])]),
    )
    assert encode(msg) == encode(msg)


def test_unsupported_version():
    frame = bytearray(encode(SubscriptionResponse(7, True)))
    frame[2] = 0x02
    with pytest.raises(UnsupportedVersion):
        decode(bytes(frame))


def test_bad_magic():
    with pytest.raises(BadMagic):
        decode(b"\x00\x00\x01\x02\x00\x00\x00\x00")


def test_truncated_frame_reports_needed_length():
    frame = encode(E2SetupResponse([200]))
    with pytest.raises(TruncatedFrame) as exc:
        decode(frame[:9])
    assert exc.value.needed == len(frame)
    with pytest.raises(TruncatedFrame) as exc:
        decode(frame[:1])
    assert exc.value.needed == 8


def test_trailing_bytes_are_malformed():
    frame = encode(SubscriptionResponse(7, True))
    grown = frame[:4] + (len(frame) - 8 + 1).to_bytes(4, "big") + frame[8:] + b"\x00"
    with pytest.raises(MalformedPayload):
        decode(grown)


def test_unknown_message_type_is_malformed():
    frame = bytearray(encode(SubscriptionResponse(7, True)))
    frame[3] = 0x7F
    with pytest.raises(MalformedPayload):
        decode(bytes(frame))


def test_bad_enum_byte_is_malformed():
    frame = bytearray(encode(RicControlAcknowledge(AckStatus.REJECTED, "x")))
    frame[8] = 0x05
    with pytest.raises(MalformedPayload):
        decode(bytes(frame))


def test_inner_truncation_within_complete_frame_is_malformed():
    # A complete frame whose declared string length overruns the payload.
    frame = encode(RicControlAcknowledge(AckStatus.SUCCESS, "abcdef"))
    cut = frame[: len(frame) - 3]
    fixed = cut[:4] + (len(cut) - 8).to_bytes(4, "big") + cut[8:]
    with pytest.raises(MalformedPayload):
        decode(fixed)


def test_oversized_list_raises_encode_error():
    ids = [0] * 65536
    with pytest.raises(EncodeError):
        encode(E2SetupResponse(ids))


def test_oversized_string_raises_encode_error():
    with pytest.raises(EncodeError):
        encode(RicControlAcknowledge(AckStatus.SUCCESS, "x" * 65536))


def test_control_action_rejects_same_source_target():
    with pytest.raises(ValueError):
        ControlAction(ControlKind.HANDOVER, 5, 2, 2)


def test_decoding_same_cell_handover_is_malformed():
    frame = bytearray(encode(RicControlRequest(300, ControlAction(ControlKind.HANDOVER, 5, 2, 3))))
    frame[-4:] = (2).to_bytes(4, "big")  # overwrite target with source
    with pytest.raises(MalformedPayload):
        decode(bytes(frame))


def test_frame_buffer_reassembles_split_and_batched_frames():
    a = encode(SubscriptionRequest(1, 200, 100))
    b = encode(SubscriptionResponse(1, True))
    buf = FrameBuffer()
    assert buf.feed(a[:5]) == []
    got = buf.feed(a[5:] + b)
    assert [m for m, _ in got] == [
        SubscriptionRequest(1, 200, 100),
        SubscriptionResponse(1, True),
    ]


def test_frame_buffer_caps_absurd_length_prefix():
    huge = b"\xe2\xaf\x01\x05\xff\xff\xff\xff"
    with pytest.raises(MalformedPayload):
        FrameBuffer().feed(huge)


# ---------------------------------------------------------------------------
# Display ids
# ---------------------------------------------------------------------------

def _parse_display(display):
    """Independent inverse used as the format oracle."""
    m = re.fullmatch(r"(gnb|enb):(\d+)-(\d+)-3(\d+)", display)
    assert m, display
    kind = NodeKind.GNB if m.group(1) == "gnb" else NodeKind.ENB
    return f"{m.group(2)}-{m.group(3)}", kind, int(m.group(4))


def test_format_node_id_matches_published_shape():
    node = GlobalNodeId("131-133", NodeKind.GNB, 2)
    assert format_node_id(node, pad_width=8) == "gnb:131-133-300000002"


def test_format_node_id_zero_id_minimal_pad():
    node = GlobalNodeId("131-133", NodeKind.GNB, 0)
    assert format_node_id(node, pad_width=1) == "gnb:131-133-30"


def test_format_node_id_enb_prefix():
    node = GlobalNodeId("131-133", NodeKind.ENB, 1)
    assert format_node_id(node, pad_width=8) == "enb:131-133-300000001"


def test_format_parse_round_trip_random_ids():
    import random

    rng = random.Random(7)
    for _ in range(1000):
        plmn = f"{rng.randrange(1000)}-{rng.randrange(1000)}"
        kind = rng.choice([NodeKind.ENB, NodeKind.GNB])
        node = GlobalNodeId(plmn, kind, rng.randrange(1 << 32))
        display = format_node_id(node, pad_width=rng.randrange(1, 12))
        assert _parse_display(display) == (plmn, kind, node.node_id)
        assert wire.parse_node_id(display) == node


def test_node_id_validation():
    with pytest.raises(ValueError):
        GlobalNodeId("", NodeKind.GNB, 1)
    with pytest.raises(ValueError):
        GlobalNodeId("131133", NodeKind.GNB, 1)
    with pytest.raises(ValueError):
        GlobalNodeId("131-133", NodeKind.GNB, 1 << 32)


def test_kpm_body_rejects_duplicate_names():
    with pytest.raises(ValueError):
        KpmBody(UnitType.CU_CP, [("a", 1.0), ("a", 2.0)], [])
    with pytest.raises(ValueError):
        KpmBody(UnitType.CU_CP, [], [(1, [("a", 1.0), ("a", 2.0)])])


def test_kpm_header_validation():
    with pytest.raises(ValueError):
        KpmHeader(0, "gnb:1-1-30")
    with pytest.raises(ValueError):
        KpmHeader(5, "")


def test_function_definition_carried_opaquely():
    node = GlobalNodeId("131-133", NodeKind.GNB, 9)
    msg = E2SetupRequest(node, [RanFunctionDefinition(999, 1, "mystery")])
    decoded, _ = decode(encode(msg))
    assert decoded.functions[0].function_id == 999
