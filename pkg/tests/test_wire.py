import struct

import pytest
from hypothesis import given, strategies as st

from telehaptic.wire import (AV_HEADER_BYTES, HAPTIC_HEADER_BYTES, LOWER_LAYER_BYTES, MAX_DELAY_US,
                             AvHeader, HeaderError, MediaKind, PacketHeader, decode_header,
                             encode_header, header_size, packet_overhead)


def hdr(**kw):
    base = dict(media=MediaKind.HAPTIC, k=1, delay_indicator=False, notification_delay=0,
                haptic_timestamp=0)
    base.update(kw)
    return PacketHeader(**base)


av_headers = st.builds(AvHeader, st.integers(0, 0xFFFF), st.integers(0, 0xFFFF), st.integers(0, 0xFF))


@st.composite
def headers(draw):
    media = draw(st.sampled_from(list(MediaKind)))
    return PacketHeader(media=media, k=draw(st.integers(1, 7)), delay_indicator=draw(st.booleans()),
                        notification_delay=draw(st.integers(0, MAX_DELAY_US)),
                        haptic_timestamp=draw(st.integers(0, 2**32 - 1)),
                        av=None if media == MediaKind.HAPTIC else draw(av_headers))


def test_sizes():
    assert HAPTIC_HEADER_BYTES == 8 and AV_HEADER_BYTES == 5
    assert header_size(MediaKind.HAPTIC) == 8
    assert header_size(MediaKind.HAPTIC_VIDEO) == 13
    assert LOWER_LAYER_BYTES == 54
    assert packet_overhead(MediaKind.HAPTIC) == 62
    assert packet_overhead(MediaKind.HAPTIC_AUDIO) == 67


def test_known_bytes():
    # M=1 (audio), k=4, D=1 -> 001 100 1 0 = 0x32
    h = hdr(media=MediaKind.HAPTIC_AUDIO, k=4, delay_indicator=True, notification_delay=0x012345,
            haptic_timestamp=0xDEADBEEF, av=AvHeader(7, 160, 2))
    raw = encode_header(h)
    assert raw == bytes([0x32, 0x01, 0x23, 0x45, 0xDE, 0xAD, 0xBE, 0xEF, 0, 7, 0, 160, 2])
    assert struct.unpack("!I", raw[4:8])[0] == 0xDEADBEEF


@given(headers())
def test_round_trip(h):
    raw = encode_header(h)
    assert len(raw) == h.size
    assert decode_header(raw) == h
    assert decode_header(raw + b"payload") == h


@pytest.mark.parametrize("kw", [
    dict(k=0), dict(k=8), dict(notification_delay=MAX_DELAY_US + 1), dict(haptic_timestamp=-1),
    dict(haptic_timestamp=2**32), dict(av=AvHeader(1, 2, 3)),
    dict(media=MediaKind.HAPTIC_VIDEO),
])
def test_encode_rejects(kw):
    with pytest.raises(HeaderError):
        encode_header(hdr(**kw))


def test_encode_rejects_wide_av_fields():
    with pytest.raises(HeaderError):
        encode_header(hdr(media=MediaKind.HAPTIC_AUDIO, av=AvHeader(0, 0, 256)))


def test_decode_errors():
    with pytest.raises(HeaderError):
        decode_header(b"\x04" * 7)
    with pytest.raises(HeaderError):        # media code 3
        decode_header(bytes([0b011_001_00]) + bytes(7))
    with pytest.raises(HeaderError):        # k = 0
        decode_header(bytes(8))
    with pytest.raises(HeaderError):        # truncated A/V subheader
        decode_header(encode_header(hdr(media=MediaKind.HAPTIC_AUDIO, av=AvHeader(1, 1, 1)))[:12])


def test_reserved_bit_written_zero_and_read_back():
    raw = bytearray(encode_header(hdr(k=2)))
    assert raw[0] & 1 == 0
    raw[0] |= 1
    assert decode_header(bytes(raw)).reserved_x is True
