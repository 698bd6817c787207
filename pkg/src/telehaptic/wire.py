"""Application-layer telehaptic packet header.

Layout (big-endian, MSB first)::

    byte 0      M:3  k:3  D:1  X:1
    bytes 1-3   notification delay, microseconds (24 bit)
    bytes 4-7   haptic sample timestamp, milliseconds (32 bit)
    bytes 8-12  A/V subheader, present iff M != haptic:
                frame no (16), payload size (16), fragment no (8)

A haptic-only header is 8 bytes, a haptic+audio or haptic+video header
is 13 bytes.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Optional

__all__ = [
    "MediaKind", "AvHeader", "PacketHeader", "HeaderError",
    "encode_header", "decode_header", "header_size",
    "HAPTIC_HEADER_BYTES", "AV_HEADER_BYTES", "LOWER_LAYER_BYTES",
    "LINK_BYTES", "NETWORK_BYTES", "TRANSPORT_BYTES", "packet_overhead",
]

_BASE = struct.Struct("!BBHI")     # flags, delay hi byte, delay lo 16, timestamp
_AV = struct.Struct("!HHB")

HAPTIC_HEADER_BYTES = _BASE.size   # 8
AV_HEADER_BYTES = _AV.size         # 5

# Byte counts of the layers below ours; never serialized, only charged.
LINK_BYTES = 26
NETWORK_BYTES = 20
TRANSPORT_BYTES = 8
LOWER_LAYER_BYTES = LINK_BYTES + NETWORK_BYTES + TRANSPORT_BYTES

MAX_K = 7
MAX_DELAY_US = (1 << 24) - 1
MAX_TIMESTAMP = (1 << 32) - 1


class HeaderError(ValueError):
    """Raised for unencodable headers and malformed or truncated input."""


class MediaKind(enum.IntEnum):
    HAPTIC = 0
    HAPTIC_AUDIO = 1
    HAPTIC_VIDEO = 2


@dataclass(frozen=True)
class AvHeader:
    frame_no: int
    payload_size: int
    fragment_no: int


@dataclass(frozen=True)
class PacketHeader:
    media: MediaKind
    k: int
    delay_indicator: bool
    notification_delay: int          # microseconds
    haptic_timestamp: int            # milliseconds
    av: Optional[AvHeader] = None
    reserved_x: bool = False

    @property
    def size(self) -> int:
        return header_size(self.media)


def header_size(media: MediaKind | int) -> int:
    return HAPTIC_HEADER_BYTES if media == MediaKind.HAPTIC else HAPTIC_HEADER_BYTES + AV_HEADER_BYTES


def packet_overhead(media: MediaKind | int) -> int:
    """Total per-packet header bytes, all layers (62 or 67)."""
    return LOWER_LAYER_BYTES + header_size(media)


def _check_range(name: str, value: int, hi: int, lo: int = 0) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
        raise HeaderError(f"{name}={value!r} outside [{lo}, {hi}]")


def encode_header(h: PacketHeader) -> bytes:
    try:
        media = MediaKind(h.media)
    except ValueError:
        raise HeaderError(f"invalid media code {h.media!r}") from None
    _check_range("k", h.k, MAX_K, lo=1)
    _check_range("notification_delay", h.notification_delay, MAX_DELAY_US)
    _check_range("haptic_timestamp", h.haptic_timestamp, MAX_TIMESTAMP)
    if (media == MediaKind.HAPTIC) != (h.av is None):
        raise HeaderError("A/V subheader must be present iff media is not haptic-only")

    # X is reserved: always written as 0
    flags = (int(media) << 5) | (h.k << 2) | (int(bool(h.delay_indicator)) << 1)
    delay = h.notification_delay
    out = _BASE.pack(flags, delay >> 16, delay & 0xFFFF, h.haptic_timestamp)
    if h.av is None:
        return out
    _check_range("frame_no", h.av.frame_no, 0xFFFF)
    _check_range("payload_size", h.av.payload_size, 0xFFFF)
    _check_range("fragment_no", h.av.fragment_no, 0xFF)
    return out + _AV.pack(h.av.frame_no, h.av.payload_size, h.av.fragment_no)


def decode_header(data: bytes) -> PacketHeader:
    """Decode the header at the start of ``data``; trailing payload is ignored."""
    if len(data) < HAPTIC_HEADER_BYTES:
        raise HeaderError(f"truncated header: {len(data)} < {HAPTIC_HEADER_BYTES} bytes")
    flags, delay_hi, delay_lo, timestamp = _BASE.unpack_from(data)
    code = flags >> 5
    try:
        media = MediaKind(code)
    except ValueError:
        raise HeaderError(f"invalid media code {code}") from None
    k = (flags >> 2) & 0b111
    if k == 0:
        raise HeaderError("k field is zero")
    av = None
    if media != MediaKind.HAPTIC:
        if len(data) < HAPTIC_HEADER_BYTES + AV_HEADER_BYTES:
            raise HeaderError(f"truncated A/V subheader for media {media.name}")
        av = AvHeader(*_AV.unpack_from(data, HAPTIC_HEADER_BYTES))
    return PacketHeader(
        media=media,
        k=k,
        delay_indicator=bool(flags & 0b10),
        notification_delay=(delay_hi << 16) | delay_lo,
        haptic_timestamp=timestamp,
        av=av,
        reserved_x=bool(flags & 0b1),
    )
