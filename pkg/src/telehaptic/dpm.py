"""Dynamic packetization: merge ``k`` consecutive fragments per packet.

The controller is step-increase-multistep-decrease: a congestion trigger
jumps ``k`` to ``k_max`` (largest rate cut), a steady trigger lowers ``k``
by one to probe for a higher rate. The hold-up variant ignores steady
triggers for ``hold_up_ms`` once ``k`` is back one above the value it had
when the last congestion trigger arrived.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .feedback import Trigger
from .mux import AUDIO, MediaConfig, TelehapticFragment, derive_rates
from .wire import (MAX_K, AvHeader, MediaKind, PacketHeader, encode_header,
                   packet_overhead, LOWER_LAYER_BYTES)

__all__ = [
    "RateModel", "rate_kbps", "DpmParams", "TelehapticPacket", "build_packet",
    "DpmController",
]


@dataclass(frozen=True)
class RateModel:
    """``R_k = D + OHR / k`` for one channel (kbps)."""
    D: float
    OHR: float

    @classmethod
    def from_media(cls, cfg: MediaConfig) -> "RateModel":
        rates = derive_rates(cfg)
        media = MediaKind.HAPTIC_AUDIO if cfg.has_av else MediaKind.HAPTIC
        return cls(D=rates.D, OHR=packet_overhead(media) * 8 * cfg.f_h / 1000)

    def rate(self, k: int) -> float:
        return self.D + self.OHR / k

    @property
    def packet_bytes_no_merge(self) -> float:
        """Wire size of a 1-merge packet."""
        return (self.D + self.OHR) / 8


def rate_kbps(model: RateModel, k: int, k_max: int = MAX_K) -> float:
    if not 1 <= k <= k_max:
        raise ValueError(f"k={k} outside [1, {k_max}]")
    return model.rate(k)


@dataclass(frozen=True)
class DpmParams:
    k_max: int = 4
    hold_up_ms: float = 0.0     # 0 disables hold-up

    def __post_init__(self):
        if not 1 <= self.k_max <= MAX_K:
            raise ValueError(f"k_max must lie in [1, {MAX_K}], got {self.k_max}")
        if self.hold_up_ms < 0:
            raise ValueError("hold_up_ms must be non-negative")


@dataclass
class TelehapticPacket:
    header: PacketHeader
    fragments: Tuple[TelehapticFragment, ...]
    send_ms: float = 0.0
    header_bytes: bytes = b""

    @property
    def k(self) -> int:
        return len(self.fragments)

    @property
    def payload_bytes(self) -> int:
        return sum(f.nbytes for f in self.fragments)

    @property
    def wire_size(self) -> int:
        return LOWER_LAYER_BYTES + self.header.size + self.payload_bytes


def build_packet(fragments: Sequence[TelehapticFragment], notification: Tuple[int, int] = (0, 1),
                 send_ms: float = 0.0, timestamp_ms: Optional[int] = None) -> TelehapticPacket:
    """Assemble and encode a packet from buffered fragments.

    The header timestamp is the earliest sample's generation time (or
    ``timestamp_ms`` when the packet carries no haptic sample); the A/V
    subheader describes the first A/V chunk in the packet.
    """
    if not fragments:
        raise ValueError("cannot build an empty packet")
    if fragments[0].haptic is not None:
        timestamp_ms = fragments[0].haptic.timestamp_ms
    elif timestamp_ms is None:
        raise ValueError("packet without a haptic sample needs an explicit timestamp")
    av = None
    media = MediaKind.HAPTIC
    first = next((c for f in fragments for c in f.chunks), None)
    if first is not None:
        media = MediaKind.HAPTIC_AUDIO if first.kind == AUDIO else MediaKind.HAPTIC_VIDEO
        av_bytes = sum(f.av_bytes for f in fragments)
        av = AvHeader(first.frame_no & 0xFFFF, min(av_bytes, 0xFFFF), first.fragment_no & 0xFF)
    us, bit = notification
    header = PacketHeader(
        media=media,
        k=len(fragments),
        delay_indicator=bool(bit),
        notification_delay=us,
        haptic_timestamp=int(timestamp_ms) & 0xFFFFFFFF,
        av=av,
    )
    return TelehapticPacket(header, tuple(fragments), send_ms, encode_header(header))


def _no_notification() -> Tuple[int, int]:
    return 0, 1


@dataclass
class DpmController:
    """SIMD packetization controller with optional hold-up.

    ``piggyback`` supplies the (delay, indicator) pair stamped on every
    outgoing packet; the simulator wires it to the endpoint's feedback state.
    """
    params: DpmParams = field(default_factory=DpmParams)
    piggyback: Callable[[], Tuple[int, int]] = _no_notification
    k: int = 1
    k_hat: Optional[int] = None
    holdup_until_ms: Optional[float] = None
    pending: List[TelehapticFragment] = field(default_factory=list)
    history: List[Tuple[float, int]] = field(default_factory=list)
    ignored_steady: int = 0
    last_change_ms: float = float("-inf")
    _hold_armed: bool = False

    def __post_init__(self):
        if not self.history:
            self.history.append((0.0, self.k))

    @property
    def k_max(self) -> int:
        return self.params.k_max

    def in_hold(self, now_ms: float) -> bool:
        return (self.holdup_until_ms is not None and now_ms < self.holdup_until_ms
                and self.k_hat is not None and self.k == self.k_hat + 1)

    def next_k(self, trigger: Trigger, now_ms: float) -> int:
        if trigger is Trigger.CONGESTION:
            self.k_hat = self.k
            self.holdup_until_ms = None
            self._hold_armed = self.params.hold_up_ms > 0
            return self.k_max
        if self.in_hold(now_ms):
            self.ignored_steady += 1
            return self.k
        return max(self.k - 1, 1)

    def on_trigger(self, trigger: Trigger, now_ms: float) -> Optional[TelehapticPacket]:
        """Apply a trigger; returns a packet when lowering ``k`` flushes the buffer."""
        return self.set_k(self.next_k(trigger, now_ms), now_ms)

    def set_k(self, k: int, now_ms: float) -> Optional[TelehapticPacket]:
        if not 1 <= k <= self.k_max:
            raise ValueError(f"k={k} outside [1, {self.k_max}]")
        if k != self.k:
            self.k = k
            self.last_change_ms = now_ms
            self.history.append((now_ms, k))
        if self._hold_armed and self.k_hat is not None and k == self.k_hat + 1:
            self.holdup_until_ms = now_ms + self.params.hold_up_ms
            self._hold_armed = False
        if self.pending and len(self.pending) >= self.k:
            return self._emit(now_ms)
        return None

    def submit_fragment(self, frag: TelehapticFragment, now_ms: float) -> Optional[TelehapticPacket]:
        self.pending.append(frag)
        if len(self.pending) >= self.k:
            return self._emit(now_ms)
        return None

    def _emit(self, now_ms: float) -> TelehapticPacket:
        frags, self.pending = self.pending, []
        return build_packet(frags, self.piggyback(), now_ms)
