"""Priority media multiplexer: one telehaptic fragment per 1 ms haptic tick.

Every fragment carries the tick's haptic sample plus up to ``s_m`` bytes
of not-yet-multiplexed audio/video, audio strictly before video.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Tuple

__all__ = [
    "AUDIO", "VIDEO", "MediaConfig", "DerivedRates", "AvChunk", "HapticSample",
    "TelehapticFragment", "derive_rates", "split_frame", "Multiplexer",
    "FORWARD_MEDIA", "BACKWARD_MEDIA",
]

AUDIO = "audio"
VIDEO = "video"
HAPTIC_RATE_HZ = 1000


@dataclass(frozen=True)
class MediaConfig:
    """Per-channel media generation parameters (rates in Hz, sizes in bytes)."""
    s_h: int
    f_a: float = 0.0
    s_a: int = 0
    f_v: float = 0.0
    s_v: int = 0
    f_h: int = HAPTIC_RATE_HZ

    def __post_init__(self):
        if self.f_h != HAPTIC_RATE_HZ:
            raise ValueError(f"haptic sampling rate is fixed at {HAPTIC_RATE_HZ} Hz, got {self.f_h}")
        if self.s_h < 1:
            raise ValueError("s_h must be at least 1 byte")
        for name in ("f_a", "s_a", "f_v", "s_v"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def has_av(self) -> bool:
        return self.f_a * self.s_a + self.f_v * self.s_v > 0


# OP -> TOP: 24 B position/velocity samples, no A/V (192 kbps)
FORWARD_MEDIA = MediaConfig(s_h=24)
# TOP -> OP: 96 kbps force, 50 x 160 B audio, 25 x 2000 B video (560 kbps)
BACKWARD_MEDIA = MediaConfig(s_h=12, f_a=50, s_a=160, f_v=25, s_v=2000)


@dataclass(frozen=True)
class DerivedRates:
    D: float      # payload rate, kbps
    p: int        # fragment size, bytes
    s_m: int      # A/V bytes per fragment


def derive_rates(cfg: MediaConfig) -> DerivedRates:
    bytes_per_s = cfg.f_h * cfg.s_h + cfg.f_a * cfg.s_a + cfg.f_v * cfg.s_v
    D = bytes_per_s * 8 / 1000
    p_exact = bytes_per_s / 1000           # bytes per 1 ms tick
    p = round(p_exact)
    if not math.isclose(p, p_exact, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"fragment size p = {p_exact} B is not integral")
    if cfg.s_h > p:
        raise ValueError(f"haptic sample ({cfg.s_h} B) exceeds fragment size {p} B")
    return DerivedRates(D=D, p=p, s_m=p - cfg.s_h)


def split_frame(size: int, s_m: int) -> List[int]:
    """Nominal fragment sizes of a frame cut into ``s_m``-byte pieces."""
    if s_m <= 0:
        raise ValueError("channel carries no A/V (s_m = 0)")
    full, rest = divmod(size, s_m)
    return [s_m] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class AvChunk:
    kind: str
    frame_no: int
    fragment_no: int
    nbytes: int
    frame_gen_ms: float
    last: bool          # final chunk of its frame


@dataclass(frozen=True)
class HapticSample:
    timestamp_ms: int
    nbytes: int
    value: float = 0.0


@dataclass(frozen=True)
class TelehapticFragment:
    haptic: Optional[HapticSample]     # None only for A/V-only slots of the Weber baseline
    chunks: Tuple[AvChunk, ...] = ()

    @property
    def av_bytes(self) -> int:
        return sum(c.nbytes for c in self.chunks)

    @property
    def nbytes(self) -> int:
        return (self.haptic.nbytes if self.haptic else 0) + self.av_bytes


@dataclass
class _Frame:
    kind: str
    frame_no: int
    size: int
    gen_ms: float
    sent: int = 0
    chunks_out: int = 0


@dataclass
class Multiplexer:
    """Stateful multiplexer for one transmitting endpoint.

    With ``backfill`` (the default) a fragment whose audio tail leaves room
    is topped up with further audio or video bytes, so the A/V budget of
    ``s_m`` bytes per tick is never wasted while data is pending. With
    ``backfill=False`` a fragment carries bytes of one frame at most.
    """
    cfg: MediaConfig
    backfill: bool = True
    rates: DerivedRates = field(init=False)
    _audio: Deque[_Frame] = field(init=False, default_factory=deque)
    _video: Deque[_Frame] = field(init=False, default_factory=deque)
    _frame_no: dict = field(init=False, default_factory=lambda: {AUDIO: 0, VIDEO: 0})
    bytes_in: int = field(init=False, default=0)
    bytes_out: int = field(init=False, default=0)

    def __post_init__(self):
        self.rates = derive_rates(self.cfg)

    @property
    def s_m(self) -> int:
        return self.rates.s_m

    @property
    def pending_bytes(self) -> int:
        return sum(f.size - f.sent for f in self._audio) + sum(f.size - f.sent for f in self._video)

    def pending(self, kind: str) -> int:
        q = self._audio if kind == AUDIO else self._video
        return sum(f.size - f.sent for f in q)

    def enqueue_frame(self, kind: str, size: int, t_ms: float) -> int:
        """Queue a frame of ``size`` bytes; returns its nominal fragment count."""
        if self.s_m == 0:
            raise ValueError("channel carries no A/V (s_m = 0)")
        if kind not in (AUDIO, VIDEO):
            raise ValueError(f"unknown media kind {kind!r}")
        limit = self.cfg.s_a if kind == AUDIO else self.cfg.s_v
        if size > limit:
            raise ValueError(f"{kind} frame of {size} B exceeds peak size {limit} B")
        n = len(split_frame(size, self.s_m))
        if size == 0:
            return 0
        frame = _Frame(kind, self._frame_no[kind], size, t_ms)
        self._frame_no[kind] += 1
        (self._audio if kind == AUDIO else self._video).append(frame)
        self.bytes_in += size
        return n

    def next_fragment(self, t_ms: int, value: float = 0.0) -> TelehapticFragment:
        budget = self.s_m
        chunks: List[AvChunk] = []
        for q in (self._audio, self._video):
            while q and budget > 0:
                frame = q[0]
                take = min(budget, frame.size - frame.sent)
                frame.sent += take
                budget -= take
                done = frame.sent == frame.size
                chunks.append(AvChunk(frame.kind, frame.frame_no, frame.chunks_out, take,
                                      frame.gen_ms, done))
                frame.chunks_out += 1
                if done:
                    q.popleft()
                if not self.backfill:
                    budget = 0
            if chunks and not self.backfill:
                break
        self.bytes_out += sum(c.nbytes for c in chunks)
        return TelehapticFragment(HapticSample(int(t_ms), self.cfg.s_h, value), tuple(chunks))
