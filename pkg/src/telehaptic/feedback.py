"""Network feedback: in-header delay notification and rate-adaptation triggers.

The receiving endpoint measures the one-way delay of every packet and
piggybacks the latest value (with a freshness bit) on its next outgoing
packet. The transmitter smooths fresh notifications with an EWMA and
watches the last ``N`` smoothed values for a congestion trend (``I_C``)
or a steady band (``I_S``).
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional, Sequence, Tuple

from .wire import MAX_DELAY_US, PacketHeader

__all__ = [
    "Trigger", "FeedbackParams", "FeedbackState", "evaluate_triggers", "ewma",
]


class Trigger(enum.Enum):
    CONGESTION = "I_C"
    STEADY = "I_S"


@dataclass(frozen=True)
class FeedbackParams:
    alpha: float = 0.2
    N: int = 8
    tolerance: float = 0.10

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.N < 2:
            raise ValueError(f"N must be at least 2, got {self.N}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


def ewma(d_avg: Optional[float], d: float, alpha: float) -> float:
    if d_avg is None:
        return d
    return alpha * d + (1 - alpha) * d_avg


def evaluate_triggers(window: Sequence[float], tolerance: float = 0.10) -> Optional[Trigger]:
    """Classify a full window of smoothed delays.

    ``I_C`` for a strictly increasing window. ``I_S`` when the window is
    neither strictly increasing nor strictly decreasing and every later
    entry lies within ``tolerance`` (relative) of the first.
    """
    window = list(window)
    if len(window) < 2:
        return None
    pairs = list(zip(window, window[1:]))
    if all(b > a for a, b in pairs):
        return Trigger.CONGESTION
    if all(b < a for a, b in pairs):
        return None
    first = window[0]
    band = tolerance * abs(first)
    if all(abs(x - first) <= band for x in window[1:]):
        return Trigger.STEADY
    return None


@dataclass
class FeedbackState:
    """Feedback bookkeeping of one endpoint.

    The receive side (``measure_delay``/``piggyback``) concerns packets
    arriving on the incoming channel; the notification side
    (``ingest_notification``) concerns our own outgoing channel.
    """
    params: FeedbackParams = field(default_factory=FeedbackParams)
    d_avg: Optional[float] = None
    window: Deque[float] = field(init=False)
    last_measured_ms: Optional[float] = None
    fresh: bool = False
    clamped: int = 0
    updates: int = 0

    def __post_init__(self):
        self.window = deque(maxlen=self.params.N)

    # receive side

    def measure_delay(self, recv_time_ms: float, header: PacketHeader | int,
                      clock_offset_ms: float = 0.0) -> float:
        """One-way delay of a received packet; clamps negative results to 0."""
        ts = header if isinstance(header, int) else header.haptic_timestamp
        delay = (recv_time_ms + clock_offset_ms) - ts
        if delay < 0:
            self.clamped += 1
            delay = 0.0
        self.last_measured_ms = delay
        self.fresh = True
        return delay

    def piggyback(self) -> Tuple[int, int]:
        """(notification delay in µs, delay indicator bit) for the next packet."""
        if self.last_measured_ms is None:
            return 0, 1
        us = min(round(self.last_measured_ms * 1000), MAX_DELAY_US)
        bit = 0 if self.fresh else 1
        self.fresh = False
        return us, bit

    # transmit side

    def ingest_notification(self, delay_us: int, indicator: int | bool) -> Optional[Trigger]:
        if indicator:
            return None
        return self.update(delay_us / 1000.0)

    def update(self, delay_ms: float) -> Optional[Trigger]:
        """Feed one fresh delay measurement (ms) through the filter."""
        self.d_avg = ewma(self.d_avg, delay_ms, self.params.alpha)
        self.updates += 1
        self.window.append(self.d_avg)
        if len(self.window) < self.params.N:
            return None
        trigger = evaluate_triggers(self.window, self.params.tolerance)
        if trigger is not None:
            self.window.clear()
        return trigger
