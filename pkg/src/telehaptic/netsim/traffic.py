"""Cross-traffic sources: CBR and piecewise-constant VBR with on/off windows."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..wire import LOWER_LAYER_BYTES

__all__ = ["CBR", "VBR", "TrafficSource", "staircase_sources", "vbr_plan", "emission_times",
           "rate_at", "total_rate"]

CBR = "CBR"
VBR = "VBR"
ALWAYS = ((0.0, math.inf),)


@dataclass(frozen=True)
class TrafficSource:
    """A UDP-like cross-traffic flow entering one bottleneck queue.

    Rates are wire rates: each packet carries ``pkt_bytes`` of payload plus
    the 54 B of link/network/transport headers, and packets are spaced so
    that the offered load on the link equals the nominal rate. ``on_off``
    windows are half-open ``[start, stop)`` in ms.
    """
    name: str
    kind: str = CBR
    rate_kbps: float = 0.0
    rate_range_kbps: Tuple[float, float] = (0.0, 0.0)
    pkt_bytes: int = 1000
    on_off: Tuple[Tuple[float, float], ...] = ALWAYS
    redraw_ms: float = 50.0

    def __post_init__(self):
        if self.kind not in (CBR, VBR):
            raise ValueError(f"source {self.name}: unknown kind {self.kind!r}")
        if self.pkt_bytes < 1:
            raise ValueError(f"source {self.name}: pkt_bytes must be positive")
        if self.kind == CBR and self.rate_kbps < 0:
            raise ValueError(f"source {self.name}: negative rate")
        if self.kind == VBR:
            lo, hi = self.rate_range_kbps
            if not 0 < lo <= hi:
                raise ValueError(f"source {self.name}: VBR range needs 0 < lo <= hi, got {lo, hi}")
            if self.redraw_ms <= 0:
                raise ValueError(f"source {self.name}: redraw_ms must be positive")
        windows = sorted(self.on_off)
        for start, stop in windows:
            if stop <= start:
                raise ValueError(f"source {self.name}: empty on/off window {(start, stop)}")
        for (_, stop), (start, _) in zip(windows, windows[1:]):
            if start < stop:
                raise ValueError(f"source {self.name}: overlapping on/off windows")

    @property
    def wire_bytes(self) -> int:
        return self.pkt_bytes + LOWER_LAYER_BYTES

    @property
    def mean_kbps(self) -> float:
        if self.kind == CBR:
            return self.rate_kbps
        return sum(self.rate_range_kbps) / 2

    def active(self, t_ms: float) -> bool:
        return any(start <= t_ms < stop for start, stop in self.on_off)

    def with_rate(self, rate_kbps: float) -> "TrafficSource":
        from dataclasses import replace
        return replace(self, rate_kbps=rate_kbps)


def staircase_sources(start_ms: float = 500.0) -> List[TrafficSource]:
    """The three staggered CBR sources: 260, +90, +50 kbps, all off at 6500 ms."""
    return [
        TrafficSource("C1", CBR, 260.0, on_off=((start_ms, 6500.0),)),
        TrafficSource("C2", CBR, 90.0, on_off=((2500.0, 6500.0),)),
        TrafficSource("C3", CBR, 50.0, on_off=((4500.0, 6500.0),)),
    ]


def vbr_plan(src: TrafficSource, duration_ms: float, rng: np.random.Generator) -> np.ndarray:
    """Rate (kbps) for each ``redraw_ms`` slot covering the run."""
    lo, hi = src.rate_range_kbps
    n = int(math.ceil(duration_ms / src.redraw_ms)) + 1
    return rng.uniform(lo, hi, size=n)


def rate_at(src: TrafficSource, t_ms: float, plan: np.ndarray | None = None) -> float:
    if not src.active(t_ms):
        return 0.0
    if src.kind == CBR:
        return src.rate_kbps
    return float(plan[int(t_ms // src.redraw_ms)])


def emission_times(src: TrafficSource, duration_ms: float, plan: np.ndarray | None = None) -> np.ndarray:
    """Packet emission instants (ms) of a source over ``[0, duration_ms)``."""
    bits = src.wire_bytes * 8
    out: List[float] = []
    for start, stop in sorted(src.on_off):
        stop = min(stop, duration_ms)
        if src.kind == CBR:
            if src.rate_kbps <= 0 or start >= stop:
                continue
            spacing = bits / src.rate_kbps
            n = int(math.ceil((stop - start) / spacing))
            times = start + spacing * np.arange(n)
            out.extend(times[times < stop].tolist())
        else:
            t = start
            while t < stop:
                out.append(t)
                t += bits / plan[int(t // src.redraw_ms)]
    return np.asarray(out, dtype=float)


def total_rate(sources: Sequence[TrafficSource], t_ms: float, plans: Sequence) -> float:
    return sum(rate_at(s, t_ms, p) for s, p in zip(sources, plans))
