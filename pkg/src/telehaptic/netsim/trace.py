"""Simulation output: per-sample, per-frame and per-packet records."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .scenario import BWD, FWD, Scenario

__all__ = ["PENDING", "DELIVERED", "DROPPED", "SUPPRESSED", "HapticRecord", "FrameRecord",
           "PacketRecord", "Trace", "TRACE_COLUMNS"]

# status codes shared by samples, frames and packets
PENDING = 0        # not (yet) sent, or still in flight at the end of the run
DELIVERED = 1
DROPPED = 2
SUPPRESSED = 3     # withheld by the sender (Weber deadband)

TRACE_COLUMNS = ("t_gen_ms", "t_recv_ms", "channel", "media", "delay_ms", "k", "dropped")


@dataclass
class HapticRecord:
    """One entry per 1 ms haptic sample of a channel, indexed by generation time."""
    gen: np.ndarray
    recv: np.ndarray
    k: np.ndarray
    status: np.ndarray
    value: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "HapticRecord":
        return cls(gen=np.arange(n, dtype=float), recv=np.full(n, np.nan),
                   k=np.zeros(n, dtype=np.int8), status=np.zeros(n, dtype=np.int8),
                   value=np.zeros(n))

    @property
    def delay(self) -> np.ndarray:
        return self.recv - self.gen


@dataclass
class FrameRecord:
    """Audio or video frames of one channel, in generation order."""
    kind: str
    gen: List[float] = field(default_factory=list)
    size: List[int] = field(default_factory=list)
    recv: List[float] = field(default_factory=list)
    status: List[int] = field(default_factory=list)
    remaining: List[int] = field(default_factory=list)
    k: List[int] = field(default_factory=list)       # k of the packet completing the frame

    def add(self, gen_ms: float, size: int) -> int:
        self.gen.append(gen_ms)
        self.size.append(size)
        self.recv.append(np.nan)
        self.status.append(PENDING)
        self.remaining.append(size)
        self.k.append(0)
        return len(self.gen) - 1

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.asarray(self.gen, float), np.asarray(self.recv, float), np.asarray(self.status, np.int8)


@dataclass
class PacketRecord:
    flow: str          # "telehaptic", "cross:<name>", "probe", "echo", "rtcp"
    send_ms: float
    size: int
    k: int
    status: int = PENDING
    recv_ms: float = np.nan


@dataclass
class Trace:
    """Immutable result of one run (mutated only by the simulator that built it)."""
    scenario: Scenario
    haptic: Dict[str, HapticRecord]
    frames: Dict[str, Dict[str, FrameRecord]]
    packets: Dict[str, List[PacketRecord]]
    k_timeline: Dict[str, List[Tuple[float, int]]]
    triggers: Dict[str, List[Tuple[float, str]]]
    queue: Dict[str, Tuple[np.ndarray, np.ndarray]]
    counters: Dict[str, Dict[str, int]]
    rtcp_reports: Dict[str, List[Tuple[float, float, float]]] = field(default_factory=dict)
    weber: Dict[str, int] = field(default_factory=dict)

    @property
    def channels(self) -> Tuple[str, str]:
        return (FWD, BWD)

    def k_at(self, channel: str, t_ms: np.ndarray) -> np.ndarray:
        """Transmitter ``k`` in force at each time in ``t_ms``."""
        tl = self.k_timeline[channel]
        times = np.array([t for t, _ in tl])
        ks = np.array([k for _, k in tl])
        idx = np.searchsorted(times, np.asarray(t_ms, float), side="right") - 1
        return ks[np.clip(idx, 0, None)]

    def bytes_delivered(self, channel: str, flow_prefix: str, t0: float = 0.0,
                        t1: float = np.inf) -> int:
        return sum(p.size for p in self.packets[channel]
                   if p.status == DELIVERED and p.flow.startswith(flow_prefix) and t0 <= p.recv_ms < t1)

    def rows(self):
        """Trace rows: every delivered or dropped haptic sample and A/V frame."""
        for ch in (FWD, BWD):
            h = self.haptic[ch]
            for i in np.flatnonzero((h.status == DELIVERED) | (h.status == DROPPED)):
                dropped = h.status[i] == DROPPED
                yield (h.gen[i], h.recv[i], ch, "haptic", h.recv[i] - h.gen[i], int(h.k[i]), dropped)
            for kind, fr in self.frames[ch].items():
                for g, r, s, k in zip(fr.gen, fr.recv, fr.status, fr.k):
                    if s in (DELIVERED, DROPPED):
                        yield (g, r, ch, kind, r - g, k, s == DROPPED)

    def to_csv(self, path: str | Path | None = None) -> str:
        """Write the sample trace; formatting is fixed so equal runs give equal bytes."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for g, r, ch, media, d, k, dropped in self.rows():
            w.writerow([f"{g:.0f}", "" if dropped else f"{r:.6f}", ch, media,
                        "" if dropped else f"{d:.6f}", k, int(dropped)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def k_timeline_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_ms", "channel", "k"])
            for ch in (FWD, BWD):
                for t, k in self.k_timeline[ch]:
                    w.writerow([f"{t:.6f}", ch, k])
