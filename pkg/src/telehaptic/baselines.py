"""Comparison transmitters and signal tools.

* no-merge: ``k = 1`` forever, deaf to triggers
* multistep increase: ``k`` grows by one per congestion trigger
* RTP-style feedback: no-merge plus receiver reports every 500 ms
* NAFCAH-style: multistep driven by RTT/2 from 100 Hz probes
* visual-haptic multiplexing with a Weber deadband sampler
"""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Deque, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dpm import DpmController, DpmParams, TelehapticPacket, build_packet
from .feedback import FeedbackParams, FeedbackState, Trigger
from .mux import AUDIO, VIDEO, AvChunk, HapticSample, MediaConfig, TelehapticFragment

__all__ = [
    "NoMergeController", "MultistepController", "multistep_on_trigger",
    "rtp_report_times", "RTCP_BYTES", "NafcahEstimator",
    "WeberParams", "WeberSampler", "weber_sample", "zoh_reconstruct",
    "WeberMuxTransmitter", "synthetic_force", "read_force_csv", "write_force_csv",
]


class NoMergeController(DpmController):
    """Peak-rate transmitter: one fragment per packet, triggers ignored."""

    def next_k(self, trigger: Trigger, now_ms: float) -> int:
        return 1


def multistep_on_trigger(k: int, trigger: Trigger, k_max: int = 4) -> int:
    if trigger is Trigger.CONGESTION:
        return min(k + 1, k_max)
    return max(k - 1, 1)


class MultistepController(DpmController):
    """Cuts the rate in stages: ``k + 1`` per congestion trigger."""

    def __init__(self, params: DpmParams = DpmParams(), **kw):
        super().__init__(params=DpmParams(k_max=params.k_max), **kw)

    def next_k(self, trigger: Trigger, now_ms: float) -> int:
        return multistep_on_trigger(self.k, trigger, self.k_max)


# RTCP receiver report: 8 B header + 24 B report block
RTCP_BYTES = 32


def rtp_report_times(duration_ms: float, interval_ms: float = 500.0) -> List[float]:
    n = int(duration_ms // interval_ms)
    return [interval_ms * (i + 1) for i in range(n) if interval_ms * (i + 1) < duration_ms]


@dataclass
class NafcahEstimator:
    """Congestion detector fed by round-trip samples.

    Each RTT sample becomes a one-way estimate of RTT/2 and goes through
    the same EWMA and window logic as in-header notifications. On an
    asymmetric path this misattributes reverse-channel delay.
    """
    params: FeedbackParams = field(default_factory=FeedbackParams)
    state: FeedbackState = field(init=False)
    samples: int = 0

    def __post_init__(self):
        self.state = FeedbackState(self.params)

    def on_rtt(self, rtt_ms: float) -> Optional[Trigger]:
        self.samples += 1
        return self.state.update(rtt_ms / 2)


# Weber sampling and reconstruction


@dataclass(frozen=True)
class WeberParams:
    threshold: float = 0.12

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")


@dataclass
class WeberSampler:
    """Online deadband: transmit when the change exceeds ``threshold`` of the last sent value."""
    params: WeberParams = field(default_factory=WeberParams)
    last_sent: Optional[float] = None

    def offer(self, value: float) -> bool:
        last = self.last_sent
        if last is None or (last == 0 and value != 0) or abs(value - last) > self.params.threshold * abs(last):
            self.last_sent = value
            return True
        return False


def weber_sample(signal: Sequence[float], params: WeberParams = WeberParams()) -> np.ndarray:
    sig = np.asarray(signal, dtype=float)
    if not np.all(np.isfinite(sig)):
        raise ValueError("signal must be finite")
    sampler = WeberSampler(params)
    return np.fromiter((sampler.offer(v) for v in sig), dtype=bool, count=len(sig))


def zoh_reconstruct(recv_ms: Sequence[float], values: Sequence[float], ticks_ms: Sequence[float],
                    gen_ms: Optional[Sequence[float]] = None, fill: float = np.nan) -> np.ndarray:
    """Zero-order hold at each display tick.

    The output at tick ``T`` is the value of the newest sample (by
    generation time) received at or before ``T``; ``fill`` before the
    first arrival.
    """
    recv = np.asarray(recv_ms, dtype=float)
    vals = np.asarray(values, dtype=float)
    ticks = np.asarray(ticks_ms, dtype=float)
    if recv.size == 0:
        raise ValueError("no received samples")
    gen = np.arange(len(recv), dtype=float) if gen_ms is None else np.asarray(gen_ms, dtype=float)
    ok = np.isfinite(recv)
    recv, vals, gen = recv[ok], vals[ok], gen[ok]
    order = np.lexsort((gen, recv))
    recv, vals, gen = recv[order], vals[order], gen[order]
    # index of the newest-by-generation sample among everything received so far;
    # a late, older sample never replaces a newer one on the display
    best = np.zeros(len(gen), dtype=int)
    cur = 0
    for i in range(len(gen)):
        if gen[i] >= gen[cur]:
            cur = i
        best[i] = cur
    idx = np.searchsorted(recv, ticks, side="right") - 1
    out = np.full(len(ticks), fill, dtype=float)
    have = idx >= 0
    out[have] = vals[best[idx[have]]]
    return out


@dataclass
class _AvFrame:
    kind: str
    frame_no: int
    size: int
    gen_ms: float
    sent: int = 0
    chunks_out: int = 0


class WeberMuxTransmitter:
    """Visual-haptic multiplexer without congestion control.

    Per 1 ms slot it sends at most one packet, carrying the force sample if
    the Weber sampler marks it and at most one A/V chunk of up to
    ``chunk_bytes`` (audio first). Slots with neither stay silent.
    """

    def __init__(self, cfg: MediaConfig, params: WeberParams = WeberParams(),
                 chunk_bytes: int = 1000):
        self.cfg = cfg
        self.sampler = WeberSampler(params)
        self.chunk_bytes = chunk_bytes
        self.piggyback: Callable[[], Tuple[int, int]] = lambda: (0, 1)
        self.k = 1
        self.history: List[Tuple[float, int]] = [(0.0, 1)]
        self._q = {AUDIO: deque(), VIDEO: deque()}
        self._frame_no = {AUDIO: 0, VIDEO: 0}
        self.significant = 0
        self.offered = 0
        self.last_significant = False

    def enqueue_frame(self, kind: str, size: int, t_ms: float) -> None:
        if size <= 0:
            return
        self._q[kind].append(_AvFrame(kind, self._frame_no[kind], size, t_ms))
        self._frame_no[kind] += 1

    def _next_chunk(self) -> Optional[AvChunk]:
        for kind in (AUDIO, VIDEO):
            q: Deque[_AvFrame] = self._q[kind]
            if q:
                f = q[0]
                take = min(self.chunk_bytes, f.size - f.sent)
                f.sent += take
                chunk = AvChunk(kind, f.frame_no, f.chunks_out, take, f.gen_ms, f.sent == f.size)
                f.chunks_out += 1
                if f.sent == f.size:
                    q.popleft()
                return chunk
        return None

    def tick(self, now_ms: int, timestamp_ms: int, value: float,
             frames: Iterable[Tuple[str, int]] = ()) -> List[TelehapticPacket]:
        for kind, size in frames:
            self.enqueue_frame(kind, size, now_ms)
        self.offered += 1
        send_force = self.sampler.offer(value)
        self.last_significant = send_force
        self.significant += send_force
        chunk = self._next_chunk()
        if not send_force and chunk is None:
            return []
        haptic = HapticSample(timestamp_ms, self.cfg.s_h, value) if send_force else None
        frag = TelehapticFragment(haptic, (chunk,) if chunk else ())
        return [build_packet([frag], self.piggyback(), now_ms, timestamp_ms=timestamp_ms)]

    def on_trigger(self, trigger: Trigger, now_ms: float) -> List[TelehapticPacket]:
        return []


# synthetic force traces


def synthetic_force(duration_ms: int, seed: int = 0, *, block_ms: int = 10_000,
                    fast_ms: int = 3_000, fast_start_ms: int = 3_000,
                    slow_hz: Tuple[float, float] = (0.2, 1.0),
                    fast_hz: Tuple[float, float] = (120.0, 200.0),
                    fast_amplitude: float = 0.04) -> np.ndarray:
    """A 1 kHz force trace alternating slow and fast segments.

    Slow segments are sinusoids in ``[0.2, 0.9]`` with a random frequency
    from ``slow_hz``. In every ``block_ms`` a fast segment of ``fast_ms``
    starting at ``fast_start_ms`` into the block replaces the slow signal by
    a low-amplitude chirp around zero (free-space vibration) sweeping
    ``fast_hz``; nearly every sample there moves by more than 12 %.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(duration_ms) / 1000.0
    out = np.empty(duration_ms)
    n_blocks = int(math.ceil(duration_ms / block_ms))
    phase = rng.uniform(0, 2 * np.pi)
    for b in range(n_blocks):
        lo, hi = b * block_ms, min((b + 1) * block_ms, duration_ms)
        f = rng.uniform(*slow_hz)
        seg = t[lo:hi]
        out[lo:hi] = 0.55 + 0.35 * np.sin(2 * np.pi * f * (seg - seg[0]) + phase)
        phase = (phase + 2 * np.pi * f * (seg[-1] - seg[0] + 0.001)) % (2 * np.pi)
        fs, fe = lo + fast_start_ms, min(lo + fast_start_ms + fast_ms, hi)
        if fs >= fe:
            continue
        tau = t[fs:fe] - t[fs]
        span = tau[-1] if len(tau) > 1 else 1.0
        f0, f1 = fast_hz
        chirp_phase = 2 * np.pi * (f0 * tau + (f1 - f0) * tau ** 2 / (2 * span))
        out[fs:fe] = fast_amplitude * np.sin(chirp_phase + rng.uniform(0, 2 * np.pi))
    return out


def write_force_csv(path: str | Path, values: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_ms", "value"])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])


def read_force_csv(path: str | Path) -> np.ndarray:
    """Read a ``t_ms,value`` trace; rows must cover consecutive milliseconds from 0."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty force trace")
    t = np.array([float(r["t_ms"]) for r in rows])
    if not np.array_equal(t, np.arange(len(t))):
        raise ValueError(f"{path}: t_ms must run 0, 1, 2, ... at 1 kHz")
    return np.array([float(r["value"]) for r in rows])
