"""Closed-form delay/jitter bounds and QoS metrics extracted from traces.

Bounds: ``k_opt`` is the smallest merge factor whose source rate fits in
the capacity left over by the cross-traffic. The worst haptic delay in
steady state comes from the queue build-up after DPM probes down from
``k_opt`` to ``k_opt - 1`` and waits one feedback round for the
congestion trigger. Audio and video bounds add their fragmentation and
packetization terms on top.

Metrics: jitter of a sample is the deviation of its inter-arrival time
from its inter-generation time, measured between consecutively
displayed samples (or frames).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .dpm import RateModel
from .mux import MediaConfig, derive_rates
from .netsim.scenario import BWD, FWD
from .netsim.trace import DELIVERED, DROPPED, Trace

__all__ = [
    "InfeasibleError", "BoundInputs", "BoundOutputs", "QosSpec", "QOS",
    "k_opt", "d_inc", "q_inc", "d_hap_bound", "av_bounds", "jitter_bound", "bounds",
    "MediaSummary", "StreamSummary", "RunSummary", "metrics", "jitter", "switch_jitter",
    "snr_db", "summary_csv", "report", "bounds_csv",
]


class InfeasibleError(ValueError):
    """The channel is overloaded even at the largest merge factor."""


@dataclass(frozen=True)
class BoundInputs:
    mu_kbps: float
    tau_ms: float
    N: int
    R_cross_kbps: float
    rate_model: RateModel
    k_max: int = 4

    def rate(self, k: int) -> float:
        return self.rate_model.rate(k)


@dataclass(frozen=True)
class BoundOutputs:
    k_opt: int
    d_inc_ms: float
    q_inc_kbit: float
    d_hap_ms: float
    d_aud_ms: float
    d_vid_ms: float
    jitter_bound_ms: float
    gamma1_ms: float


@dataclass(frozen=True)
class QosSpec:
    """Per-media (max delay, max jitter) in ms."""
    haptic: Tuple[float, float] = (30.0, 10.0)
    audio: Tuple[float, float] = (150.0, 30.0)
    video: Tuple[float, float] = (400.0, 30.0)

    def limits(self, media: str) -> Tuple[float, float]:
        return getattr(self, media)


QOS = QosSpec()


def k_opt(inputs: BoundInputs) -> int:
    for k in range(1, inputs.k_max + 1):
        if inputs.rate(k) + inputs.R_cross_kbps <= inputs.mu_kbps:
            return k
    raise InfeasibleError(
        f"R_{inputs.k_max} + R_cross = {inputs.rate(inputs.k_max) + inputs.R_cross_kbps:.2f} kbps "
        f"exceeds capacity {inputs.mu_kbps} kbps")


def _rho(inputs: BoundInputs, k: int) -> float:
    """Relative excess load once DPM sits at ``k - 1``."""
    return (inputs.R_cross_kbps + inputs.rate(k - 1) - inputs.mu_kbps) / inputs.mu_kbps


def d_inc(inputs: BoundInputs) -> float:
    """Time from the switch to ``k_opt - 1`` until the congestion trigger fires (ms)."""
    k = k_opt(inputs)
    if k == 1:
        return 0.0
    n = inputs.N * (k - 1)
    return n + n * _rho(inputs, k) + 2 * inputs.tau_ms + 1


def q_inc(inputs: BoundInputs) -> float:
    """Peak backlog (kbit) built up during ``d_inc``."""
    k = k_opt(inputs)
    if k == 1:
        return 0.0
    return (inputs.R_cross_kbps + inputs.rate(k - 1) - inputs.mu_kbps) * d_inc(inputs) / 1000


def d_hap_bound(inputs: BoundInputs) -> float:
    """Worst steady-state haptic delay (ms).

    With ``k_opt = 1`` the link never backs up and the bound reduces to
    propagation plus the transmission time of a 1-merge packet.
    """
    k = k_opt(inputs)
    if k == 1:
        return inputs.tau_ms + inputs.rate_model.packet_bytes_no_merge * 8 / inputs.mu_kbps
    return inputs.tau_ms + (k - 1) + q_inc(inputs) * 1000 / inputs.mu_kbps


def av_bounds(d_hap: float, s_a: int, s_m: int, f_v: float, k_max: int = 4) -> Tuple[float, float]:
    """(audio, video) delay bounds in ms given the haptic bound."""
    if s_m <= 0:
        raise ValueError("s_m must be positive")
    d_aud = d_hap + s_a / s_m + (k_max - 1)
    d_vid = d_hap + (1000 / f_v if f_v else 0.0) + (k_max - 1)
    return d_aud, d_vid


def jitter_bound(model: RateModel, mu_kbps: float) -> Tuple[float, float]:
    """(gamma1, 3 (1 + gamma1)): worst jitter added by a 1 -> 4 switch, ms."""
    gamma1 = model.packet_bytes_no_merge * 8 / mu_kbps if math.isfinite(mu_kbps) else 0.0
    return gamma1, 3 * (1 + gamma1)


def bounds(inputs: BoundInputs, media: MediaConfig, d_hap: Optional[float] = None) -> BoundOutputs:
    """All bounds for one channel; ``d_hap`` overrides the analytical haptic bound."""
    k = k_opt(inputs)
    hap = d_hap_bound(inputs) if d_hap is None else d_hap
    s_m = derive_rates(media).s_m
    if s_m > 0:
        aud, vid = av_bounds(hap, media.s_a, s_m, media.f_v, inputs.k_max)
    else:
        aud = vid = hap
    gamma1, jb = jitter_bound(inputs.rate_model, inputs.mu_kbps)
    return BoundOutputs(k, d_inc(inputs), q_inc(inputs), hap, aud, vid, jb, gamma1)


def bounds_csv(rows: Iterable[Tuple[BoundInputs, BoundOutputs, Optional[float]]],
               path: str | Path | None = None) -> str:
    """Bound table keyed by (mu, tau, N, R_cross), with an optional simulated max."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mu_kbps", "tau_ms", "N", "R_cross_kbps", "k_opt", "d_inc_ms", "q_inc_kbit",
                "d_hap_ms", "d_aud_ms", "d_vid_ms", "jitter_bound_ms", "sim_max_haptic_ms"])
    for inp, out, sim in rows:
        w.writerow([inp.mu_kbps, inp.tau_ms, inp.N, inp.R_cross_kbps, out.k_opt,
                    f"{out.d_inc_ms:.4f}", f"{out.q_inc_kbit:.4f}", f"{out.d_hap_ms:.4f}",
                    f"{out.d_aud_ms:.4f}", f"{out.d_vid_ms:.4f}", f"{out.jitter_bound_ms:.4f}",
                    "" if sim is None else f"{sim:.4f}"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# trace metrics


def jitter(gen: np.ndarray, recv: np.ndarray) -> np.ndarray:
    """Per-sample jitter ``|d recv - d gen|`` over a sequence of displayed items.

    Items must be in generation order and all delivered; the first item
    has no predecessor, so the result is one shorter than the input.
    """
    gen = np.asarray(gen, float)
    recv = np.asarray(recv, float)
    return np.abs(np.diff(recv) - np.diff(gen))


@dataclass
class MediaSummary:
    count: int = 0
    lost: int = 0
    max_delay_ms: float = float("nan")
    mean_delay_ms: float = float("nan")
    max_jitter_ms: float = float("nan")
    mean_jitter_ms: float = float("nan")

    def qos_ok(self, limits: Tuple[float, float]) -> bool:
        if self.count == 0:
            return True
        delay, jit = limits
        jit_ok = not (self.max_jitter_ms > jit)     # NaN (single item) passes
        return self.max_delay_ms <= delay and jit_ok


@dataclass
class StreamSummary:
    sent: int = 0
    dropped: int = 0
    throughput_kbps: float = 0.0

    @property
    def loss_fraction(self) -> float:
        return self.dropped / self.sent if self.sent else 0.0


@dataclass
class RunSummary:
    window_ms: Tuple[float, float]
    media: Dict[str, Dict[str, MediaSummary]] = field(default_factory=dict)
    streams: Dict[str, Dict[str, StreamSummary]] = field(default_factory=dict)
    qos: Dict[str, Dict[str, bool]] = field(default_factory=dict)

    def passed(self, channels: Sequence[str] = (FWD, BWD)) -> bool:
        return all(ok for ch in channels for ok in self.qos[ch].values())


def _media_summary(gen: np.ndarray, recv: np.ndarray, status: np.ndarray) -> MediaSummary:
    delivered = status == DELIVERED
    out = MediaSummary(count=int(delivered.sum()), lost=int((status == DROPPED).sum()))
    if out.count == 0:
        return out
    g, r = gen[delivered], recv[delivered]
    order = np.argsort(g, kind="stable")
    g, r = g[order], r[order]
    d = r - g
    out.max_delay_ms = float(d.max())
    out.mean_delay_ms = float(d.mean())
    if out.count > 1:
        j = jitter(g, r)
        out.max_jitter_ms = float(j.max())
        out.mean_jitter_ms = float(j.mean())
    return out


def metrics(trace: Trace, window: Tuple[float, Optional[float]] = (500.0, None),
            qos: QosSpec = QOS) -> RunSummary:
    """QoS summary over samples and frames generated inside ``window``."""
    t0, t1 = window
    t1 = float(trace.scenario.duration_ms) if t1 is None else t1
    if not t1 > t0:
        raise ValueError(f"empty metrics window [{t0}, {t1}]")
    summary = RunSummary((t0, t1))
    span_s = (t1 - t0) / 1000
    for ch in trace.channels:
        h = trace.haptic[ch]
        m = (h.gen >= t0) & (h.gen < t1)
        per_media = {"haptic": _media_summary(h.gen[m], h.recv[m], h.status[m])}
        for kind, fr in trace.frames[ch].items():
            gen, recv, status = fr.arrays()
            m = (gen >= t0) & (gen < t1)
            if m.any():
                per_media[kind] = _media_summary(gen[m], recv[m], status[m])
        summary.media[ch] = per_media
        summary.qos[ch] = {name: s.qos_ok(qos.limits(name)) for name, s in per_media.items()}
        streams: Dict[str, StreamSummary] = {}
        for p in trace.packets[ch]:
            if not t0 <= p.send_ms < t1:
                continue
            flow = p.flow
            s = streams.setdefault(flow, StreamSummary())
            s.sent += 1
            if p.status == DROPPED:
                s.dropped += 1
            elif p.status == DELIVERED:
                s.throughput_kbps += p.size * 8 / 1000 / span_s
        summary.streams[ch] = dict(sorted(streams.items()))
    return summary


def switch_jitter(trace: Trace, channel: str = BWD, k_from: int = 1, k_to: int = 4,
                  window: Tuple[float, Optional[float]] = (500.0, None)) -> np.ndarray:
    """Jitter of the first sample sent at ``k_to`` right after a sample sent at ``k_from``.

    One value per such switch in the window; both samples must have been
    delivered for the switch to count.
    """
    h = trace.haptic[channel]
    t0, t1 = window
    t1 = float(trace.scenario.duration_ms) if t1 is None else t1
    ok = h.status == DELIVERED
    idx = np.flatnonzero(ok[1:] & ok[:-1] & (h.k[:-1] == k_from) & (h.k[1:] == k_to)) + 1
    idx = idx[(h.gen[idx] >= t0) & (h.gen[idx] < t1)]
    return np.abs((h.recv[idx] - h.recv[idx - 1]) - (h.gen[idx] - h.gen[idx - 1]))


def snr_db(reference: Sequence[float], reconstructed: Sequence[float]) -> float:
    """``10 log10(sum ref^2 / sum (ref - rec)^2)``; ``inf`` for a perfect copy."""
    ref = np.asarray(reference, float)
    rec = np.asarray(reconstructed, float)
    if ref.shape != rec.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {rec.shape}")
    energy = float(np.sum(ref ** 2))
    if energy == 0:
        raise ValueError("reference signal has zero energy")
    err = float(np.sum((ref - rec) ** 2))
    if err == 0:
        return math.inf
    return 10 * math.log10(energy / err)


# output


def summary_csv(summary: RunSummary, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel", "stream", "count", "lost", "max_delay_ms", "mean_delay_ms",
                "max_jitter_ms", "mean_jitter_ms", "throughput_kbps", "loss_fraction", "qos_ok"])
    for ch, per_media in summary.media.items():
        for name, s in per_media.items():
            w.writerow([ch, name, s.count, s.lost, f"{s.max_delay_ms:.6f}", f"{s.mean_delay_ms:.6f}",
                        f"{s.max_jitter_ms:.6f}", f"{s.mean_jitter_ms:.6f}", "", "",
                        int(summary.qos[ch][name])])
        for flow, s in summary.streams[ch].items():
            w.writerow([ch, flow, s.sent, s.dropped, "", "", "", "",
                        f"{s.throughput_kbps:.3f}", f"{s.loss_fraction:.6f}", ""])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def report(summary: RunSummary, qos: QosSpec = QOS) -> str:
    t0, t1 = summary.window_ms
    lines = [f"window {t0:.0f}-{t1:.0f} ms "
             "(jitter = |inter-arrival - inter-generation| between displayed items)"]
    for ch, per_media in summary.media.items():
        lines.append(f"[{ch}]")
        for name, s in per_media.items():
            delay, jit = qos.limits(name)
            verdict = "ok" if summary.qos[ch][name] else "VIOLATION"
            lines.append(f"  {name:<7} max delay {s.max_delay_ms:8.3f} ms (<= {delay:g})  "
                         f"max jitter {s.max_jitter_ms:7.3f} ms (<= {jit:g})  "
                         f"mean delay {s.mean_delay_ms:8.3f}  lost {s.lost}  {verdict}")
        for flow, s in summary.streams[ch].items():
            lines.append(f"  {flow:<12} {s.throughput_kbps:9.2f} kbps  loss {s.loss_fraction:.4%}")
    return "\n".join(lines) + "\n"
