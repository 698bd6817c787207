"""Discrete-event simulation of the dumbbell topology.

OP --5 ms--> n1 ==bottleneck (mu, 5 ms)==> n2 --5 ms--> TOP   (forward)
and the mirror image for the backward channel. Only the bottleneck
ingress queues hold packets; access links just add propagation delay.

Events at equal timestamps run in class order (arrivals, then
departures, then the 1 ms media ticks) and by insertion sequence
within a class, so a run is a pure function of its scenario.
"""
from __future__ import annotations

import heapq
from array import array
from collections import deque
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..baselines import (RTCP_BYTES, MultistepController, NafcahEstimator, NoMergeController,
                         WeberMuxTransmitter, WeberParams, read_force_csv, synthetic_force)
from ..dpm import DpmController, DpmParams, TelehapticPacket
from ..feedback import FeedbackState, Trigger
from ..mux import AUDIO, VIDEO, MediaConfig, Multiplexer
from ..wire import LOWER_LAYER_BYTES, decode_header
from .scenario import BWD, FWD, Scenario
from .trace import (DELIVERED, DROPPED, SUPPRESSED, FrameRecord, HapticRecord, PacketRecord,
                    Trace)
from .traffic import emission_times, rate_at, vbr_plan, VBR

__all__ = ["Simulator", "run", "offered_cross_traffic", "cross_plans", "load_force"]

ARRIVAL, DEPARTURE, TICK = 0, 1, 2

# event codes
_Q_ARRIVE, _RX_ARRIVE, _CROSS_EMIT, _DEPART, _TICK = range(5)

TELEHAPTIC = "telehaptic"
PROBE = "probe"
ECHO = "echo"
RTCP = "rtcp"

_REVERSE = {FWD: BWD, BWD: FWD}


def cross_plans(scenario: Scenario) -> Dict[str, List[Optional[np.ndarray]]]:
    """Seeded VBR rate plans; each source on each channel draws from its own stream."""
    plans = {}
    for ci, ch in enumerate((FWD, BWD)):
        out = []
        for si, src in enumerate(scenario.cross(ch)):
            if src.kind == VBR:
                rng = np.random.default_rng([scenario.seed, ci, si])
                out.append(vbr_plan(src, scenario.duration_ms, rng))
            else:
                out.append(None)
        plans[ch] = out
    return plans


def offered_cross_traffic(scenario: Scenario, t_ms: float,
                          plans: Optional[Dict[str, list]] = None) -> Dict[str, float]:
    """Instantaneous offered cross-traffic (kbps) on each channel."""
    plans = cross_plans(scenario) if plans is None else plans
    return {ch: sum(rate_at(s, t_ms, p) for s, p in zip(scenario.cross(ch), plans[ch]))
            for ch in (FWD, BWD)}


def load_force(scenario: Scenario) -> np.ndarray:
    """Backward force signal; the Weber baseline falls back to a synthetic trace."""
    n = scenario.duration_ms
    src = scenario.force
    if src == "none" and scenario.protocol == "weber_mux":
        src = "synthetic"
    if src == "none":
        return np.zeros(n)
    if src == "synthetic":
        return synthetic_force(n, scenario.force_seed)
    values = read_force_csv(src)
    if len(values) < n:
        raise ValueError(f"force trace {src} holds {len(values)} samples, run needs {n}")
    return values[:n]


class _Packet:
    __slots__ = ("flow", "channel", "size", "body", "rec", "send_ms")

    def __init__(self, flow, channel, size, body, rec, send_ms):
        self.flow = flow
        self.channel = channel
        self.size = size
        self.body = body
        self.rec = rec
        self.send_ms = send_ms


class _Bottleneck:
    """FIFO droptail queue feeding one bottleneck link."""

    def __init__(self, sim: "Simulator", channel: str, mu_kbps: float, capacity: int):
        self.sim = sim
        self.channel = channel
        self.mu = mu_kbps
        self.capacity = capacity
        self.waiting: deque = deque()
        self.in_service: Optional[_Packet] = None
        self.enqueued = 0
        self.dequeued = 0
        self.dropped = 0
        self.q_t = array("d")
        self.q_n = array("d")

    @property
    def resident(self) -> int:
        return len(self.waiting) + (self.in_service is not None)

    def arrive(self, pkt: _Packet, now: float) -> None:
        self.q_t.append(now)
        self.q_n.append(len(self.waiting))
        if self.in_service is None:
            self.enqueued += 1
            self._serve(pkt, now)
        elif len(self.waiting) >= self.capacity:
            self.dropped += 1
            self.sim.drop(pkt)
        else:
            self.enqueued += 1
            self.waiting.append(pkt)

    def _serve(self, pkt: _Packet, now: float) -> None:
        self.in_service = pkt
        self.sim.schedule(now + pkt.size * 8 / self.mu, DEPARTURE, _DEPART, self)

    def depart(self, now: float) -> _Packet:
        pkt = self.in_service
        self.in_service = None
        self.dequeued += 1
        if self.waiting:
            self._serve(self.waiting.popleft(), now)
        return pkt

    def check(self) -> None:
        assert self.enqueued == self.dequeued + self.resident, "queue conservation violated"
        assert not (self.waiting and self.in_service is None), "link idle with a non-empty queue"


class MergingTransmitter:
    """Multiplexer feeding a packetization controller."""

    def __init__(self, mux: Multiplexer, controller: DpmController):
        self.mux = mux
        self.ctrl = controller

    @property
    def k(self) -> int:
        return self.ctrl.k

    @property
    def history(self):
        return self.ctrl.history

    def tick(self, now: int, timestamp: int, value: float, frames) -> List[TelehapticPacket]:
        for kind, size in frames:
            self.mux.enqueue_frame(kind, size, now)
        pkt = self.ctrl.submit_fragment(self.mux.next_fragment(timestamp, value), now)
        return [pkt] if pkt is not None else []

    def on_trigger(self, trigger: Trigger, now: float) -> List[TelehapticPacket]:
        pkt = self.ctrl.on_trigger(trigger, now)
        return [pkt] if pkt is not None else []


def _make_transmitter(policy: str, cfg: MediaConfig, sc: Scenario,
                      piggyback: Callable[[], Tuple[int, int]]):
    if policy == "weber_mux":
        tx = WeberMuxTransmitter(cfg, WeberParams(sc.weber_threshold), sc.weber_av_chunk_bytes)
        tx.piggyback = piggyback
        return tx
    hold = sc.hold_up_ms if policy == "dpm_holdup" else 0.0
    params = DpmParams(k_max=sc.k_max, hold_up_ms=hold)
    cls = {"dpm": DpmController, "dpm_holdup": DpmController,
           "no_merge": NoMergeController, "rtp_feedback": NoMergeController,
           "multistep": MultistepController, "nafcah": MultistepController}[policy]
    return MergingTransmitter(Multiplexer(cfg), cls(params=params, piggyback=piggyback))


class _Endpoint:
    """OP or TOP: sends on ``out_ch``, receives on ``in_ch``."""

    def __init__(self, sim: "Simulator", out_ch: str):
        sc = sim.scenario
        self.sim = sim
        self.out_ch = out_ch
        self.in_ch = _REVERSE[out_ch]
        self.policy = sc.protocol_for(out_ch)
        self.cfg = sc.media(out_ch)
        self.fb = FeedbackState(sc.feedback)
        self.tx = _make_transmitter(self.policy, self.cfg, sc, self.fb.piggyback)
        # in-header notifications steer DPM-family transmitters only
        self.header_feedback = self.policy in ("dpm", "dpm_holdup", "multistep")
        self.nafcah = NafcahEstimator(sc.feedback) if self.policy == "nafcah" else None
        self.probe_period = round(1000 / sc.nafcah_probe_hz)
        self.rtcp = sc.protocol == "rtp_feedback"
        self.rtcp_period = sc.rtp_report_ms
        self.next_rtcp = sc.rtp_report_ms
        self.audio_period = round(1000 / self.cfg.f_a) if self.cfg.f_a and self.cfg.s_a else 0
        self.video_period = round(1000 / self.cfg.f_v) if self.cfg.f_v and self.cfg.s_v else 0
        self.force = sim.force if out_ch == BWD else None
        self.stale = 0

    # sending side

    def tick(self, t: int) -> None:
        sim = self.sim
        frames = []
        if self.audio_period and t % self.audio_period == 0:
            frames.append((AUDIO, self.cfg.s_a))
            sim.frames[self.out_ch][AUDIO].add(t, self.cfg.s_a)
        if self.video_period and t % self.video_period == 0:
            frames.append((VIDEO, self.cfg.s_v))
            sim.frames[self.out_ch][VIDEO].add(t, self.cfg.s_v)
        value = float(self.force[t]) if self.force is not None else 0.0
        sim.haptic[self.out_ch].value[t] = value
        for pkt in self.tx.tick(t, t, value, frames):
            sim.send_telehaptic(self.out_ch, pkt, t)
        if self.policy == "weber_mux" and not self.tx.last_significant:
            # withheld by the deadband: neither delivered nor lost
            sim.haptic[self.out_ch].status[t] = SUPPRESSED
        if self.nafcah is not None and t % self.probe_period == 0:
            size = sim.scenario.nafcah_probe_bytes + LOWER_LAYER_BYTES
            sim.send(PROBE, self.out_ch, size, t, t)
        if self.rtcp and t >= self.next_rtcp:
            self.next_rtcp += self.rtcp_period
            # report on the incoming channel travels over our outgoing one
            sim.send(RTCP, self.out_ch, RTCP_BYTES + LOWER_LAYER_BYTES,
                     (t, self.fb.last_measured_ms), t)

    def on_trigger(self, trigger: Optional[Trigger], now: float) -> None:
        if trigger is None:
            return
        self.sim.triggers[self.out_ch].append((now, trigger.value))
        for pkt in self.tx.on_trigger(trigger, now):
            self.sim.send_telehaptic(self.out_ch, pkt, now)

    # receiving side

    def receive(self, pkt: _Packet, now: float) -> None:
        sim = self.sim
        if pkt.flow == TELEHAPTIC:
            body: TelehapticPacket = pkt.body
            hdr = decode_header(body.header_bytes)
            self.fb.measure_delay(now, hdr, sim.scenario.clock_offset_ms)
            sim.deliver_telehaptic(self.in_ch, body, now)
            if self.header_feedback and not hdr.delay_indicator:
                # generation time of the packet the notification describes
                measured_gen = hdr.haptic_timestamp + hdr.k - 1 - hdr.notification_delay / 1000
                if sim.scenario.stale_filter and measured_gen < self.tx.ctrl.last_change_ms:
                    self.stale += 1
                else:
                    self.on_trigger(self.fb.ingest_notification(hdr.notification_delay,
                                                                hdr.delay_indicator), now)
        elif pkt.flow == PROBE:
            sim.send(ECHO, self.out_ch, pkt.size, pkt.body, now)
        elif pkt.flow == ECHO:
            self.on_trigger(self.nafcah.on_rtt(now - pkt.body), now)
        elif pkt.flow == RTCP:
            t_report, delay = pkt.body
            sim.rtcp_reports[self.out_ch].append((now, t_report, np.nan if delay is None else delay))


class Simulator:
    def __init__(self, scenario: Scenario, check_invariants: bool = False):
        scenario.validate()
        self.scenario = scenario
        self.check_invariants = check_invariants
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        n = scenario.duration_ms
        self.force = load_force(scenario)
        self.haptic = {ch: HapticRecord.empty(n) for ch in (FWD, BWD)}
        self.frames = {ch: {AUDIO: FrameRecord(AUDIO), VIDEO: FrameRecord(VIDEO)} for ch in (FWD, BWD)}
        self.packets: Dict[str, List[PacketRecord]] = {FWD: [], BWD: []}
        self.triggers: Dict[str, list] = {FWD: [], BWD: []}
        self.rtcp_reports: Dict[str, list] = {FWD: [], BWD: []}
        self.queues = {ch: _Bottleneck(self, ch, scenario.mu_kbps, scenario.queue_capacity_pkts)
                       for ch in (FWD, BWD)}
        self.op = _Endpoint(self, FWD)
        self.top = _Endpoint(self, BWD)
        self.receiver = {FWD: self.top, BWD: self.op}
        self._cross: List[Tuple[str, str, int, np.ndarray]] = []
        plans = cross_plans(scenario)
        for ch in (FWD, BWD):
            for src, plan in zip(scenario.cross(ch), plans[ch]):
                times = emission_times(src, n, plan)
                if len(times):
                    self._cross.append((ch, "cross:" + src.name, src.wire_bytes, times))

    # scheduling

    def schedule(self, t: float, cls: int, code: int, obj) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, cls, self._seq, code, obj))

    def send(self, flow: str, channel: str, size: int, body, now: float, k: int = 0) -> _Packet:
        rec = PacketRecord(flow, now, size, k)
        self.packets[channel].append(rec)
        pkt = _Packet(flow, channel, size, body, rec, now)
        self.schedule(now + self.scenario.link_prop_ms, ARRIVAL, _Q_ARRIVE, pkt)
        return pkt

    def send_telehaptic(self, channel: str, body: TelehapticPacket, now: float) -> None:
        self.send(TELEHAPTIC, channel, body.wire_size, body, now, body.k)

    # bookkeeping hooks

    def drop(self, pkt: _Packet) -> None:
        pkt.rec.status = DROPPED
        if pkt.flow != TELEHAPTIC:
            return
        h = self.haptic[pkt.channel]
        frames = self.frames[pkt.channel]
        for frag in pkt.body.fragments:
            if frag.haptic is not None:
                t = frag.haptic.timestamp_ms
                h.status[t] = DROPPED
                h.k[t] = pkt.body.k
            for c in frag.chunks:
                fr = frames[c.kind]
                fr.status[c.frame_no] = DROPPED

    def deliver_telehaptic(self, channel: str, body: TelehapticPacket, now: float) -> None:
        h = self.haptic[channel]
        frames = self.frames[channel]
        for frag in body.fragments:
            if frag.haptic is not None:
                t = frag.haptic.timestamp_ms
                h.recv[t] = now
                h.status[t] = DELIVERED
                h.k[t] = body.k
            for c in frag.chunks:
                fr = frames[c.kind]
                i = c.frame_no
                fr.remaining[i] -= c.nbytes
                if fr.remaining[i] == 0 and fr.status[i] != DROPPED:
                    fr.recv[i] = now
                    fr.status[i] = DELIVERED
                    fr.k[i] = body.k

    # main loop

    def run(self) -> Trace:
        sc = self.scenario
        heap = self._heap
        self.schedule(0.0, TICK, _TICK, 0)
        for idx, (ch, flow, size, times) in enumerate(self._cross):
            self.schedule(float(times[0]), ARRIVAL, _CROSS_EMIT, (idx, 0))
        back_prop = 2 * sc.link_prop_ms
        while heap:
            t, _, _, code, obj = heapq.heappop(heap)
            self.now = t
            if code == _TICK:
                self.op.tick(obj)
                self.top.tick(obj)
                if obj + 1 < sc.duration_ms:
                    self.schedule(obj + 1.0, TICK, _TICK, obj + 1)
            elif code == _Q_ARRIVE:
                self.queues[obj.channel].arrive(obj, t)
            elif code == _DEPART:
                pkt = obj.depart(t)
                if pkt.flow.startswith("cross:"):
                    pkt.rec.status = DELIVERED
                    pkt.rec.recv_ms = t
                else:
                    self.schedule(t + back_prop, ARRIVAL, _RX_ARRIVE, pkt)
            elif code == _RX_ARRIVE:
                obj.rec.status = DELIVERED
                obj.rec.recv_ms = t
                self.receiver[obj.channel].receive(obj, t)
            elif code == _CROSS_EMIT:
                idx, j = obj
                ch, flow, size, times = self._cross[idx]
                self.send_cross(ch, flow, size, t)
                if j + 1 < len(times):
                    self.schedule(float(times[j + 1]), ARRIVAL, _CROSS_EMIT, (idx, j + 1))
            if self.check_invariants:
                for q in self.queues.values():
                    q.check()
        return self._trace()

    def send_cross(self, channel: str, flow: str, size: int, now: float) -> None:
        rec = PacketRecord(flow, now, size, 0)
        self.packets[channel].append(rec)
        self.queues[channel].arrive(_Packet(flow, channel, size, None, rec, now), now)

    def _trace(self) -> Trace:
        top = self.top.tx
        counters = {ch: {"enqueued": q.enqueued, "dequeued": q.dequeued, "dropped": q.dropped,
                         "resident": q.resident} for ch, q in self.queues.items()}
        return Trace(
            scenario=self.scenario,
            haptic=self.haptic,
            frames=self.frames,
            packets=self.packets,
            k_timeline={FWD: list(self.op.tx.history), BWD: list(self.top.tx.history)},
            triggers=self.triggers,
            queue={ch: (np.frombuffer(q.q_t), np.frombuffer(q.q_n)) for ch, q in self.queues.items()},
            counters=counters,
            rtcp_reports=self.rtcp_reports,
            weber={"offered": getattr(top, "offered", 0), "significant": getattr(top, "significant", 0)},
        )


def run(scenario: Scenario) -> Trace:
    """Simulate ``scenario`` and return its trace."""
    return Simulator(scenario).run()
