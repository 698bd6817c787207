"""Named experiments: the runs each one needs and the outcome it asserts.

A preset maps a base seed to labelled scenarios; its check inspects the
finished traces and returns ``(assertion, ok, detail)`` rows. The CLI
turns any failed assertion into exit status 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from .analysis import BoundInputs, bounds_csv, bounds, d_hap_bound, k_opt, metrics
from .dpm import RateModel
from .mux import BACKWARD_MEDIA
from .netsim.scenario import BWD, FWD, Scenario, dumbbell_scenario
from .netsim.trace import DELIVERED, Trace
from .netsim.traffic import CBR, TrafficSource, staircase_sources

__all__ = ["Preset", "PRESETS", "Check", "max_haptic_delay", "cbr_only_scenario"]

Check = Tuple[str, bool, str]
DURATION = 50_000
BWD_MODEL = RateModel.from_media(BACKWARD_MEDIA)


@dataclass(frozen=True)
class Preset:
    name: str
    about: str
    build: Callable[[int], Dict[str, Scenario]]
    check: Callable[[Dict[str, Trace]], List[Check]]
    # optional extra CSV: (file name, writer of traces -> text)
    table: Tuple[str, Callable[[Dict[str, Trace]], str]] | None = None


def max_haptic_delay(trace: Trace, channel: str = BWD, t0: float = 500.0,
                     t1: float = math.inf) -> float:
    h = trace.haptic[channel]
    m = (h.gen >= t0) & (h.gen < t1) & (h.status == DELIVERED)
    return float(h.delay[m].max()) if m.any() else math.nan


def _qos(trace: Trace, channel: str = BWD) -> List[Check]:
    s = metrics(trace)
    out = []
    for media, ok in s.qos[channel].items():
        m = s.media[channel][media]
        out.append((f"{channel} {media} QoS", ok,
                    f"max delay {m.max_delay_ms:.2f} ms, max jitter {m.max_jitter_ms:.2f} ms"))
    loss = s.streams[channel].get("telehaptic")
    dropped = loss.dropped if loss else 0
    out.append((f"{channel} telehaptic loss-free", dropped == 0, f"{dropped} packets dropped"))
    return out


def _delay_check(label: str, trace: Trace, limit: float, above: bool, channel: str = BWD,
                 t0: float = 500.0, t1: float = math.inf) -> Check:
    d = max_haptic_delay(trace, channel, t0, t1)
    ok = d > limit if above else d <= limit
    rel = ">" if above else "<="
    return (f"{label} max haptic delay {rel} {limit:g} ms", ok, f"{d:.2f} ms")


# fig8a / fig8b

def _fig8(rate: float):
    def build(seed):
        return {"dpm": dumbbell_scenario(rate, duration_ms=DURATION, seed=seed)}

    def check(traces):
        tr = traces["dpm"]
        visited = sorted({k for t, k in tr.k_timeline[BWD] if t >= 500})
        return [_delay_check("DPM", tr, 30.0, above=False),
                ("k reaches k_max after congestion", 4 in visited, f"k values {visited}")]
    return build, check


# fig9: multistep ablation

def _fig9_build(seed):
    return {name: dumbbell_scenario(400, protocol=name, duration_ms=DURATION, seed=seed)
            for name in ("dpm", "multistep")}


def _fig9_check(traces):
    return [_delay_check("multistep", traces["multistep"], 30.0, above=True),
            _delay_check("DPM", traces["dpm"], 30.0, above=False)]


# fig10: staircase

STAIRCASE_PHASES = ((0, 500), (500, 2500), (2500, 4500), (4500, 6500), (6500, 10_000))


def _fig10_build(seed):
    return {"dpm": dumbbell_scenario(0, duration_ms=10_000, seed=seed, extra_bwd=tuple(staircase_sources()))}


def _fig10_phases(tr: Trace):
    rows = []
    for t0, t1 in STAIRCASE_PHASES:
        ks = tr.k_at(BWD, np.arange(t0, t1))
        r_cross = 400 + sum(s.rate_kbps for s in staircase_sources() if s.active(t0))
        rows.append((t0, t1, r_cross, k_opt(BoundInputs(1500, 15, 8, r_cross, BWD_MODEL)),
                     int(np.bincount(ks).argmax())))
    return rows


def _fig10_check(traces):
    rows = _fig10_phases(traces["dpm"])
    modal = [r[4] for r in rows]
    expected = [r[3] for r in rows]
    rates = [round(BWD_MODEL.rate(k), 2) for k in modal]
    return [("modal k per phase equals k_opt", modal == expected,
             f"modal {modal}, k_opt {expected}, rates {rates} kbps")]


def _fig10_table(traces):
    lines = ["t0_ms,t1_ms,r_cross_kbps,k_opt,modal_k,modal_rate_kbps"]
    for t0, t1, r, ko, km in _fig10_phases(traces["dpm"]):
        lines.append(f"{t0},{t1},{r:g},{ko},{km},{BWD_MODEL.rate(km):.2f}")
    return "\n".join(lines) + "\n"


# fig13: loss sweep

FIG13_RATES = (50, 150, 250, 350, 400)


def _fig13_build(seed):
    return {f"{p}_{r}": dumbbell_scenario(r, protocol=p, duration_ms=DURATION, seed=seed)
            for p in ("dpm", "no_merge") for r in FIG13_RATES}


def _loss(tr: Trace, prefix: str) -> Tuple[int, int]:
    streams = metrics(tr).streams[BWD]
    sent = sum(s.sent for f, s in streams.items() if f.startswith(prefix))
    dropped = sum(s.dropped for f, s in streams.items() if f.startswith(prefix))
    return sent, dropped


def _fig13_table(traces):
    lines = ["r_cbr_kbps,protocol,telehaptic_loss,cross_loss"]
    for p in ("dpm", "no_merge"):
        for r in FIG13_RATES:
            tr = traces[f"{p}_{r}"]
            ts, td = _loss(tr, "telehaptic")
            cs, cd = _loss(tr, "cross:")
            lines.append(f"{r},{p},{td / ts if ts else 0:.6f},{cd / cs if cs else 0:.6f}")
    return "\n".join(lines) + "\n"


def _fig13_check(traces):
    dpm = [_loss(traces[f"dpm_{r}"], "telehaptic")[1] + _loss(traces[f"dpm_{r}"], "cross:")[1]
           for r in FIG13_RATES]
    nm = []
    for r in FIG13_RATES:
        sent, dropped = _loss(traces[f"no_merge_{r}"], "telehaptic")
        nm.append(dropped / sent if sent else 0.0)
    return [("DPM loss-free across the sweep", all(x == 0 for x in dpm), f"drops {dpm}"),
            ("no-merge loss positive and non-decreasing",
             all(x > 0 for x in nm) and all(b >= a for a, b in zip(nm, nm[1:])),
             "loss " + ", ".join(f"{x:.4f}" for x in nm))]


# fig15: RTP-style report feedback

def _fig15_build(seed):
    return {name: dumbbell_scenario(400, protocol=name, duration_ms=DURATION, seed=seed)
            for name in ("rtp_feedback", "dpm")}


def _fig15_check(traces):
    return [_delay_check("RTP feedback (before 1 s)", traces["rtp_feedback"], 30.0, above=True,
                         t0=0.0, t1=1000.0),
            _delay_check("DPM", traces["dpm"], 30.0, above=False)]


# fig16: Weber multiplexing

def _fig16_build(seed):
    return {"weber_mux": dumbbell_scenario(400, protocol="weber_mux", force="synthetic",
                                        force_seed=seed, duration_ms=DURATION, seed=seed)}


def _fig16_check(traces):
    tr = traces["weber_mux"]
    w = tr.weber
    share = w["significant"] / w["offered"] if w["offered"] else 0.0
    return [_delay_check("Weber multiplexing (fast segment)", tr, 30.0, above=True,
                         t0=3000.0, t1=6000.0),
            ("Weber sampler discards samples", share < 1.0, f"{share:.1%} of samples sent")]


# fig17: asymmetric congestion

def _fig17_build(seed):
    return {name: dumbbell_scenario(400, 780, protocol=name, duration_ms=DURATION, seed=seed)
            for name in ("nafcah", "dpm")}


def _fig17_check(traces):
    return [_delay_check("NAFCAH-style", traces["nafcah"], 30.0, above=True, channel=FWD),
            _delay_check("DPM", traces["dpm"], 30.0, above=False, channel=FWD)]


# table3

def _table3_build(seed):
    return {"dpm": dumbbell_scenario(400, duration_ms=DURATION, seed=seed)}


def _table3_check(traces):
    return _qos(traces["dpm"], BWD)


# bounds-sweep

BOUND_RATES = (500, 600, 660, 700, 800)


def cbr_only_scenario(r_cross: float, seed: int = 1, duration_ms: int = DURATION,
                      **kw) -> Scenario:
    """CBR-only backward cross-traffic: 400 kbps from t = 0, the rest from 500 ms."""
    srcs = [TrafficSource("base", CBR, min(r_cross, 400.0))]
    if r_cross > 400:
        srcs.append(TrafficSource("cbr", CBR, r_cross - 400.0, on_off=((500.0, math.inf),)))
    return Scenario(duration_ms=duration_ms, seed=seed, cross_bwd=tuple(srcs), **kw)


def _bounds_build(seed):
    return {f"r{r}": cbr_only_scenario(r, seed) for r in BOUND_RATES}


def _slack(sc: Scenario) -> float:
    return max(s.wire_bytes for s in sc.cross_bwd) * 8 / sc.mu_kbps


def _bounds_check(traces):
    out = []
    for r in BOUND_RATES:
        tr = traces[f"r{r}"]
        bound = d_hap_bound(BoundInputs(tr.scenario.mu_kbps, tr.scenario.tau_ms,
                                        tr.scenario.feedback.N, r, BWD_MODEL))
        d = max_haptic_delay(tr)
        out.append((f"R_cross {r}: max delay <= bound + one packet", d <= bound + _slack(tr.scenario),
                    f"{d:.2f} ms vs {bound:.2f} + {_slack(tr.scenario):.2f} ms"))
    return out


def _bounds_table(traces):
    rows = []
    for r in BOUND_RATES:
        tr = traces[f"r{r}"]
        inp = BoundInputs(tr.scenario.mu_kbps, tr.scenario.tau_ms, tr.scenario.feedback.N, r,
                          BWD_MODEL)
        rows.append((inp, bounds(inp, BACKWARD_MEDIA), max_haptic_delay(tr)))
    return bounds_csv(rows)


_F8A, _F8A_CHECK = _fig8(260.0)
_F8B, _F8B_CHECK = _fig8(400.0)

PRESETS: Dict[str, Preset] = {p.name: p for p in (
    Preset("fig8a", "DPM delay and k-cycles under CBR 260 kbps", _F8A, _F8A_CHECK),
    Preset("fig8b", "DPM delay and k-cycles under CBR 400 kbps", _F8B, _F8B_CHECK),
    Preset("fig9", "multistep-increase ablation vs DPM under CBR 400 kbps", _fig9_build, _fig9_check),
    Preset("fig10", "source-rate staircase under the staggered CBR schedule", _fig10_build,
           _fig10_check, ("staircase.csv", _fig10_table)),
    Preset("fig13", "telehaptic/cross loss vs CBR rate, DPM and no-merge", _fig13_build,
           _fig13_check, ("sweep.csv", _fig13_table)),
    Preset("fig15", "RTP-style report feedback vs DPM", _fig15_build, _fig15_check),
    Preset("fig16", "Weber-sampled visual-haptic multiplexing", _fig16_build, _fig16_check),
    Preset("fig17", "RTT-based NAFCAH-style control vs DPM, forward CBR 780 kbps", _fig17_build,
           _fig17_check),
    Preset("table3", "QoS summary under CBR 400 kbps plus VBR", _table3_build, _table3_check),
    Preset("bounds-sweep", "analytical delay bound vs simulation, CBR-only cross-traffic",
           _bounds_build, _bounds_check, ("bounds.csv", _bounds_table)),
)}
