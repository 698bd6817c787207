"""Simulation scenario: dumbbell topology, media, cross-traffic, protocol."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

from ..feedback import FeedbackParams
from ..mux import BACKWARD_MEDIA, FORWARD_MEDIA, MediaConfig, derive_rates
from ..wire import MAX_K
from .traffic import CBR, VBR, TrafficSource

__all__ = ["PROTOCOLS", "FWD", "BWD", "Scenario", "dumbbell_scenario", "ScenarioError"]

FWD = "fwd"     # OP -> TOP
BWD = "bwd"     # TOP -> OP

PROTOCOLS = ("dpm", "dpm_holdup", "no_merge", "multistep", "rtp_feedback", "nafcah", "weber_mux")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    protocol: str = "dpm"
    duration_ms: int = 50_000
    seed: int = 1
    mu_kbps: float = 1500.0
    link_prop_ms: float = 5.0
    queue_capacity_pkts: int = 100
    media_fwd: MediaConfig = FORWARD_MEDIA
    media_bwd: MediaConfig = BACKWARD_MEDIA
    cross_fwd: Tuple[TrafficSource, ...] = ()
    cross_bwd: Tuple[TrafficSource, ...] = ()
    clock_offset_ms: float = 0.0
    k_max: int = 4
    hold_up_ms: float = 500.0
    feedback: FeedbackParams = field(default_factory=FeedbackParams)
    # force signal carried by backward haptic samples: "none", "synthetic", or a CSV path
    force: str = "none"
    force_seed: int = 0
    weber_threshold: float = 0.12
    weber_av_chunk_bytes: int = 1000
    nafcah_probe_hz: float = 100.0
    nafcah_probe_bytes: int = 64
    rtp_report_ms: float = 500.0
    stale_filter: bool = True

    def __post_init__(self):
        object.__setattr__(self, "cross_fwd", tuple(self.cross_fwd))
        object.__setattr__(self, "cross_bwd", tuple(self.cross_bwd))
        self.validate()

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ScenarioError(f"unknown protocol {self.protocol!r}; choose from {', '.join(PROTOCOLS)}")
        if not self.mu_kbps > 0:
            raise ScenarioError("mu_kbps must be positive")
        if not self.duration_ms > 0:
            raise ScenarioError("duration_ms must be positive")
        if self.link_prop_ms < 0:
            raise ScenarioError("link_prop_ms must be non-negative")
        if self.queue_capacity_pkts < 1:
            raise ScenarioError("queue_capacity_pkts must be at least 1")
        if not 1 <= self.k_max <= MAX_K:
            raise ScenarioError(f"k_max must lie in [1, {MAX_K}]")
        if self.hold_up_ms < 0:
            raise ScenarioError("hold_up_ms must be non-negative")
        if not 0 < self.weber_threshold < 1:
            raise ScenarioError("weber_threshold must lie in (0, 1)")
        if self.nafcah_probe_hz <= 0 or self.rtp_report_ms <= 0:
            raise ScenarioError("probe and report intervals must be positive")
        for cfg in (self.media_fwd, self.media_bwd):
            try:
                derive_rates(cfg)
            except ValueError as exc:
                raise ScenarioError(str(exc)) from None
        for cfg in (self.media_fwd, self.media_bwd):
            for f in (cfg.f_a, cfg.f_v):
                if f and not math.isclose(1000 / f, round(1000 / f)):
                    raise ScenarioError(f"A/V frame period 1000/{f} ms is not a whole number of ticks")
        for chan in (self.cross_fwd, self.cross_bwd):
            ids = [s.name for s in chan]
            if len(ids) != len(set(ids)):
                raise ScenarioError(f"duplicate source names in {ids}")

    @property
    def tau_ms(self) -> float:
        return 3 * self.link_prop_ms

    def cross(self, channel: str) -> Tuple[TrafficSource, ...]:
        return self.cross_fwd if channel == FWD else self.cross_bwd

    def media(self, channel: str) -> MediaConfig:
        return self.media_fwd if channel == FWD else self.media_bwd

    def protocol_for(self, channel: str) -> str:
        """Transmitter policy of the endpoint sending on ``channel``.

        NAFCAH adapts only the forward channel and the visual-haptic
        multiplexer only the backward one; the other side runs DPM.
        """
        if self.protocol == "nafcah":
            return "nafcah" if channel == FWD else "dpm"
        if self.protocol == "weber_mux":
            return "weber_mux" if channel == BWD else "dpm"
        return self.protocol

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def dumbbell_scenario(r_cbr_bwd: float = 400.0, r_cbr_fwd: Optional[float] = None, *,
                   cbr_on_ms: float = 500.0, vbr: bool = True,
                   vbr_range: Tuple[float, float] = (320.0, 480.0),
                   cbr_pkt_bytes: int = 1000, vbr_pkt_bytes: int = 1000,
                   vbr_redraw_ms: float = 50.0,
                   extra_bwd: Sequence[TrafficSource] = (), **kw) -> Scenario:
    """Dumbbell with VBR from t=0 and CBR from ``cbr_on_ms`` on both channels.

    The forward channel gets the same cross-traffic parameters as the
    backward one unless ``r_cbr_fwd`` is given.
    """
    if r_cbr_fwd is None:
        r_cbr_fwd = r_cbr_bwd

    def channel(rate: float) -> Tuple[TrafficSource, ...]:
        out = []
        if vbr:
            out.append(TrafficSource("vbr", VBR, rate_range_kbps=vbr_range,
                                     pkt_bytes=vbr_pkt_bytes, redraw_ms=vbr_redraw_ms))
        if rate > 0:
            out.append(TrafficSource("cbr", CBR, rate, pkt_bytes=cbr_pkt_bytes,
                                     on_off=((cbr_on_ms, math.inf),)))
        return tuple(out)

    return Scenario(cross_fwd=channel(r_cbr_fwd),
                    cross_bwd=channel(r_cbr_bwd) + tuple(extra_bwd), **kw)
