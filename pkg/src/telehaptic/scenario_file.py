"""Scenario files: INI text with one section per concern.

Keys are addressed as ``section.key`` for overrides, e.g.
``scenario.protocol=multistep``, ``feedback.alpha=0.3`` or
``cross.bwd.cbr.rate_kbps=350``. The alias ``r_cbr`` sets the rate of every
backward CBR source named ``cbr``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import fields
from typing import Dict, Iterable, List, Tuple

from .feedback import FeedbackParams
from .mux import MediaConfig
from .netsim.scenario import BWD, FWD, Scenario, ScenarioError
from .netsim.traffic import CBR, TrafficSource

__all__ = ["scenario_to_ini", "scenario_from_ini", "load_scenario", "apply_overrides",
           "parse_override", "SCHEMA", "ALIASES"]

ALIASES = {
    "r_cbr": "cross.bwd.cbr.rate_kbps",
    "r_cbr_fwd": "cross.fwd.cbr.rate_kbps",
    "protocol": "scenario.protocol",
    "seed": "scenario.seed",
    "duration_ms": "scenario.duration_ms",
    "mu_kbps": "scenario.mu_kbps",
}

_SCALAR_FIELDS = [f.name for f in fields(Scenario)
                  if f.name not in ("media_fwd", "media_bwd", "cross_fwd", "cross_bwd", "feedback")]

SCHEMA = """\
# Scenario file schema (INI). Every key is optional; defaults shown.
# Override any key from the command line with --set section.key=value.

[scenario]
protocol = dpm              # dpm | dpm_holdup | no_merge | multistep | rtp_feedback | nafcah | weber_mux
duration_ms = 50000         # simulated time; haptic ticks at 1 kHz
seed = 1                    # seeds every VBR source (independently per source)
mu_kbps = 1500              # bottleneck capacity, both directions
link_prop_ms = 5            # per hop; one-way propagation is 3 hops
queue_capacity_pkts = 100   # droptail limit of each bottleneck queue
clock_offset_ms = 0         # receiver clock error applied to delay measurement
k_max = 4                   # largest merge factor
hold_up_ms = 500            # hold-up time (dpm_holdup only)
force = none                # none | synthetic | path to a t_ms,value CSV
force_seed = 0              # seed of the synthetic force trace
weber_threshold = 0.12      # deadband of the Weber sampler
weber_av_chunk_bytes = 1000 # A/V bytes per packet of the Weber multiplexer
nafcah_probe_hz = 100       # probe rate of the RTT-based baseline
nafcah_probe_bytes = 64     # probe payload
rtp_report_ms = 500         # receiver report interval of the RTP baseline
stale_filter = true         # ignore notifications about packets sent before the last k change

[feedback]
alpha = 0.2                 # EWMA weight of the newest delay
N = 8                       # trigger window length
tolerance = 0.1             # relative band of the steady trigger

[media.fwd]                 # OP -> TOP; [media.bwd] likewise (TOP -> OP)
s_h = 24                    # haptic sample bytes (backward default 12)
f_a = 0                     # audio frames per second (backward 50)
s_a = 0                     # audio frame bytes (backward 160)
f_v = 0                     # video frames per second (backward 25)
s_v = 0                     # video frame bytes (backward 2000)

[cross.bwd.<name>]          # one section per cross-traffic source; cross.fwd.<name> likewise
kind = CBR                  # CBR | VBR
rate_kbps = 400             # CBR wire rate
rate_range_kbps = 320,480   # VBR: rate redrawn uniformly from this range
redraw_ms = 50              # VBR: redraw interval
pkt_bytes = 1000            # payload bytes; 54 B of headers are added on the wire
on_off = 500-inf            # comma-separated start-stop windows in ms

[assert]                    # optional checks for `run --scenario`
qos = bwd                   # channels whose haptic/audio/video QoS must hold
"""


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return str(v)


def _windows_text(on_off) -> str:
    return ",".join(f"{_fmt(a)}-{_fmt(b)}" for a, b in on_off)


def _parse_windows(text: str) -> Tuple[Tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        start, sep, stop = part.partition("-")
        if not sep:
            raise ScenarioError(f"on_off window {part!r} must look like start-stop")
        out.append((float(start), float(stop)))
    return tuple(out)


def scenario_to_ini(sc: Scenario) -> str:
    cp = _to_parser(sc)
    lines = []
    for section in cp.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in cp[section].items())
        lines.append("")
    return "\n".join(lines)


def _to_parser(sc: Scenario) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["scenario"] = {name: _fmt(getattr(sc, name)) for name in _SCALAR_FIELDS}
    cp["feedback"] = {f.name: _fmt(getattr(sc.feedback, f.name)) for f in fields(FeedbackParams)}
    for ch, media in ((FWD, sc.media_fwd), (BWD, sc.media_bwd)):
        cp[f"media.{ch}"] = {f.name: _fmt(getattr(media, f.name)) for f in fields(MediaConfig)
                             if f.name != "f_h"}
    for ch in (FWD, BWD):
        for src in sc.cross(ch):
            sec = {"kind": src.kind, "pkt_bytes": str(src.pkt_bytes), "on_off": _windows_text(src.on_off)}
            if src.kind == CBR:
                sec["rate_kbps"] = _fmt(src.rate_kbps)
            else:
                sec["rate_range_kbps"] = ",".join(_fmt(x) for x in src.rate_range_kbps)
                sec["redraw_ms"] = _fmt(src.redraw_ms)
            cp[f"cross.{ch}.{src.name}"] = sec
    return cp


def _convert(name: str, text: str, default):
    if isinstance(default, bool):
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ScenarioError(f"{name}: expected a boolean, got {text!r}")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ScenarioError(f"{name}: expected a number, got {text!r}") from None
    return text.strip()


def _from_parser(cp: configparser.ConfigParser) -> Scenario:
    base = Scenario()
    kw: Dict[str, object] = {}
    known = {"scenario", "feedback", "media.fwd", "media.bwd", "assert"}
    for section in cp.sections():
        if section not in known and not section.startswith(("cross.fwd.", "cross.bwd.")):
            raise ScenarioError(f"unknown section [{section}]")
    if cp.has_section("scenario"):
        for key, text in cp["scenario"].items():
            if key not in _SCALAR_FIELDS:
                raise ScenarioError(f"unknown key scenario.{key}")
            kw[key] = _convert(f"scenario.{key}", text, getattr(base, key))
    if cp.has_section("feedback"):
        fb = {}
        for key, text in cp["feedback"].items():
            if not hasattr(base.feedback, key):
                raise ScenarioError(f"unknown key feedback.{key}")
            fb[key] = _convert(f"feedback.{key}", text, getattr(base.feedback, key))
        try:
            kw["feedback"] = FeedbackParams(**{**base.feedback.__dict__, **fb})
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    for ch in (FWD, BWD):
        sec = f"media.{ch}"
        if cp.has_section(sec):
            default = base.media(ch)
            vals = {}
            for key, text in cp[sec].items():
                if not hasattr(default, key) or key == "f_h":
                    raise ScenarioError(f"unknown key {sec}.{key}")
                vals[key] = _convert(f"{sec}.{key}", text, getattr(default, key))
            try:
                kw[f"media_{ch}"] = MediaConfig(**{**default.__dict__, **vals})
            except ValueError as exc:
                raise ScenarioError(str(exc)) from None
        kw[f"cross_{ch}"] = tuple(_source(cp, s) for s in cp.sections()
                                  if s.startswith(f"cross.{ch}."))
    try:
        return Scenario(**kw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None


def _source(cp: configparser.ConfigParser, section: str) -> TrafficSource:
    name = section.split(".", 2)[2]
    sec = cp[section]
    allowed = {"kind", "rate_kbps", "rate_range_kbps", "redraw_ms", "pkt_bytes", "on_off"}
    extra = set(sec) - allowed
    if extra:
        raise ScenarioError(f"unknown keys in [{section}]: {', '.join(sorted(extra))}")
    kind = sec.get("kind", CBR).strip().upper()
    kw: Dict[str, object] = {"kind": kind}
    try:
        if "rate_kbps" in sec:
            kw["rate_kbps"] = float(sec["rate_kbps"])
        if "rate_range_kbps" in sec:
            lo, hi = (float(x) for x in sec["rate_range_kbps"].split(","))
            kw["rate_range_kbps"] = (lo, hi)
        if "redraw_ms" in sec:
            kw["redraw_ms"] = float(sec["redraw_ms"])
        if "pkt_bytes" in sec:
            kw["pkt_bytes"] = int(sec["pkt_bytes"])
        if "on_off" in sec:
            kw["on_off"] = _parse_windows(sec["on_off"])
        return TrafficSource(name, **kw)
    except ValueError as exc:
        raise ScenarioError(f"[{section}]: {exc}") from None


def scenario_from_ini(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None
    return _from_parser(cp)


def load_scenario(path) -> Tuple[Scenario, List[str]]:
    """Read a scenario file; also returns the channels named in ``[assert] qos``."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from None
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None
    qos = []
    if cp.has_section("assert"):
        qos = [c.strip() for c in cp["assert"].get("qos", "").split(",") if c.strip()]
        bad = set(qos) - {FWD, BWD}
        if bad:
            raise ScenarioError(f"[assert] qos names unknown channels {sorted(bad)}")
    return _from_parser(cp), qos


def parse_override(text: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ScenarioError(f"override {text!r} must look like key=value")
    return key.strip(), value.strip()


def apply_overrides(sc: Scenario, overrides: Iterable[Tuple[str, str]]) -> Scenario:
    """Return ``sc`` with ``section.key=value`` overrides applied."""
    overrides = list(overrides)
    if not overrides:
        return sc
    cp = _to_parser(sc)
    for key, value in overrides:
        key = ALIASES.get(key, key)
        section, dot, option = key.rpartition(".")
        if not dot:
            section, option = "scenario", key
        if not cp.has_section(section):
            if section.startswith(("cross.fwd.", "cross.bwd.")):
                cp.add_section(section)
            else:
                raise ScenarioError(f"unknown section in override {key!r}")
        elif section == "scenario" and option not in _SCALAR_FIELDS:
            raise ScenarioError(f"unknown key scenario.{option}")
        cp[section][option] = value
    return _from_parser(cp)
