import math

import pytest

from telehaptic.feedback import FeedbackParams
from telehaptic.netsim import BWD, ScenarioError, staircase_sources, dumbbell_scenario
from telehaptic.scenario_file import (SCHEMA, apply_overrides, load_scenario, parse_override,
                                      scenario_from_ini, scenario_to_ini)


def test_round_trip():
    sc = dumbbell_scenario(350, 780, protocol="multistep", seed=9, extra_bwd=tuple(staircase_sources()),
                        feedback=FeedbackParams(alpha=0.3, N=6))
    assert scenario_from_ini(scenario_to_ini(sc)) == sc


def test_overrides():
    sc = dumbbell_scenario(400)
    out = apply_overrides(sc, [("r_cbr", "350"), ("feedback.alpha", "0.3"), ("seed", "7"),
                               ("scenario.stale_filter", "off")])
    assert {s.name: s for s in out.cross_bwd}["cbr"].rate_kbps == 350
    assert {s.name: s for s in out.cross_fwd}["cbr"].rate_kbps == 400
    assert out.feedback.alpha == 0.3 and out.seed == 7 and out.stale_filter is False


def test_override_adds_source():
    out = apply_overrides(dumbbell_scenario(0, vbr=False),
                          [("cross.bwd.extra.rate_kbps", "100"), ("cross.bwd.extra.on_off", "0-inf")])
    (src,) = out.cross(BWD)
    assert src.name == "extra" and src.on_off == ((0.0, math.inf),)


@pytest.mark.parametrize("key,val", [
    ("scenario.nope", "1"), ("nosuch.alpha", "1"), ("feedback.beta", "1"), ("feedback.alpha", "2"),
    ("scenario.seed", "x"), ("scenario.stale_filter", "maybe"), ("protocol", "tcp"),
    ("cross.bwd.cbr.colour", "red"), ("cross.bwd.cbr.on_off", "500"), ("media.bwd.s_a", "161"),
])
def test_bad_overrides(key, val):
    with pytest.raises(ScenarioError):
        apply_overrides(dumbbell_scenario(400), [(key, val)])


def test_parse_override():
    assert parse_override(" r_cbr = 350 ") == ("r_cbr", "350")
    with pytest.raises(ScenarioError):
        parse_override("r_cbr")


def test_load_with_assert(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text("[scenario]\nduration_ms = 2000\n[cross.bwd.cbr]\nrate_kbps = 200\n[assert]\nqos = bwd\n")
    sc, qos = load_scenario(p)
    assert sc.duration_ms == 2000 and qos == ["bwd"]
    assert sc.cross_bwd[0].rate_kbps == 200


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("no section header\n")
    with pytest.raises(ScenarioError):
        load_scenario(bad)
    bad.write_text("[assert]\nqos = up\n")
    with pytest.raises(ScenarioError):
        load_scenario(bad)
    bad.write_text("[weird]\nx = 1\n")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_schema_mentions_every_section():
    for sec in ("[scenario]", "[feedback]", "[media.fwd]", "[cross.bwd.<name>]", "[assert]"):
        assert sec in SCHEMA
