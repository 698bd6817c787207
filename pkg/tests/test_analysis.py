import math
from fractions import Fraction

import numpy as np
import pytest

from telehaptic.analysis import (QOS, BoundInputs, InfeasibleError, MediaSummary, av_bounds, bounds,
                                 bounds_csv, d_hap_bound, d_inc, jitter, jitter_bound, k_opt,
                                 metrics, q_inc, report, snr_db, summary_csv, switch_jitter)
from telehaptic.dpm import RateModel
from telehaptic.mux import BACKWARD_MEDIA, FORWARD_MEDIA
from telehaptic.netsim import BWD, FWD, Scenario, dumbbell_scenario, run

BWD_MODEL = RateModel.from_media(BACKWARD_MEDIA)


def inputs(r):
    return BoundInputs(1500, 15, 8, r, BWD_MODEL)


def oracle_d_hap(r, mu=1500, tau=15, N=8, D=560, OHR=536):
    """Exact rational evaluation written out from the closed form."""
    r, mu = Fraction(r), Fraction(mu)
    rate = lambda k: D + Fraction(OHR, k)
    k = next(k for k in range(1, 5) if rate(k) + r <= mu)
    if k == 1:
        return float(tau + rate(1) / mu)
    rho = (r + rate(k - 1) - mu) / mu
    n = N * (k - 1)
    return float(tau + (k - 1) + (n + 2 * tau + 1) * rho + n * rho ** 2)


@pytest.mark.parametrize("r,k", [(0, 1), (400, 1), (404, 1), (405, 2), (500, 2), (672, 2),
                                 (673, 3), (700, 3), (761, 3), (762, 4), (806, 4)])
def test_k_opt(r, k):
    assert k_opt(inputs(r)) == k


def test_infeasible():
    with pytest.raises(InfeasibleError):
        k_opt(inputs(807))


@pytest.mark.parametrize("r,expected", [(500, 18.5288), (600, 21.2326), (660, 22.8890),
                                        (700, 17.8829), (800, 19.4337), (300, 15.7307)])
def test_d_hap_bound(r, expected):
    assert d_hap_bound(inputs(r)) == pytest.approx(expected, abs=1e-4)
    assert d_hap_bound(inputs(r)) == pytest.approx(oracle_d_hap(r), rel=1e-12)


def test_d_inc_and_q_inc():
    # R_cross 500: k_opt 2, rho = 96/1500
    rho = 96 / 1500
    assert d_inc(inputs(500)) == pytest.approx(8 + 8 * rho + 31)
    assert q_inc(inputs(500)) == pytest.approx(96 * (8 + 8 * rho + 31) / 1000)
    assert d_inc(inputs(300)) == 0 and q_inc(inputs(300)) == 0


def test_bound_grows_with_window():
    assert (d_hap_bound(BoundInputs(1500, 15, 16, 600, BWD_MODEL))
            > d_hap_bound(BoundInputs(1500, 15, 8, 600, BWD_MODEL)))


def test_av_bounds():
    aud, vid = av_bounds(30.0, 160, 58, 25)
    assert aud == pytest.approx(35.7586, abs=1e-4)
    assert math.floor(aud * 100) / 100 == 35.75
    assert vid == 73.0
    with pytest.raises(ValueError):
        av_bounds(30.0, 160, 0, 25)


def test_jitter_bound():
    g, b = jitter_bound(BWD_MODEL, 1500)
    assert g == pytest.approx(0.7307, abs=1e-4)
    assert b == pytest.approx(5.192, abs=1e-3)


def test_bounds_bundle_and_csv():
    out = bounds(inputs(600), BACKWARD_MEDIA)
    assert out.k_opt == 2 and out.d_hap_ms == pytest.approx(21.2326, abs=1e-4)
    assert out.d_vid_ms == pytest.approx(out.d_hap_ms + 43)
    fwd = bounds(BoundInputs(1500, 15, 8, 600, RateModel.from_media(FORWARD_MEDIA)), FORWARD_MEDIA)
    assert fwd.d_aud_ms == fwd.d_hap_ms
    text = bounds_csv([(inputs(600), out, None)])
    assert text.splitlines()[1].startswith("1500,15,8,600,2,")


def test_jitter_metric():
    assert list(jitter([0, 1, 2, 3], [15, 16, 18, 18.5])) == [0, 1, 0.5]
    assert jitter([0], [15]).size == 0


def test_media_summary_qos():
    assert MediaSummary(count=10, max_delay_ms=30.0, max_jitter_ms=10.0).qos_ok(QOS.haptic)
    assert not MediaSummary(count=10, max_delay_ms=30.01, max_jitter_ms=1.0).qos_ok(QOS.haptic)
    assert MediaSummary(count=1, max_delay_ms=10.0).qos_ok(QOS.haptic)
    assert MediaSummary().qos_ok(QOS.audio)


@pytest.mark.parametrize("ref,rec,expected", [
    ([1, 1, 1, 1], [1, 1, 1, 0], 10 * math.log10(4)),
    ([3, 4], [3, 4], math.inf),
    ([2.0], [1.0], 10 * math.log10(4)),
])
def test_snr(ref, rec, expected):
    assert snr_db(ref, rec) == pytest.approx(expected)


def test_snr_errors():
    with pytest.raises(ValueError):
        snr_db([0, 0], [1, 1])
    with pytest.raises(ValueError):
        snr_db([1], [1, 2])


def test_metrics_on_idle_run():
    tr = run(Scenario(duration_ms=2000))
    s = metrics(tr)
    h = s.media[BWD]["haptic"]
    assert h.count == 1500 and h.lost == 0
    assert h.max_delay_ms == pytest.approx(15.7307, abs=1e-4)
    assert h.max_jitter_ms == pytest.approx(0, abs=1e-9)
    assert s.passed()
    assert s.media[FWD].keys() == {"haptic"}
    assert set(s.media[BWD]) == {"haptic", "audio", "video"}
    assert s.streams[BWD]["telehaptic"].loss_fraction == 0
    assert "haptic" in report(s) and summary_csv(s).startswith("channel,stream")


def test_switch_jitter_found_under_congestion():
    tr = run(dumbbell_scenario(400, duration_ms=5000))
    sj = switch_jitter(tr)
    assert sj.size > 0 and np.all(sj >= 0)
