import numpy as np
import pytest

from telehaptic.baselines import (RTCP_BYTES, MultistepController, NafcahEstimator,
                                  NoMergeController, WeberParams, WeberSampler, multistep_on_trigger,
                                  read_force_csv, rtp_report_times, synthetic_force, weber_sample,
                                  write_force_csv, zoh_reconstruct)
from telehaptic.feedback import Trigger

C, S = Trigger.CONGESTION, Trigger.STEADY


def test_weber_threshold():
    s = WeberSampler()
    assert s.offer(1.0)
    assert not s.offer(1.10)
    assert s.offer(1.13)
    assert s.last_sent == 1.13


def test_weber_constant_signal_sends_once():
    assert weber_sample(np.full(100, 0.5)).sum() == 1


def test_weber_from_zero():
    assert list(weber_sample([0.0, 0.0, 0.01])) == [True, False, True]


def test_weber_rejects_non_finite():
    with pytest.raises(ValueError):
        weber_sample([1.0, np.nan])
    with pytest.raises(ValueError):
        WeberParams(1.0)


def test_zoh_holds_over_gap():
    recv = [1.0, 2.0, np.nan, np.nan, 5.0]
    vals = [10.0, 20.0, 30.0, 40.0, 50.0]
    out = zoh_reconstruct(recv, vals, [0.5, 1, 2, 3, 4, 5, 6], fill=0.0)
    assert list(out) == [0, 10, 20, 20, 20, 50, 50]


def test_zoh_ignores_late_older_sample():
    # sample 0 arrives after sample 1; the display must not go back
    out = zoh_reconstruct([3.0, 2.0], [1.0, 2.0], [2, 3, 4], gen_ms=[0, 1])
    assert list(out) == [2.0, 2.0, 2.0]


def test_zoh_empty():
    with pytest.raises(ValueError):
        zoh_reconstruct([], [], [1])


def test_no_merge_stays_at_one():
    c = NoMergeController()
    for t in (C, C, S):
        c.on_trigger(t, 0)
        assert c.k == 1


def test_multistep():
    assert [multistep_on_trigger(k, C) for k in (1, 2, 3, 4)] == [2, 3, 4, 4]
    assert [multistep_on_trigger(k, S) for k in (1, 2, 3, 4)] == [1, 1, 2, 3]
    c = MultistepController()
    for t in (C, C, S):
        c.on_trigger(t, 0)
    assert c.k == 2


def test_rtp_reports():
    assert rtp_report_times(2000) == [500, 1000, 1500]
    assert RTCP_BYTES == 32


def test_nafcah_halves_rtt():
    n = NafcahEstimator()
    out = [n.on_rtt(2.0 * i) for i in range(1, 9)]
    assert out[-1] is C and n.samples == 8
    assert n.state.d_avg is not None


def test_synthetic_force_shape():
    f = synthetic_force(20_000, seed=3)
    assert f.shape == (20_000,)
    slow = f[:3000]
    assert 0.2 - 1e-9 <= slow.min() and slow.max() <= 0.9 + 1e-9
    fast = f[3000:6000]
    assert np.abs(fast).max() <= 0.04 + 1e-12
    assert weber_sample(fast).mean() > weber_sample(slow).mean()
    assert np.array_equal(f, synthetic_force(20_000, seed=3))


def test_force_csv_round_trip(tmp_path):
    f = synthetic_force(500, seed=1)
    p = tmp_path / "f.csv"
    write_force_csv(p, f)
    assert np.array_equal(read_force_csv(p), f)


def test_force_csv_rejects_gaps(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("t_ms,value\n0,1\n2,1\n")
    with pytest.raises(ValueError):
        read_force_csv(p)
