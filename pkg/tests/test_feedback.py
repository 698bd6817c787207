import itertools

import pytest
from hypothesis import given, strategies as st

from telehaptic.feedback import FeedbackParams, FeedbackState, Trigger, evaluate_triggers, ewma
from telehaptic.wire import MAX_DELAY_US, MediaKind, PacketHeader


def test_ewma():
    assert ewma(None, 12.0, 0.2) == 12.0
    assert ewma(10.0, 20.0, 0.2) == pytest.approx(12.0)


def test_ewma_sequence_matches_closed_form():
    xs = [10, 20, 30, 15, 5, 40]
    fb = FeedbackState(FeedbackParams(N=100))
    for x in xs:
        fb.update(x)
    expect = xs[0] * 0.8 ** (len(xs) - 1) + sum(0.2 * x * 0.8 ** (len(xs) - 1 - i)
                                                 for i, x in enumerate(xs) if i)
    assert fb.d_avg == pytest.approx(expect)


@pytest.mark.parametrize("window,expected", [
    ([1, 2, 3, 4, 5, 6, 7, 8], Trigger.CONGESTION),
    ([10, 10.5, 9.5, 10.2, 9.9, 10, 10.8, 9.1], Trigger.STEADY),
    ([10, 10, 10, 10, 10, 10, 10, 10], Trigger.STEADY),
    ([8, 7, 6, 5, 4, 3, 2, 1], None),
    ([10, 10.5, 9.5, 10.2, 9.9, 10, 10.8, 11.5], None),
    ([1, 2, 3, 4, 5, 6, 7, 7], None),
])
def test_evaluate_triggers(window, expected):
    assert evaluate_triggers(window, 0.1) is expected


def test_band_edge_inclusive():
    assert evaluate_triggers([10, 11, 9, 10], 0.1) is Trigger.STEADY


@given(st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_triggers_mutually_exclusive(w):
    t = evaluate_triggers(w, 0.5)
    inc = all(b > a for a, b in zip(w, w[1:]))
    assert (t is Trigger.CONGESTION) == inc
    if t is Trigger.STEADY:
        assert not inc


def test_exhaustive_small_windows():
    for w in itertools.product(range(4), repeat=4):
        t = evaluate_triggers(w, 0.34)
        assert t in (None, Trigger.CONGESTION, Trigger.STEADY)
        if t is Trigger.CONGESTION:
            assert list(w) == sorted(set(w))


@given(st.lists(st.floats(0, 100), min_size=8, max_size=8), st.floats(-50, 50))
def test_congestion_invariant_under_clock_offset(w, off):
    shifted = [x + off for x in w]
    inc = all(b > a for a, b in zip(shifted, shifted[1:]))
    assert (evaluate_triggers(shifted, 0.1) is Trigger.CONGESTION) == inc


def test_window_fills_then_clears():
    fb = FeedbackState()
    out = [fb.update(float(i)) for i in range(1, 9)]
    assert out[:7] == [None] * 7 and out[7] is Trigger.CONGESTION
    assert len(fb.window) == 0
    assert fb.update(100.0) is None


def test_stale_notifications_ignored():
    fb = FeedbackState()
    for _ in range(20):
        assert fb.ingest_notification(5000, 1) is None
    assert fb.d_avg is None and fb.updates == 0


def test_piggyback_marks_duplicates():
    fb = FeedbackState()
    assert fb.piggyback() == (0, 1)
    fb.measure_delay(30.5, 10)
    assert fb.piggyback() == (20500, 0)
    assert fb.piggyback() == (20500, 1)


def test_measure_delay_uses_header_and_clamps():
    fb = FeedbackState()
    h = PacketHeader(MediaKind.HAPTIC, 1, False, 0, 100)
    assert fb.measure_delay(115.0, h) == 15.0
    assert fb.measure_delay(115.0, h, clock_offset_ms=2.0) == 17.0
    assert fb.measure_delay(90.0, h) == 0.0 and fb.clamped == 1


def test_piggyback_saturates():
    fb = FeedbackState()
    fb.measure_delay(1e9, 0)
    assert fb.piggyback()[0] == MAX_DELAY_US


@pytest.mark.parametrize("kw", [dict(alpha=0), dict(alpha=1), dict(N=1), dict(tolerance=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        FeedbackParams(**kw)
