import pytest

from telehaptic.dpm import DpmController, DpmParams, RateModel, build_packet, rate_kbps
from telehaptic.feedback import Trigger
from telehaptic.mux import BACKWARD_MEDIA, FORWARD_MEDIA, Multiplexer
from telehaptic.wire import MediaKind, decode_header

BWD = RateModel.from_media(BACKWARD_MEDIA)
FWD = RateModel.from_media(FORWARD_MEDIA)
C, S = Trigger.CONGESTION, Trigger.STEADY


def test_rate_model():
    assert (BWD.D, BWD.OHR) == (560.0, 536.0)
    assert (FWD.D, FWD.OHR) == (192.0, 496.0)
    assert [round(BWD.rate(k), 2) for k in (1, 2, 3, 4)] == [1096.0, 828.0, 738.67, 694.0]
    assert [round(FWD.rate(k), 2) for k in (1, 2, 3, 4)] == [688.0, 440.0, 357.33, 316.0]
    with pytest.raises(ValueError):
        rate_kbps(BWD, 5, 4)
    assert BWD.packet_bytes_no_merge == 137.0


def test_simd_sequence():
    c = DpmController()
    ks = [c.k]
    for i, t in enumerate([C, S, S, S, S, C, S]):
        c.on_trigger(t, float(i))
        ks.append(c.k)
    assert ks == [1, 4, 3, 2, 1, 1, 4, 3]
    assert c.last_change_ms == 6.0


def test_holdup_ignores_steady():
    c = DpmController(DpmParams(hold_up_ms=500))
    c.set_k(2, 0)
    c.on_trigger(C, 10)          # k_hat = 2
    c.on_trigger(S, 20)
    assert c.k == 3              # k_hat + 1, hold starts
    c.on_trigger(S, 100)
    assert c.k == 3 and c.ignored_steady == 1
    c.on_trigger(S, 521)
    assert c.k == 2


def test_holdup_disabled_by_default():
    c = DpmController()
    c.set_k(2, 0)
    c.on_trigger(C, 10)
    c.on_trigger(S, 20)
    c.on_trigger(S, 21)
    assert c.k == 2


def test_packets_carry_k_fragments():
    m = Multiplexer(BACKWARD_MEDIA)
    c = DpmController(piggyback=lambda: (1234, 0))
    c.set_k(3, 0)
    pkts = [p for t in range(9) if (p := c.submit_fragment(m.next_fragment(t), t))]
    assert len(pkts) == 3
    assert all(p.k == 3 for p in pkts)
    h = decode_header(pkts[1].header_bytes)
    assert h.haptic_timestamp == 3 and h.k == 3 and h.notification_delay == 1234
    assert pkts[0].wire_size == 54 + 8 + 3 * 12


def test_lowering_k_flushes_buffer():
    m = Multiplexer(BACKWARD_MEDIA)
    c = DpmController()
    c.set_k(4, 0)
    for t in range(2):
        assert c.submit_fragment(m.next_fragment(t), t) is None
    p = c.on_trigger(S, 2)          # k 4 -> 3, still only 2 pending
    assert p is None
    c.set_k(1, 3)
    assert c.pending == []


def test_av_subheader():
    m = Multiplexer(BACKWARD_MEDIA)
    m.enqueue_frame("audio", 160, 0)
    p = build_packet([m.next_fragment(0), m.next_fragment(1)])
    assert p.header.media is MediaKind.HAPTIC_AUDIO
    assert p.header.av.payload_size == 116 and p.header.size == 13
    assert p.wire_size == 54 + 13 + 140


def test_build_packet_errors():
    with pytest.raises(ValueError):
        build_packet([])


def test_params_validation():
    with pytest.raises(ValueError):
        DpmParams(k_max=8)
    with pytest.raises(ValueError):
        DpmParams(hold_up_ms=-1)
    with pytest.raises(ValueError):
        DpmController().set_k(5, 0)
