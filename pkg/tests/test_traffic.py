import pytest
from hypothesis import given, strategies as st

from vrcell.traffic import (
    FlowConfig,
    TrafficKind,
    frame_bitplane_count,
    frame_count,
    frame_schedule,
    generate,
)


def test_planes_per_frame():
    assert frame_bitplane_count(FlowConfig()) == 4056
    assert frame_bitplane_count(FlowConfig(bit_rate_bps=1578, refresh_hz=1)) == 1
    cfg = FlowConfig(bit_rate_bps=1579, refresh_hz=1)
    assert frame_bitplane_count(cfg) == 2
    assert generate(cfg, 1.0)[-1].size_bits == 1


def test_one_second_of_vr():
    planes = generate(FlowConfig(), 1.0)
    assert frame_count(FlowConfig(), 1.0) == 120
    assert len(planes) == 120 * 4056
    assert planes[0].deadline == pytest.approx(0.007)
    assert all(p.avail_time == p.gen_time for p in planes[::4056])


def test_traditional_video_prefetch():
    cfg = FlowConfig(kind=TrafficKind.TraditionalVideo, refresh_hz=120, prefetch_ms=100)
    sched = frame_schedule(cfg, 1.0)
    k = 60  # gen_time 0.5 s
    assert sched.gen_time[k] == pytest.approx(0.5)
    assert sched.avail_time[k] == pytest.approx(0.4)
    assert sched.avail_time[0] == 0.0
    assert FlowConfig.traditional().prefetch_s == pytest.approx(0.1)


def test_short_duration_gives_frame_zero():
    planes = generate(FlowConfig(), 0.001)
    assert {p.frame_index for p in planes} == {0}


def test_ordering():
    planes = generate(FlowConfig(bit_rate_bps=120 * 5000), 0.1, flow_id=3)
    keys = [(p.gen_time, p.plane_index) for p in planes]
    assert keys == sorted(keys)
    assert {p.flow_id for p in planes} == {3}


def test_drop_defaults_and_validation():
    assert FlowConfig().drops
    assert FlowConfig.traditional().drops
    assert not FlowConfig(kind=TrafficKind.TraditionalVideo, drop_on_expiry=False).drops
    with pytest.raises(ValueError):
        FlowConfig(prefetch_ms=10)
    with pytest.raises(ValueError):
        FlowConfig(deadline_ms=0)
    with pytest.raises(ValueError):
        frame_count(FlowConfig(), 0)


@given(st.integers(100, 10**7), st.sampled_from([30.0, 60.0, 90.0, 120.0]), st.integers(50, 5000))
def test_frame_bits_are_split_exactly(rate, refresh, plane_bits):
    cfg = FlowConfig(bit_rate_bps=float(rate) * refresh, refresh_hz=refresh, bitplane_bits=plane_bits)
    planes = generate(cfg, 1.5 / refresh)
    frame0 = [p for p in planes if p.frame_index == 0]
    assert sum(p.size_bits for p in frame0) == cfg.frame_bits
    assert all(0 < p.size_bits <= plane_bits for p in frame0)
    assert len(frame0) == frame_bitplane_count(cfg)
