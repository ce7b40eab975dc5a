import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sched_oracle import brute_force_max_granted, random_instance

from fr3lab.raas import (
    Assignment,
    Band,
    MissionProfile,
    SensingSchedule,
    SlotGrid,
    build_schedule,
    interferes,
    range_resolution,
    sinr_db,
    verify_schedule,
)


def grid(n_slots=10, horizon=1, bands=(Band(27e9, 500e6),), blocked=frozenset()):
    return SlotGrid(n_slots, 1e-3, bands, horizon, blocked)


def mission(node, bw=400e6, length=2, period=0, pos=(0.0, 0.0), priority=0, **kw):
    return MissionProfile(node, bw, length, period, position=pos, priority=priority, **kw)


def test_range_resolution_anchors():
    assert range_resolution(4e9) == pytest.approx(0.0375, abs=1e-4)
    assert range_resolution(3e9) == pytest.approx(0.05, abs=1e-4)
    with pytest.raises(ValueError):
        range_resolution(0.0)


def test_grid_and_mission_validation():
    with pytest.raises(ValueError):
        SlotGrid(0, 1e-3, (Band(27e9, 1e8),), 1)
    with pytest.raises(ValueError):
        SlotGrid(4, 1e-3, (Band(27e9, 1e8),), 1, frozenset({(0, 9, 0)}))
    with pytest.raises(ValueError):
        mission("a", length=0)
    with pytest.raises(ValueError):
        mission("a", length=3, period=2)


def test_sinr_model():
    g = grid()
    a, b = mission("a", pos=(0, 0)), mission("b", pos=(100, 0))
    # 1e-9 W / (1e-12 + 1e-4) W
    assert sinr_db(a, b, g) == pytest.approx(10 * np.log10(1e-9 / (1e-12 + 1e-4)))
    far = mission("c", pos=(1e9, 0), required_sinr_db=20)
    assert not interferes(far, replace(far, node_id="d", position=(0, 0)), g)
    assert interferes(a, b, g)


def test_disjoint_bands_never_interfere():
    g = grid(bands=(Band(26e9, 500e6), Band(27e9, 500e6)))
    a, b = mission("a", allowed_bands=(0,)), mission("b", allowed_bands=(1,))
    assert not interferes(a, b, g)
    assert interferes(a, b, g, band_a=0, band_b=0)


def test_close_nodes_are_time_separated():
    g = grid()
    ms = [mission("a"), mission("b", pos=(10, 0))]
    s = build_schedule(g, ms)
    assert s.granted == ["a", "b"]
    slots = {a.node_id: set(a.slots) for a in s.assignments}
    assert not slots["a"] & slots["b"]
    assert verify_schedule(g, ms, s) == []


def test_distant_nodes_share_a_cell():
    g = grid(n_slots=2)
    ms = [mission("a", pos=(0, 0)), mission("b", pos=(1e9, 0))]
    s = build_schedule(g, ms)
    assert [a.first_slot for a in s.assignments] == [0, 0]
    assert verify_schedule(g, ms, s) == []


def test_priority_wins_contended_slot():
    g = grid(n_slots=2)
    ms = [mission("low", priority=0), mission("high", priority=5)]
    s = build_schedule(g, ms)
    assert s.granted == ["high"]
    assert s.rejections[0].node_id == "low" and s.rejections[0].reason == "capacity"


def test_bandwidth_rejection():
    s = build_schedule(grid(), [mission("wide", bw=2e9)])
    assert s.rejections[0].reason == "bandwidth"


def test_interference_rejection_when_communication_blocks_the_slots():
    blocked = frozenset((0, t, 0) for t in range(2, 4))
    g = grid(n_slots=4, blocked=blocked)
    ms = [mission("a"), mission("b", pos=(5, 0))]
    s = build_schedule(g, ms)
    assert s.granted == ["a"]
    assert s.rejections[0].reason == "interference"


def test_periodic_all_or_nothing():
    # second frame fully blocked: the periodic mission cannot be served there
    blocked = frozenset((1, t, 0) for t in range(4))
    g = grid(n_slots=4, horizon=2, blocked=blocked)
    s = build_schedule(g, [mission("p", length=2, period=4)])
    assert s.assignments == ()
    assert s.rejections[0].reason == "interference"


def test_period_longer_than_horizon_rejected():
    s = build_schedule(grid(n_slots=4), [mission("p", length=1, period=8)])
    assert s.rejections[0].reason == "capacity"


def test_windows_do_not_cross_frames():
    g = grid(n_slots=3, horizon=2)
    ms = [mission("a", length=2), mission("b", length=2, pos=(1, 0))]
    s = build_schedule(g, ms)
    for a in s.assignments:
        assert a.first_slot + a.n_slots <= 3
    assert verify_schedule(g, ms, s) == []


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        build_schedule(grid(), [mission("a"), mission("a")])


def test_earliest_deadline_policy_orders_by_period():
    g = grid(n_slots=4)
    ms = [mission("slow", length=4, priority=9), mission("fast", length=2, period=2)]
    assert build_schedule(g, ms, "earliest-deadline").granted == ["fast"]
    assert build_schedule(g, ms, "greedy-priority").granted == ["slow"]


def test_utilization_and_json_roundtrip():
    g = grid(n_slots=10, horizon=2)
    s = build_schedule(g, [mission("a", length=2, period=10)])
    assert s.utilization == {0: 0.2}
    payload = json.loads(s.to_json())
    assert payload["assignments"][1]["frame"] == 1
    assert payload["rejections"] == []


def test_verifier_catches_planted_faults():
    g = grid(n_slots=4, horizon=2, blocked=frozenset({(0, 3, 0)}))
    ms = [mission("a", length=2, period=4), mission("b", pos=(1, 0)), mission("c")]
    bad = SensingSchedule(
        (
            Assignment("a", 0, 0, 2, 0, 0),
            Assignment("b", 0, 1, 2, 0, 0),  # overlaps a
            Assignment("c", 0, 2, 2, 0, 0),  # hits the blocked slot, overlaps b
            Assignment("ghost", 0, 0, 1, 0, 0),
        ),
        (),
    )
    kinds = {c.kind for c in verify_schedule(g, ms, bad)}
    assert {"overlap", "blocked slot", "missed period", "unknown node"} <= kinds


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_schedules_verify_clean(seed):
    g, ms = random_instance(np.random.default_rng(seed))
    s = build_schedule(g, ms)
    assert verify_schedule(g, ms, s) == []
    assert sorted(s.granted + [r.node_id for r in s.rejections]) == sorted(m.node_id for m in ms)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_greedy_within_one_of_optimum_on_small_instances(seed):
    g, ms = random_instance(np.random.default_rng(seed), max_missions=4, max_slots=8)
    best = brute_force_max_granted(g, ms)
    got = len(build_schedule(g, ms).granted)
    assert got <= best
    assert best - got <= 1
