import itertools

import pytest
from hypothesis import given, strategies as st

from geonc.exceptions import InvalidTransition
from geonc.geo import GeoRecord, GeoStore
from geonc.lifecycle import DELTA_REOPT, TRANSITIONS, CodingFunction, Event, State, lifecycle_step

EXPECTED = {
    ("Inactive", "RequestActivate"): "Instantiating",
    ("Instantiating", "InstantiationAck"): "Active",
    ("Active", "StatsUpdate"): "Active",
    ("Active", "MonitorTick"): "Active",
    ("Active", "RequestTerminate"): "Terminating",
    ("Terminating", "TerminationAck"): "Inactive",
}


def test_exhaustive_table():
    for s, e in itertools.product(State, Event):
        key = (s.value, e.value)
        if key in EXPECTED:
            assert lifecycle_step(s, e)[0].value == EXPECTED[key]
        else:
            with pytest.raises(InvalidTransition):
                lifecycle_step(s, e)
    assert len(TRANSITIONS) == 6


def test_every_state_reaches_inactive():
    for start in State:
        seen, frontier = {start}, [start]
        while frontier:
            s = frontier.pop()
            for (a, _), (b, _) in TRANSITIONS.items():
                if a == s and b not in seen:
                    seen.add(b)
                    frontier.append(b)
        assert State.INACTIVE in seen


@given(st.floats(0, 0.1))
def test_reoptimise_iff_drift_exceeds_threshold(d):
    _, actions = lifecycle_step(State.ACTIVE, Event.STATS_UPDATE, drift=d)
    assert ("reoptimize" in actions) == (d > DELTA_REOPT)


def _store():
    s = GeoStore()
    s.upsert(GeoRecord("A", "B", 0, 0, 0.1, 5, 1))
    s.upsert(GeoRecord("B", "C", 0, 0, 0.1, 5, 1))
    return s


def test_full_cycle_with_reoptimisation():
    fn = CodingFunction(_store(), ("A", "B", "C"))
    fn.handle("RequestActivate")
    assert fn.point is not None and fn.eps == (0.1, 0.1)
    fn.handle("InstantiationAck")
    small = fn.handle("StatsUpdate", [GeoRecord("A", "B", 0, 0, 0.15, 5, 2)])
    assert small["actions"] == []  # 0.1 -> 0.11
    big = fn.handle("StatsUpdate", [GeoRecord("A", "B", 0, 0, 0.3, 5, 3)])
    assert big["actions"] == ["reoptimize"]
    fn.handle("MonitorTick")
    fn.handle("RequestTerminate")
    fn.handle("TerminationAck")
    assert fn.state is State.INACTIVE and len(fn.log) == 7


def test_invalid_event_keeps_state():
    fn = CodingFunction(GeoStore(), ())
    with pytest.raises(InvalidTransition):
        fn.handle("MonitorTick")
    assert fn.state is State.INACTIVE and fn.log == []
