"""Activation lifecycle of the geo network-coding function.

Four states and six events. :func:`lifecycle_step` is the pure transition
table; :class:`CodingFunction` drives it against a :class:`GeoStore` and
the optimizer.
"""
import enum
from dataclasses import dataclass, field

from .exceptions import InvalidTransition
from .optimizer import BETA0_LOW, optimize_rate

DELTA_REOPT = 0.02


class State(str, enum.Enum):
    INACTIVE = "Inactive"
    INSTANTIATING = "Instantiating"
    ACTIVE = "Active"
    TERMINATING = "Terminating"


class Event(str, enum.Enum):
    REQUEST_ACTIVATE = "RequestActivate"
    INSTANTIATION_ACK = "InstantiationAck"
    MONITOR_TICK = "MonitorTick"
    STATS_UPDATE = "StatsUpdate"
    REQUEST_TERMINATE = "RequestTerminate"
    TERMINATION_ACK = "TerminationAck"


# (state, event) -> (next state, actions)
TRANSITIONS = {
    (State.INACTIVE, Event.REQUEST_ACTIVATE): (State.INSTANTIATING, ("optimize",)),
    (State.INSTANTIATING, Event.INSTANTIATION_ACK): (State.ACTIVE, ()),
    (State.ACTIVE, Event.STATS_UPDATE): (State.ACTIVE, ("check_drift",)),
    (State.ACTIVE, Event.MONITOR_TICK): (State.ACTIVE, ("snapshot",)),
    (State.ACTIVE, Event.REQUEST_TERMINATE): (State.TERMINATING, ("teardown",)),
    (State.TERMINATING, Event.TERMINATION_ACK): (State.INACTIVE, ()),
}


def lifecycle_step(state, event, drift=0.0, delta=DELTA_REOPT):
    """Next state and emitted actions.

    :param drift: largest per-link change in erasure rate carried by a
        stats update; re-optimisation is emitted iff it exceeds ``delta``.
    :raises InvalidTransition: for undeclared pairs.
    """
    state, event = State(state), Event(event)
    try:
        nxt, actions = TRANSITIONS[(state, event)]
    except KeyError:
        raise InvalidTransition(state.value, event.value) from None
    if "check_drift" in actions:
        actions = ("reoptimize",) if drift > delta else ()
    return nxt, actions


@dataclass
class CodingFunction:
    """Single-owner driver tying the lifecycle to link statistics.

    :param nodes: node sequence of the served path.
    """

    store: object
    nodes: tuple
    k: int = 50
    m: int = 100
    q: int = 8
    rho0: float = 0.8
    beta0: float = BETA0_LOW
    delta: float = DELTA_REOPT
    state: State = State.INACTIVE
    point: object = None
    eps: tuple = None
    log: list = field(default_factory=list)

    def _optimize(self):
        # without a served path there is nothing to optimise
        if not self.nodes:
            return
        path = self.store.query_path(self.nodes)
        self.point = optimize_rate(self.k, self.m, self.q, path, self.rho0, self.beta0)
        self.eps = tuple(path)

    def handle(self, event, records=()):
        """Apply one event; ``records`` are GeoRecords carried by a stats update."""
        event = Event(event)
        drift = 0.0
        if event is Event.STATS_UPDATE and self.state is State.ACTIVE:
            for rec in records:
                self.store.upsert(rec)
        if event is Event.STATS_UPDATE and self.state is State.ACTIVE and self.nodes:
            new = tuple(self.store.query_path(self.nodes))
            drift = max(abs(a - b) for a, b in zip(new, self.eps)) if self.eps else float("inf")
        nxt, actions = lifecycle_step(self.state, event, drift, self.delta)
        if "optimize" in actions or "reoptimize" in actions:
            self._optimize()
        if "teardown" in actions:
            self.point = None
        entry = {
            "from": self.state.value,
            "event": event.value,
            "to": nxt.value,
            "actions": list(actions),
            "n": None if self.point is None else self.point.n,
        }
        if "snapshot" in actions:
            entry["eps"] = list(self.eps) if self.eps else None
        self.state = nxt
        self.log.append(entry)
        return entry
