"""Exception hierarchy shared by all geonc modules."""


class GeoNCError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(GeoNCError, ValueError):
    """Matrix or vector dimensions do not line up."""


class DomainError(GeoNCError, ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(GeoNCError, ValueError):
    """A scenario or command configuration is inconsistent."""


class ConsistencyError(GeoNCError, ValueError):
    """Two inputs that must describe the same realisation disagree."""


class DecodeIncomplete(GeoNCError):
    """Not enough innovative packets arrived to recover the generation."""

    def __init__(self, rank, k):
        super().__init__(f"decoder reached rank {rank} of {k}")
        self.rank = rank
        self.k = k


class InfeasibleBudget(GeoNCError):
    """No coded operating point satisfies the complexity budget."""


class MissingLink(GeoNCError, KeyError):
    """The geo store holds no statistic for a requested link."""

    def __init__(self, node, peer):
        super().__init__(f"no link statistic for ({node!r}, {peer!r})")
        self.node = node
        self.peer = peer

    def __str__(self):
        return self.args[0]


class InvalidTransition(GeoNCError):
    """A lifecycle event is not accepted in the current state."""

    def __init__(self, state, event):
        super().__init__(f"event {event} not allowed in state {state}")
        self.state = state
        self.event = event
