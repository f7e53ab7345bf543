"""Exception hierarchy shared by all modules."""


class TransversalLabError(ValueError):
    """Base class for every error raised by this package."""


class DimensionMismatch(TransversalLabError):
    pass


class InvalidFlat(TransversalLabError):
    pass


class DirectionUndefined(TransversalLabError):
    pass


class DegenerateInput(TransversalLabError):
    pass


class PreconditionViolated(TransversalLabError):
    pass


class NoInnerTangents(TransversalLabError):
    pass


class TupleHasAxisParallelTransversal(TransversalLabError):
    pass


class Unpierceable(TransversalLabError):
    """Some member cannot be pierced by any flat at the requested tolerance."""

    def __init__(self, message, members=()):
        super().__init__(message)
        self.members = [int(m) for m in members]


class SequenceExhausted(TransversalLabError):
    """The greedy construction ran out of candidates before the target length."""

    def __init__(self, message, accepted=()):
        super().__init__(message)
        self.accepted = list(accepted)


class SamplerExhausted(TransversalLabError):
    def __init__(self, message, found=()):
        super().__init__(message)
        self.found = list(found)


class CounterexampleFound(TransversalLabError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(TransversalLabError):
    """A document does not match the expected layout."""
