"""Domain exceptions raised by slice-alloc.

Every class name here is part of the command-line contract: the CLI prints
``type(error).__name__`` on standard error and exits with status 1.
"""


class SliceAllocError(Exception):
    """Base class for all domain errors."""


class ConfigError(SliceAllocError, ValueError):
    """A configuration document could not be read or validated."""


class PlacementInfeasible(SliceAllocError):  # noqa: N818
    """Rejection sampling ran out of attempts while placing small cells."""

    def __init__(self, cell_index: int, attempts: int):
        self.cell_index = cell_index
        self.attempts = attempts
        super().__init__(
            f"could not place small cell {cell_index} after {attempts} attempts"
        )


class DimensionMismatch(SliceAllocError):  # noqa: N818
    """Topology, configuration and gain tensor disagree on their sizes."""


class InfeasibleMinRate(SliceAllocError):  # noqa: N818
    """A uRLLC minimum rate cannot be met even at full power everywhere."""

    def __init__(self, user_id: int, best_rate: float, min_rate: float):
        self.user_id = user_id
        self.best_rate = best_rate
        self.min_rate = min_rate
        super().__init__(
            f"user {user_id} reaches at most {best_rate:.1f} bps "
            f"but requires {min_rate:.1f} bps"
        )


class TooLarge(SliceAllocError):  # noqa: N818
    """The brute-force enumeration exceeds its evaluation budget."""


class IllegalTransition(SliceAllocError):  # noqa: N818
    """A handover event is not legal in the current phase."""

    def __init__(self, phase: str, kind: str):
        self.phase = phase
        self.kind = kind
        super().__init__(f"event {kind} is not legal in phase {phase}")


class TerminalState(SliceAllocError):  # noqa: N818
    """A handover state machine already reached Complete or Failed."""

    def __init__(self, phase: str):
        self.phase = phase
        super().__init__(f"handover already finished in phase {phase}")


class TraceRejected(SliceAllocError):  # noqa: N818
    """A handover trace failed at a specific event index."""

    def __init__(self, index: int, cause: SliceAllocError):
        self.index = index
        self.cause = cause
        super().__init__(f"event {index}: {type(cause).__name__}: {cause}")


class ReportError(SliceAllocError):
    """An output file could not be written."""

    def __init__(self, path: object, reason: str):
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")
