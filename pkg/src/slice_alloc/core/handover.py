"""Deterministic state machine for slice-aware handover signaling.

The procedure is reconstructed as eight messages: the user reports its
measurements, the SDN controller decides, the source access unit commands
the handover, the user synchronizes with the target, the target edge cloud
asks the core cloud to switch the data path, the core cloud acknowledges,
the user confirms and the target access unit releases the source. A
Timeout from any actor fails a handover that is still running.
"""

import typing

from loguru import logger
import pydantic

from slice_alloc.core import errors
from slice_alloc.core.models import handover as models


CANONICAL_SEQUENCE: tuple[tuple[models.EventKind, models.Actor], ...] = (
    (models.EventKind.MEASUREMENT_REPORT, models.Actor.USER),
    (models.EventKind.HANDOVER_DECISION, models.Actor.SDN_CONTROLLER),
    (models.EventKind.HANDOVER_COMMAND, models.Actor.SOURCE_ACCESS),
    (models.EventKind.SYNC_TO_TARGET, models.Actor.USER),
    (models.EventKind.PATH_SWITCH_REQUEST, models.Actor.TARGET_EDGE),
    (models.EventKind.PATH_SWITCH_ACK, models.Actor.CORE_CLOUD),
    (models.EventKind.HANDOVER_COMPLETE, models.Actor.USER),
    (models.EventKind.RELEASE_SOURCE, models.Actor.TARGET_ACCESS),
)

# Phase once the first i canonical events have been consumed.
PHASE_AFTER: tuple[models.Phase, ...] = (
    models.Phase.IDLE,
    models.Phase.REPORTED,
    models.Phase.DECIDED,
    models.Phase.DECIDED,
    models.Phase.EXECUTING,
    models.Phase.PATH_SWITCHING,
    models.Phase.PATH_SWITCHING,
    models.Phase.PATH_SWITCHING,
    models.Phase.COMPLETE,
)

_TRACE_ADAPTER = pydantic.TypeAdapter(list[models.HandoverEvent])


def initial_state(
    context: models.HandoverContext | None = None,
) -> models.HandoverState:
    """Idle state with an empty history."""
    return models.HandoverState(context=context or models.HandoverContext())


def canonical_trace(slice_id: str = "eMBB") -> list[models.HandoverEvent]:
    """The complete successful message sequence."""
    return [
        models.HandoverEvent(kind=kind, actor=actor, slice_id=slice_id)
        for kind, actor in CANONICAL_SEQUENCE
    ]


def advance(
    state: models.HandoverState, event: models.HandoverEvent
) -> models.HandoverState:
    """Apply one event.

    Raises:
        TerminalState: If the handover already completed or failed.
        IllegalTransition: If ``event`` is not the next expected message.
    """
    if state.phase.terminal:
        raise errors.TerminalState(state.phase.value)

    history = (*state.history, event)
    if event.kind is models.EventKind.TIMEOUT:
        return state.model_copy(
            update={"phase": models.Phase.FAILED, "history": history}
        )

    expected, _ = CANONICAL_SEQUENCE[state.progress]
    if event.kind is not expected:
        raise errors.IllegalTransition(state.phase.value, event.kind.value)

    progress = state.progress + 1
    return state.model_copy(
        update={
            "phase": PHASE_AFTER[progress],
            "progress": progress,
            "history": history,
        }
    )


def run_trace(
    events: typing.Iterable[models.HandoverEvent],
    context: models.HandoverContext | None = None,
) -> models.HandoverState:
    """Fold :func:`advance` over ``events`` starting from Idle.

    Raises:
        TraceRejected: Wrapping the first error with its event index.
    """
    state = initial_state(context)
    for index, event in enumerate(events):
        try:
            state = advance(state, event)
        except (errors.IllegalTransition, errors.TerminalState) as e:
            logger.debug(f"Trace rejected at event {index}: {e}")
            raise errors.TraceRejected(index, e) from e
    return state


def parse_trace(document: str) -> list[models.HandoverEvent]:
    """Parse a JSON array of events.

    Raises:
        ConfigError: If the document is not a valid event list.
    """
    try:
        return _TRACE_ADAPTER.validate_json(document)
    except pydantic.ValidationError as e:
        raise errors.ConfigError(f"Invalid handover trace: {e}") from e


def dump_trace(events: list[models.HandoverEvent]) -> str:
    """Serialize events as a JSON array."""
    return _TRACE_ADAPTER.dump_json(events, indent=2).decode()


def _representative(kind: models.EventKind) -> models.HandoverEvent:
    actor = min(models.LEGAL_ACTORS[kind], key=lambda a: a.value)
    return models.HandoverEvent(kind=kind, actor=actor)


def reachable_traces(
    max_length: int,
) -> typing.Iterator[tuple[tuple[models.EventKind, ...], models.HandoverState]]:
    """Every event-kind sequence up to ``max_length`` that raises no error.

    An error ends a trace for good, so pruning at the first error visits
    every accepted prefix of all ``9**max_length`` sequences.
    """
    events = [_representative(kind) for kind in models.EventKind]
    stack: list[tuple[tuple[models.EventKind, ...], models.HandoverState]] = [
        ((), initial_state())
    ]
    while stack:
        kinds, state = stack.pop()
        yield kinds, state
        if len(kinds) == max_length:
            continue
        for event in reversed(events):
            try:
                successor = advance(state, event)
            except (errors.IllegalTransition, errors.TerminalState):
                continue
            stack.append(((*kinds, event.kind), successor))


def completing_traces(max_length: int = 8) -> list[tuple[models.EventKind, ...]]:
    """Event-kind sequences up to ``max_length`` that end in Complete."""
    return [
        kinds
        for kinds, state in reachable_traces(max_length)
        if state.phase is models.Phase.COMPLETE
    ]
