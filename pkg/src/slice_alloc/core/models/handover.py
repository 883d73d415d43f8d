"""Handover signaling events and state."""

import enum

import pydantic


class EventKind(str, enum.Enum):
    """Signaling messages of the slice-aware handover procedure."""

    MEASUREMENT_REPORT = "MeasurementReport"
    HANDOVER_DECISION = "HandoverDecision"
    HANDOVER_COMMAND = "HandoverCommand"
    SYNC_TO_TARGET = "SyncToTarget"
    PATH_SWITCH_REQUEST = "PathSwitchRequest"
    PATH_SWITCH_ACK = "PathSwitchAck"
    HANDOVER_COMPLETE = "HandoverComplete"
    RELEASE_SOURCE = "ReleaseSource"
    TIMEOUT = "Timeout"


class Actor(str, enum.Enum):
    """Network entities that emit handover messages."""

    USER = "user"
    SOURCE_ACCESS = "source-access"
    TARGET_ACCESS = "target-access"
    SOURCE_EDGE = "source-edge"
    TARGET_EDGE = "target-edge"
    CORE_CLOUD = "core-cloud"
    SDN_CONTROLLER = "sdn-controller"


class Phase(str, enum.Enum):
    """Handover phases; Complete and Failed are terminal."""

    IDLE = "Idle"
    REPORTED = "Reported"
    DECIDED = "Decided"
    EXECUTING = "Executing"
    PATH_SWITCHING = "PathSwitching"
    COMPLETE = "Complete"
    FAILED = "Failed"

    @property
    def terminal(self) -> bool:
        """Whether no further event is accepted."""
        return self in (Phase.COMPLETE, Phase.FAILED)


LEGAL_ACTORS: dict[EventKind, frozenset[Actor]] = {
    EventKind.MEASUREMENT_REPORT: frozenset({Actor.USER}),
    EventKind.HANDOVER_DECISION: frozenset({Actor.SDN_CONTROLLER}),
    EventKind.HANDOVER_COMMAND: frozenset({Actor.SOURCE_ACCESS}),
    EventKind.SYNC_TO_TARGET: frozenset({Actor.USER}),
    EventKind.PATH_SWITCH_REQUEST: frozenset({Actor.TARGET_EDGE}),
    EventKind.PATH_SWITCH_ACK: frozenset({Actor.CORE_CLOUD}),
    EventKind.HANDOVER_COMPLETE: frozenset({Actor.USER}),
    EventKind.RELEASE_SOURCE: frozenset({Actor.TARGET_ACCESS}),
    EventKind.TIMEOUT: frozenset(Actor),
}


class HandoverEvent(pydantic.BaseModel):
    """One signaling message."""

    model_config = pydantic.ConfigDict(frozen=True)

    kind: EventKind
    actor: Actor
    slice_id: str = "eMBB"

    @pydantic.model_validator(mode="after")
    def _check_actor(self) -> "HandoverEvent":
        if self.actor not in LEGAL_ACTORS[self.kind]:
            raise ValueError(
                f"{self.kind.value} cannot be sent by {self.actor.value}"
            )
        return self


class HandoverContext(pydantic.BaseModel):
    """Identity of the slice and of the source and target network units."""

    model_config = pydantic.ConfigDict(frozen=True)

    slice_id: str = "eMBB"
    source_access: str = "access-1"
    source_edge: str = "edge-1"
    target_access: str = "access-2"
    target_edge: str = "edge-2"


class HandoverState(pydantic.BaseModel):
    """State of one (user, slice) handover instance."""

    model_config = pydantic.ConfigDict(frozen=True)

    phase: Phase = Phase.IDLE
    progress: int = pydantic.Field(0, ge=0, description="canonical events consumed")
    context: HandoverContext = pydantic.Field(default_factory=HandoverContext)
    history: tuple[HandoverEvent, ...] = ()
