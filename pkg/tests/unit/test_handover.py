"""Tests for the handover signaling state machine."""

import json

import pydantic
import pytest

from slice_alloc.core import errors
from slice_alloc.core import handover
from slice_alloc.core.models import handover as models


def _event(kind, actor=None):
    if actor is None:
        actor = min(models.LEGAL_ACTORS[kind], key=lambda a: a.value)
    return models.HandoverEvent(kind=kind, actor=actor)


class TestAdvance:
    """Test single transitions."""

    def test_measurement_report_from_idle(self):
        """Test the first canonical step."""
        state = handover.advance(
            handover.initial_state(), _event(models.EventKind.MEASUREMENT_REPORT)
        )
        assert state.phase is models.Phase.REPORTED
        assert state.progress == 1
        assert len(state.history) == 1

    def test_out_of_order_event(self):
        """Test that skipping a message is illegal."""
        with pytest.raises(errors.IllegalTransition) as exc_info:
            handover.advance(
                handover.initial_state(), _event(models.EventKind.HANDOVER_COMMAND)
            )
        assert "Idle" in str(exc_info.value)
        assert "HandoverCommand" in str(exc_info.value)

    def test_timeout_fails(self):
        """Test that a timeout ends a running handover."""
        state = handover.run_trace(handover.canonical_trace()[:5])
        failed = handover.advance(
            state, _event(models.EventKind.TIMEOUT, models.Actor.CORE_CLOUD)
        )
        assert failed.phase is models.Phase.FAILED
        assert failed.progress == 5

    @pytest.mark.parametrize("kind", list(models.EventKind))
    def test_terminal_phases_accept_nothing(self, kind):
        """Test that Complete and Failed reject every event."""
        complete = handover.run_trace(handover.canonical_trace())
        failed = handover.run_trace([_event(models.EventKind.TIMEOUT)])
        for state in (complete, failed):
            with pytest.raises(errors.TerminalState):
                handover.advance(state, _event(kind))

    def test_state_is_immutable(self):
        """Test that advancing returns a new state."""
        start = handover.initial_state()
        handover.advance(start, _event(models.EventKind.MEASUREMENT_REPORT))
        assert start.phase is models.Phase.IDLE
        assert start.history == ()

    def test_phase_sequence(self):
        """Test the phase after every canonical prefix."""
        phases = [
            handover.run_trace(handover.canonical_trace()[:i]).phase
            for i in range(len(handover.CANONICAL_SEQUENCE) + 1)
        ]
        assert phases == list(handover.PHASE_AFTER)
        assert phases[-1] is models.Phase.COMPLETE


class TestRunTrace:
    """Test folding whole traces."""

    def test_canonical_completes(self):
        """Test the successful procedure."""
        state = handover.run_trace(handover.canonical_trace("uRLLC"))
        assert state.phase is models.Phase.COMPLETE
        assert all(e.slice_id == "uRLLC" for e in state.history)

    def test_empty_trace(self):
        """Test that no events leave the handover idle."""
        assert handover.run_trace([]).phase is models.Phase.IDLE

    def test_swapped_events_rejected_with_index(self):
        """Test that the first illegal event is reported by position."""
        events = handover.canonical_trace()
        events[2], events[3] = events[3], events[2]
        with pytest.raises(errors.TraceRejected) as exc_info:
            handover.run_trace(events)
        assert exc_info.value.index == 2
        assert isinstance(exc_info.value.cause, errors.IllegalTransition)

    def test_event_after_completion(self):
        """Test that trailing events are rejected as terminal."""
        events = [*handover.canonical_trace(), _event(models.EventKind.TIMEOUT)]
        with pytest.raises(errors.TraceRejected) as exc_info:
            handover.run_trace(events)
        assert exc_info.value.index == 8
        assert isinstance(exc_info.value.cause, errors.TerminalState)

    def test_context_carried(self):
        """Test that the handover context is kept."""
        context = models.HandoverContext(slice_id="uRLLC", target_access="access-9")
        state = handover.run_trace(handover.canonical_trace(), context)
        assert state.context.target_access == "access-9"


class TestEvents:
    """Test event validation and serialization."""

    def test_wrong_actor(self):
        """Test that only the user reports measurements."""
        with pytest.raises(pydantic.ValidationError):
            models.HandoverEvent(
                kind=models.EventKind.MEASUREMENT_REPORT,
                actor=models.Actor.CORE_CLOUD,
            )

    @pytest.mark.parametrize("actor", list(models.Actor))
    def test_timeout_from_anyone(self, actor):
        """Test that every actor may time out."""
        assert models.HandoverEvent(kind=models.EventKind.TIMEOUT, actor=actor)

    def test_parse_and_dump(self):
        """Test JSON trace files."""
        events = handover.canonical_trace()
        text = handover.dump_trace(events)
        assert json.loads(text)[0] == {
            "kind": "MeasurementReport",
            "actor": "user",
            "slice_id": "eMBB",
        }
        assert handover.parse_trace(text) == events

    @pytest.mark.parametrize(
        "document",
        [
            "not json",
            '{"kind": "Timeout"}',
            '[{"kind": "Teleport", "actor": "user"}]',
            '[{"kind": "MeasurementReport", "actor": "core-cloud"}]',
        ],
    )
    def test_parse_invalid(self, document):
        """Test that malformed traces are configuration errors."""
        with pytest.raises(errors.ConfigError):
            handover.parse_trace(document)


class TestModelCheck:
    """Test exhaustive exploration of short traces."""

    def test_only_canonical_completes(self):
        """Test that the canonical sequence is the unique way to Complete."""
        kinds = tuple(kind for kind, _ in handover.CANONICAL_SEQUENCE)
        assert handover.completing_traces(8) == [kinds]

    def test_nothing_completes_early(self):
        """Test that no shorter trace completes."""
        assert handover.completing_traces(7) == []

    def test_reachable_states(self):
        """Test the accepted prefixes: canonical ones plus one timeout each."""
        traces = list(handover.reachable_traces(8))
        assert len(traces) == 9 + 8
        failed = [kinds for kinds, s in traces if s.phase is models.Phase.FAILED]
        assert all(kinds[-1] is models.EventKind.TIMEOUT for kinds in failed)
        assert len(failed) == 8

    def test_safety(self):
        """Test what may follow HandoverComplete and what Complete requires."""
        for kinds, state in handover.reachable_traces(9):
            if models.EventKind.HANDOVER_COMPLETE in kinds[:-1]:
                after = kinds[kinds.index(models.EventKind.HANDOVER_COMPLETE) + 1 :]
                assert after in (
                    (models.EventKind.RELEASE_SOURCE,),
                    (models.EventKind.TIMEOUT,),
                )
            if state.phase is models.Phase.COMPLETE:
                assert models.EventKind.PATH_SWITCH_ACK in kinds
                assert len(kinds) == 8
