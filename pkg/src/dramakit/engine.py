"""The turn loop: one session of one story.

A step asks the backend for the next script line, appends it, and hands the
drama manager one evaluation pass per dialogue line. In interactive mode a
generated line for the player's character is discarded and the session
waits for real input instead. Sessions are single-writer: callers must
serialize step/submit on one session (the service layer does).
"""

from __future__ import annotations

import copy
import uuid
from dataclasses import dataclass, field
from enum import Enum

from . import manager
from .backends import (
    SIMULATION_PARAMS,
    BackendError,
    CompletionBackend,
    backend_from_spec,
    backend_to_spec,
)
from .manager import FallbackClock, FiringEvent, TriggerRuntime
from .prompts import ResponseParseError, build_simulation_prompt, parse_line_response
from .story import Dialogue, ScriptLine, StoryDefinition, line_from_dict, line_to_dict, render_script

DEFAULT_LINE_CAP = 200
RETRY_LIMIT = 3  # retries after the first failed attempt


class SessionState(Enum):
    RUNNING = "running"
    AWAITING_PLAYER = "awaiting_player"
    ENDED = "ended"
    ERRORED = "errored"


class SessionMode(Enum):
    INTERACTIVE = "interactive"
    AUTONOMOUS = "autonomous"


class SessionStateError(RuntimeError):
    """An operation was called in a state that does not allow it."""

    def __init__(self, expected: SessionState, actual: SessionState):
        self.expected = expected
        self.actual = actual
        super().__init__(f"session is {actual.value}, expected {expected.value}")


class PlayerInputError(ValueError):
    pass


class ForeignSnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class EngineEvent:
    kind: str
    turn: int
    detail: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, "turn": self.turn, "detail": self.detail}


@dataclass(frozen=True)
class StepOutcome:
    appended: ScriptLine | None
    firing: FiringEvent | None
    new_state: SessionState
    awaiting_player: bool = False


@dataclass(frozen=True)
class Snapshot:
    """A restorable copy of everything mutable in a session, keyed by how
    many lines the script had when it was taken."""

    session_id: str
    line_count: int
    state: dict


@dataclass
class Session:
    id: str
    definition: StoryDefinition
    backend: CompletionBackend
    mode: SessionMode = SessionMode.AUTONOMOUS
    lines: list[ScriptLine] = field(default_factory=list)
    trigger_runtimes: list[TriggerRuntime] = field(default_factory=list)
    fallback_clock: FallbackClock = field(default_factory=FallbackClock)
    turn: int = 0
    state: SessionState = SessionState.RUNNING
    error_reason: str | None = None
    event_log: list[EngineEvent] = field(default_factory=list)
    firing_log: list[FiringEvent] = field(default_factory=list)
    line_cap: int = DEFAULT_LINE_CAP
    seed: int | None = None

    def __post_init__(self):
        if not self.trigger_runtimes:
            self.trigger_runtimes = [
                TriggerRuntime(trigger_id=t.id) for t in self.definition.triggers
            ]
        self._runtimes_by_id = {rt.trigger_id: rt for rt in self.trigger_runtimes}

    def runtime_for(self, trigger_id: str) -> TriggerRuntime:
        return self._runtimes_by_id[trigger_id]

    def cast_names(self) -> list[str]:
        return self.definition.character_names()

    def log_event(self, kind: str, detail: dict | None = None) -> None:
        self.event_log.append(EngineEvent(kind=kind, turn=self.turn, detail=detail or {}))

    def mark_ended(self) -> None:
        self.state = SessionState.ENDED

    def render_text(self) -> str:
        return render_script(self.definition.world_setting, self.lines)

    # -- state (de)serialization: shared by snapshots and persistence --------

    def to_state(self) -> dict:
        """JSON-pure copy of all mutable state, including the backend's
        remaining scripted queue so restores replay deterministically."""
        return {
            "lines": [line_to_dict(line) for line in self.lines],
            "trigger_runtimes": [rt.to_dict() for rt in self.trigger_runtimes],
            "fallback_clock": self.fallback_clock.lines_since_last_fire,
            "turn": self.turn,
            "state": self.state.value,
            "error_reason": self.error_reason,
            "event_log": [event.to_dict() for event in self.event_log],
            "firing_log": [event.to_dict() for event in self.firing_log],
            "backend": backend_to_spec(self.backend),
        }

    def restore_state(self, state: dict) -> None:
        self.lines = [line_from_dict(d) for d in state["lines"]]
        self.trigger_runtimes = [TriggerRuntime.from_dict(d) for d in state["trigger_runtimes"]]
        self._runtimes_by_id = {rt.trigger_id: rt for rt in self.trigger_runtimes}
        self.fallback_clock = FallbackClock(lines_since_last_fire=state["fallback_clock"])
        self.turn = state["turn"]
        self.state = SessionState(state["state"])
        self.error_reason = state.get("error_reason")
        self.event_log = [
            EngineEvent(kind=d["kind"], turn=d["turn"], detail=copy.deepcopy(d["detail"]))
            for d in state["event_log"]
        ]
        self.firing_log = [FiringEvent.from_dict(d) for d in state["firing_log"]]
        self.backend = backend_from_spec(state["backend"])


def create_session(
    definition: StoryDefinition,
    backend: CompletionBackend,
    *,
    mode: SessionMode = SessionMode.AUTONOMOUS,
    session_id: str | None = None,
    line_cap: int = DEFAULT_LINE_CAP,
    seed: int | None = None,
) -> Session:
    return Session(
        id=session_id or uuid.uuid4().hex[:12],
        definition=definition,
        backend=backend,
        mode=mode,
        line_cap=line_cap,
        seed=seed,
    )


def session_to_dict(session: Session) -> dict:
    from .story import story_to_dict

    return {
        "id": session.id,
        "mode": session.mode.value,
        "line_cap": session.line_cap,
        "seed": session.seed,
        "story": story_to_dict(session.definition),
        "runtime": session.to_state(),
    }


def session_from_dict(data: dict) -> Session:
    from .story import parse_story_definition

    definition = parse_story_definition(data["story"])
    session = Session(
        id=data["id"],
        definition=definition,
        backend=backend_from_spec(data["runtime"]["backend"]),
        mode=SessionMode(data["mode"]),
        line_cap=data.get("line_cap", DEFAULT_LINE_CAP),
        seed=data.get("seed"),
    )
    session.restore_state(data["runtime"])
    return session


def _require_state(session: Session, expected: SessionState) -> None:
    if session.state is not expected:
        raise SessionStateError(expected, session.state)


def _append_and_evaluate(session: Session, line: ScriptLine) -> StepOutcome:
    """Append one line; for dialogue, advance the turn and run exactly one
    drama-manager pass. Backend failure during trigger checks leaves the
    appended line in place and errors the session."""
    session.lines.append(line)
    firing = None
    if isinstance(line, Dialogue):
        session.turn += 1
        session.fallback_clock.lines_since_last_fire += 1
        try:
            firing = manager.evaluate(session)
        except BackendError as exc:
            session.log_event("backend_error", {"stage": "trigger_check", "error": str(exc)})
            session.state = SessionState.ERRORED
            session.error_reason = f"trigger check failed: {exc}"
    return StepOutcome(
        appended=line,
        firing=firing,
        new_state=session.state,
        awaiting_player=False,
    )


def step(session: Session) -> StepOutcome:
    """Generate and append the next script line.

    In interactive mode a generated line for the player character is
    discarded, nothing is appended, and the session awaits player input.
    Parse failures and backend errors are retried up to RETRY_LIMIT times
    with the identical prompt before the session errors out.
    """
    _require_state(session, SessionState.RUNNING)
    if len(session.lines) >= session.line_cap:
        session.state = SessionState.ERRORED
        session.error_reason = "length cap"
        session.log_event("length_cap", {"line_cap": session.line_cap})
        return StepOutcome(None, None, session.state, False)

    prompt = build_simulation_prompt(session.definition, session.lines)
    line = None
    last_error: Exception | None = None
    for attempt in range(RETRY_LIMIT + 1):
        try:
            raw = session.backend.complete(prompt.text, SIMULATION_PARAMS)
        except BackendError as exc:
            last_error = exc
            session.log_event("backend_error", {"stage": "simulation", "attempt": attempt, "error": str(exc)})
            continue
        try:
            line = parse_line_response(raw, session.cast_names())
            break
        except ResponseParseError as exc:
            last_error = exc
            session.log_event("parse_error", {"attempt": attempt, "raw": raw, "error": str(exc)})
    if line is None:
        session.state = SessionState.ERRORED
        session.error_reason = (
            f"simulation failed after {RETRY_LIMIT + 1} attempts: {last_error}"
        )
        return StepOutcome(None, None, session.state, False)

    if (
        session.mode is SessionMode.INTERACTIVE
        and session.definition.player_character is not None
        and isinstance(line, Dialogue)
        and line.speaker == session.definition.player_character
    ):
        session.state = SessionState.AWAITING_PLAYER
        session.log_event("player_line_discarded", {"text": line.text})
        return StepOutcome(None, None, session.state, awaiting_player=True)

    return _append_and_evaluate(session, line)


def submit_player_line(session: Session, text: str) -> StepOutcome:
    """Append the player's own dialogue line and resume the turn loop."""
    _require_state(session, SessionState.AWAITING_PLAYER)
    cleaned = text.strip()
    if not cleaned:
        raise PlayerInputError("player line must be non-empty")
    if "\n" in cleaned or "\r" in cleaned:
        raise PlayerInputError("player line may not contain newlines")
    session.state = SessionState.RUNNING
    line = Dialogue(speaker=session.definition.player_character, text=cleaned)
    return _append_and_evaluate(session, line)


def run_autonomous(session: Session, max_turns: int) -> Session:
    """Step until the session ends, errors, or ``max_turns`` more dialogue
    lines have been appended (relative to the call, so repeated calls keep
    extending the run)."""
    if session.mode is not SessionMode.AUTONOMOUS:
        raise ValueError("run_autonomous requires an autonomous-mode session")
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    target = session.turn + max_turns
    while session.state is SessionState.RUNNING and session.turn < target:
        step(session)
    return session


def snapshot(session: Session) -> Snapshot:
    return Snapshot(
        session_id=session.id,
        line_count=len(session.lines),
        state=session.to_state(),
    )


def reset_to(session: Session, snap: Snapshot) -> Session:
    """Restore in place; afterwards the session behaves exactly as it did at
    the snapshot point (scripted backends rewind with it)."""
    if snap.session_id != session.id:
        raise ForeignSnapshotError(
            f"snapshot belongs to session {snap.session_id!r}, not {session.id!r}"
        )
    session.restore_state(copy.deepcopy(snap.state))
    return session
