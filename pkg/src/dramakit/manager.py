"""The drama manager: decides which trigger (if any) fires after a message.

Evaluation runs once per appended dialogue line. Triggers are visited in
authored order (position = priority); cheap gates are checked first and
cost no model calls, then the condition of each surviving trigger is
classified YES/NO against the script so far. The first YES fires and
evaluation stops, so at most one trigger fires per line.

Cheap gates, in order of intent:
  - the trigger must still be active (actions left, or repeatable)
  - ordering constraints: required triggers fired / excluded ones not
  - cooldown: strictly more than ``cooldown_turns`` turns since last firing
  - fallback clock: at least ``fallback_k`` dialogue lines since ANY firing
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .backends import TRIGGER_CHECK_PARAMS
from .prompts import AmbiguousYesNo, build_trigger_check_prompt, parse_yes_no
from .story import StageAction, Trigger, TriggerType

if TYPE_CHECKING:
    from .engine import Session


@dataclass
class TriggerRuntime:
    """Per-session mutable firing state for one trigger."""

    trigger_id: str
    next_action_index: int = 0
    active: bool = True
    fire_count: int = 0
    last_fired_turn: int | None = None

    def to_dict(self) -> dict:
        return {
            "trigger_id": self.trigger_id,
            "next_action_index": self.next_action_index,
            "active": self.active,
            "fire_count": self.fire_count,
            "last_fired_turn": self.last_fired_turn,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TriggerRuntime":
        return cls(
            trigger_id=data["trigger_id"],
            next_action_index=data["next_action_index"],
            active=data["active"],
            fire_count=data["fire_count"],
            last_fired_turn=data.get("last_fired_turn"),
        )


@dataclass
class FallbackClock:
    """Counts consecutive dialogue lines since the most recent firing of any
    trigger; reset to zero on every firing."""

    lines_since_last_fire: int = 0


@dataclass(frozen=True)
class FiringEvent:
    turn: int
    trigger_id: str
    action_index: int
    injected: StageAction
    ended_session: bool

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "trigger_id": self.trigger_id,
            "action_index": self.action_index,
            "text": self.injected.text,
            "ended_session": self.ended_session,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FiringEvent":
        return cls(
            turn=data["turn"],
            trigger_id=data["trigger_id"],
            action_index=data["action_index"],
            injected=StageAction(
                text=data["text"],
                trigger_id=data["trigger_id"],
                action_index=data["action_index"],
            ),
            ended_session=data["ended_session"],
        )


def cheap_gates(trigger: Trigger, runtime: TriggerRuntime, session: "Session") -> bool:
    """All the model-free firing preconditions. False means the trigger is
    skipped this turn without any backend call."""
    if not runtime.active:
        return False
    for ref in trigger.requires_fired:
        if session.runtime_for(ref).fire_count < 1:
            return False
    for ref in trigger.requires_not_fired:
        if session.runtime_for(ref).fire_count > 0:
            return False
    if runtime.last_fired_turn is not None:
        if (session.turn - runtime.last_fired_turn) <= trigger.cooldown_turns:
            return False
    if trigger.fallback_k is not None:
        if session.fallback_clock.lines_since_last_fire < trigger.fallback_k:
            return False
    return True


def evaluate(session: "Session") -> FiringEvent | None:
    """Run one drama-manager pass: first gated-in trigger whose condition is
    met fires; later triggers are not checked. A pure fallback trigger
    (empty condition) fires without a model call. An ambiguous YES/NO reply
    counts as NO for this turn and is logged."""
    for trigger in session.definition.triggers:
        runtime = session.runtime_for(trigger.id)
        if not cheap_gates(trigger, runtime, session):
            continue
        if not trigger.is_pure_fallback:
            prompt = build_trigger_check_prompt(session.definition, session.lines, trigger)
            raw = session.backend.complete(prompt.text, TRIGGER_CHECK_PARAMS)
            try:
                met = parse_yes_no(raw)
            except AmbiguousYesNo:
                session.log_event(
                    "ambiguous_trigger_response",
                    {"trigger_id": trigger.id, "raw": raw},
                )
                met = False
            if not met:
                continue
        return fire(trigger, runtime, session)
    return None


def fire(trigger: Trigger, runtime: TriggerRuntime, session: "Session") -> FiringEvent:
    """Inject the trigger's next unused action and update firing state.

    Non-repeatable triggers deactivate once all actions are consumed;
    repeatable ones wrap around their action list and never deactivate.
    An ending trigger halts the session in the same event, after its action
    has been appended.
    """
    index = runtime.next_action_index
    action = StageAction(
        text=trigger.actions[index], trigger_id=trigger.id, action_index=index
    )
    session.lines.append(action)
    if trigger.repeatable:
        runtime.next_action_index = (index + 1) % len(trigger.actions)
    else:
        runtime.next_action_index = index + 1
        if runtime.next_action_index >= len(trigger.actions):
            runtime.active = False
    runtime.fire_count += 1
    runtime.last_fired_turn = session.turn
    session.fallback_clock.lines_since_last_fire = 0
    ended = trigger.trigger_type is TriggerType.ENDING
    event = FiringEvent(
        turn=session.turn,
        trigger_id=trigger.id,
        action_index=index,
        injected=action,
        ended_session=ended,
    )
    session.firing_log.append(event)
    session.log_event(
        "trigger_fired",
        {"trigger_id": trigger.id, "action_index": index, "ended_session": ended},
    )
    if ended:
        session.mark_ended()
    return event
