"""Transcript exports: the structured record of a playthrough.

The structured line list always starts with the world setting, so the
rendered text in the export is exactly the render of its own line list.
"""

from __future__ import annotations

from typing import Any, Iterable, Mapping

from .engine import Session, SessionState
from .story import WorldSetting, line_to_dict, render_script, story_to_dict

EXPORT_KIND = "transcript_export"
FORMAT_VERSION = 1


def ended_by(session: Session) -> str | None:
    """What stopped the session: an ending trigger's id, "cap" for the line
    cap, "error" for other failures, None while it can still continue."""
    if session.state is SessionState.ENDED:
        for event in reversed(session.firing_log):
            if event.ended_session:
                return event.trigger_id
        return None
    if session.state is SessionState.ERRORED:
        if session.error_reason == "length cap":
            return "cap"
        return "error"
    return None


def build_export(session: Session, annotations: Iterable[Mapping[str, Any]] = ()) -> dict:
    structured = [line_to_dict(WorldSetting(text=session.definition.world_setting))]
    structured.extend(line_to_dict(line) for line in session.lines)
    return {
        "kind": EXPORT_KIND,
        "format_version": FORMAT_VERSION,
        "session_id": session.id,
        "mode": session.mode.value,
        "state": session.state.value,
        "error_reason": session.error_reason,
        "ended_by": ended_by(session),
        "turn": session.turn,
        "seed": session.seed,
        "story": story_to_dict(session.definition),
        "rendered_script": render_script(session.definition.world_setting, session.lines),
        "lines": structured,
        "firing_log": [event.to_dict() for event in session.firing_log],
        "annotations": list(annotations),
        "event_log": [event.to_dict() for event in session.event_log],
    }


def render_export_text(export: Mapping[str, Any]) -> str:
    """The .txt form of an export: the rendered script plus a final newline."""
    return export["rendered_script"] + "\n"
