"""dramakit: a trigger-driven interactive story engine.

Characters are played by a completion backend; plot progression is steered
by natural-language triggers that a drama manager classifies against the
script after every message. A deterministic scripted backend makes every
engine behavior reproducible without a live model.
"""

from .backends import (
    BackendError,
    CompletionBackend,
    GenerationParams,
    HttpCompletionBackend,
    ScriptedBackend,
)
from .engine import (
    Session,
    SessionMode,
    SessionState,
    StepOutcome,
    create_session,
    run_autonomous,
    snapshot,
    reset_to,
    step,
    submit_player_line,
)
from .manager import FiringEvent, TriggerRuntime
from .story import (
    Character,
    Dialogue,
    ScriptLine,
    StageAction,
    StoryDefinition,
    Trigger,
    TriggerType,
    ValidationError,
    WorldSetting,
    parse_story_definition,
    render_script,
    serialize_story,
    validate_story,
)

__all__ = [
    "BackendError",
    "Character",
    "CompletionBackend",
    "Dialogue",
    "FiringEvent",
    "GenerationParams",
    "HttpCompletionBackend",
    "ScriptLine",
    "ScriptedBackend",
    "Session",
    "SessionMode",
    "SessionState",
    "StageAction",
    "StepOutcome",
    "StoryDefinition",
    "Trigger",
    "TriggerRuntime",
    "TriggerType",
    "ValidationError",
    "WorldSetting",
    "create_session",
    "parse_story_definition",
    "render_script",
    "reset_to",
    "run_autonomous",
    "serialize_story",
    "snapshot",
    "step",
    "submit_player_line",
    "validate_story",
]

__version__ = "0.1.0"
