"""Story definitions and the canonical play-script rendering.

A story is a world setting, a cast of characters, and an ordered list of
triggers whose position in the list is their firing priority (earlier =
higher). Script lines render in play-script format: dialogue as
``Name: text`` and stage actions between asterisks. That format is shared
by prompts, transcripts, and exports, so the constraints here (no newlines
or colons in names, no newlines in line text) exist to keep it parseable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping, Union


class ValidationError(ValueError):
    """A story document violates the schema or a model invariant."""

    def __init__(self, message: str, path: str = ""):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)

    def at(self, path: str) -> "ValidationError":
        """Return a copy of this error anchored at ``path``."""
        joined = f"{path}.{self.path}" if self.path else path
        return ValidationError(self.message, joined)


@dataclass(frozen=True)
class StoryWarning:
    """Non-fatal finding from :func:`validate_story`."""

    code: str
    message: str
    trigger_id: str | None = None


def _clean_line_text(value: str, what: str) -> str:
    text = value.strip()
    if not text:
        raise ValidationError(f"{what} must be non-empty")
    if "\n" in text or "\r" in text:
        raise ValidationError(f"{what} may not contain newlines")
    return text


@dataclass(frozen=True)
class Character:
    name: str
    description: str = ""
    behavior_prompt: str = ""

    def __post_init__(self):
        name = self.name.strip()
        if not name:
            raise ValidationError("character name must be non-empty")
        if ":" in name:
            raise ValidationError(f"character name {name!r} may not contain ':'")
        if "\n" in name or "\r" in name:
            raise ValidationError(f"character name {name!r} may not contain newlines")
        if name.startswith("*"):
            # A name opening with '*' can collide with the stage-action format.
            raise ValidationError(f"character name {name!r} may not start with '*'")
        object.__setattr__(self, "name", name)


class TriggerType(Enum):
    BASIC = "basic"
    ENDING = "ending"

    @classmethod
    def parse(cls, value: "str | TriggerType") -> "TriggerType":
        if isinstance(value, TriggerType):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(
                f"trigger type must be 'basic' or 'ending', got {value!r}"
            ) from None


@dataclass(frozen=True)
class Trigger:
    """One authored plot trigger: a firing criterion plus staged consequences.

    ``condition`` is natural language, classified against the script by the
    drama manager. ``actions`` are consumed one per firing, in order. A
    trigger with an empty condition must set ``fallback_k`` (its only firing
    criterion is then the quiet-line clock).
    """

    id: str
    condition: str
    actions: tuple[str, ...]
    trigger_type: TriggerType = TriggerType.BASIC
    repeatable: bool = False
    fallback_k: int | None = None
    cooldown_turns: int = 0
    requires_fired: frozenset[str] = frozenset()
    requires_not_fired: frozenset[str] = frozenset()

    def __post_init__(self):
        if not str(self.id).strip():
            raise ValidationError("trigger id must be non-empty")
        object.__setattr__(self, "id", str(self.id).strip())
        object.__setattr__(self, "condition", self.condition.strip())
        actions = tuple(
            _clean_line_text(a, f"trigger {self.id!r} action") for a in self.actions
        )
        if not actions:
            raise ValidationError(f"trigger {self.id!r} must have at least one action")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "trigger_type", TriggerType.parse(self.trigger_type))
        if self.fallback_k is not None and self.fallback_k < 1:
            raise ValidationError(f"trigger {self.id!r}: fallback_k must be >= 1")
        if self.cooldown_turns < 0:
            raise ValidationError(f"trigger {self.id!r}: cooldown_turns must be >= 0")
        requires_fired = frozenset(self.requires_fired)
        requires_not_fired = frozenset(self.requires_not_fired)
        object.__setattr__(self, "requires_fired", requires_fired)
        object.__setattr__(self, "requires_not_fired", requires_not_fired)
        if requires_fired & requires_not_fired:
            raise ValidationError(
                f"trigger {self.id!r}: requires_fired and requires_not_fired overlap"
            )
        if self.id in requires_fired or self.id in requires_not_fired:
            raise ValidationError(f"trigger {self.id!r} may not reference itself")
        if not self.condition and self.fallback_k is None:
            raise ValidationError(
                f"trigger {self.id!r} has an empty condition and no fallback_k; "
                "a trigger needs at least one firing criterion"
            )

    @property
    def is_pure_fallback(self) -> bool:
        return not self.condition


@dataclass(frozen=True)
class StoryDefinition:
    title: str
    world_setting: str
    characters: tuple[Character, ...]
    triggers: tuple[Trigger, ...] = ()
    player_character: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "title", self.title.strip())
        object.__setattr__(
            self, "world_setting", _clean_line_text(self.world_setting, "world_setting")
        )
        characters = tuple(self.characters)
        if not characters:
            raise ValidationError("a story needs at least one character")
        names = [c.name for c in characters]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate character names: {dupes}")
        object.__setattr__(self, "characters", characters)
        triggers = tuple(self.triggers)
        ids = [t.id for t in triggers]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate trigger ids: {dupes}")
        known = set(ids)
        for trigger in triggers:
            for ref in sorted(trigger.requires_fired | trigger.requires_not_fired):
                if ref not in known:
                    raise ValidationError(
                        f"trigger {trigger.id!r} references unknown trigger {ref!r}"
                    )
        object.__setattr__(self, "triggers", triggers)
        if self.player_character is not None:
            player = self.player_character.strip()
            if player not in set(names):
                raise ValidationError(
                    f"player_character {player!r} is not in the cast"
                )
            object.__setattr__(self, "player_character", player)

    def character_names(self) -> list[str]:
        return [c.name for c in self.characters]

    def trigger_by_id(self, trigger_id: str) -> Trigger:
        for trigger in self.triggers:
            if trigger.id == trigger_id:
                return trigger
        raise KeyError(trigger_id)


# --- script lines -----------------------------------------------------------


@dataclass(frozen=True)
class WorldSetting:
    """The scene-setting head line; only appears in exports, never appended."""

    text: str

    def __post_init__(self):
        object.__setattr__(self, "text", _clean_line_text(self.text, "world setting"))


@dataclass(frozen=True)
class Dialogue:
    speaker: str
    text: str

    def __post_init__(self):
        speaker = self.speaker.strip()
        if not speaker or ":" in speaker or "\n" in speaker:
            raise ValidationError(f"invalid dialogue speaker {speaker!r}")
        object.__setattr__(self, "speaker", speaker)
        object.__setattr__(self, "text", _clean_line_text(self.text, "dialogue text"))


@dataclass(frozen=True)
class StageAction:
    """A non-dialogue script line. ``trigger_id`` is set when a fired trigger
    injected the line; ``None`` means the model generated it."""

    text: str
    trigger_id: str | None = None
    action_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "text", _clean_line_text(self.text, "stage action"))
        if (self.trigger_id is None) != (self.action_index is None):
            raise ValidationError(
                "stage action must set trigger_id and action_index together"
            )
        if self.action_index is not None and self.action_index < 0:
            raise ValidationError("stage action index must be >= 0")

    @property
    def injected(self) -> bool:
        return self.trigger_id is not None


ScriptLine = Union[WorldSetting, Dialogue, StageAction]


def render_line(line: ScriptLine) -> str:
    if isinstance(line, Dialogue):
        return f"{line.speaker}: {line.text}"
    if isinstance(line, (WorldSetting, StageAction)):
        return f"*{line.text}*"
    raise TypeError(f"not a script line: {line!r}")


def render_script(world_setting: str, lines: Iterable[ScriptLine]) -> str:
    """Render the full script: starred setting first, one line per entry,
    single newlines, no trailing newline."""
    rendered = [f"*{world_setting.strip()}*"]
    rendered.extend(render_line(line) for line in lines)
    return "\n".join(rendered)


# --- serialization ----------------------------------------------------------


def line_to_dict(line: ScriptLine) -> dict:
    if isinstance(line, WorldSetting):
        return {"kind": "world_setting", "text": line.text}
    if isinstance(line, Dialogue):
        return {"kind": "dialogue", "speaker": line.speaker, "text": line.text}
    if isinstance(line, StageAction):
        source: dict[str, Any] = {"type": "model"}
        if line.injected:
            source = {
                "type": "trigger",
                "trigger_id": line.trigger_id,
                "action_index": line.action_index,
            }
        return {"kind": "stage_action", "text": line.text, "source": source}
    raise TypeError(f"not a script line: {line!r}")


def line_from_dict(data: Mapping[str, Any]) -> ScriptLine:
    kind = data.get("kind")
    if kind == "world_setting":
        return WorldSetting(text=data["text"])
    if kind == "dialogue":
        return Dialogue(speaker=data["speaker"], text=data["text"])
    if kind == "stage_action":
        source = data.get("source") or {"type": "model"}
        if source.get("type") == "trigger":
            return StageAction(
                text=data["text"],
                trigger_id=source["trigger_id"],
                action_index=source["action_index"],
            )
        return StageAction(text=data["text"])
    raise ValidationError(f"unknown script line kind {kind!r}")


def trigger_to_dict(trigger: Trigger) -> dict:
    return {
        "id": trigger.id,
        "condition": trigger.condition,
        "actions": list(trigger.actions),
        "type": trigger.trigger_type.value,
        "repeatable": trigger.repeatable,
        "fallback_k": trigger.fallback_k,
        "cooldown_turns": trigger.cooldown_turns,
        "requires_fired": sorted(trigger.requires_fired),
        "requires_not_fired": sorted(trigger.requires_not_fired),
    }


def story_to_dict(definition: StoryDefinition) -> dict:
    return {
        "title": definition.title,
        "world_setting": definition.world_setting,
        "characters": [
            {
                "name": c.name,
                "description": c.description,
                "behavior_prompt": c.behavior_prompt,
            }
            for c in definition.characters
        ],
        "triggers": [trigger_to_dict(t) for t in definition.triggers],
        "player_character": definition.player_character,
    }


def serialize_story(definition: StoryDefinition) -> str:
    return json.dumps(story_to_dict(definition), indent=2, ensure_ascii=False)


# --- parsing ----------------------------------------------------------------

_TOP_LEVEL_KEYS = {"title", "world_setting", "characters", "triggers", "player_character"}
_CHARACTER_KEYS = {"name", "description", "behavior_prompt"}
_TRIGGER_KEYS = {
    "id",
    "condition",
    "actions",
    "type",
    "repeatable",
    "fallback_k",
    "cooldown_turns",
    "requires_fired",
    "requires_not_fired",
}


def _require_str(data: Mapping, key: str, path: str) -> str:
    if key not in data:
        raise ValidationError("missing required key", f"{path}{key}")
    value = data[key]
    if not isinstance(value, str):
        raise ValidationError(f"expected a string, got {type(value).__name__}", f"{path}{key}")
    return value


def _optional_str(data: Mapping, key: str, path: str, default: str = "") -> str:
    if key not in data or data[key] is None:
        return default
    value = data[key]
    if not isinstance(value, str):
        raise ValidationError(f"expected a string, got {type(value).__name__}", f"{path}{key}")
    return value


def _check_keys(data: Mapping, allowed: set, path: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValidationError(f"unknown keys: {unknown}", path.rstrip("."))


def _parse_character(data: Any, path: str) -> Character:
    if not isinstance(data, Mapping):
        raise ValidationError("character must be an object", path)
    _check_keys(data, _CHARACTER_KEYS, path)
    try:
        return Character(
            name=_require_str(data, "name", f"{path}."),
            description=_optional_str(data, "description", f"{path}."),
            behavior_prompt=_optional_str(data, "behavior_prompt", f"{path}."),
        )
    except ValidationError as exc:
        if exc.path:
            raise
        raise exc.at(path) from None


def _parse_id_list(value: Any, path: str) -> frozenset[str]:
    if value is None:
        return frozenset()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValidationError("expected a list of trigger ids", path)
    return frozenset(value)


def _parse_trigger(data: Any, index: int, path: str) -> Trigger:
    if not isinstance(data, Mapping):
        raise ValidationError("trigger must be an object", path)
    _check_keys(data, _TRIGGER_KEYS, path)
    trigger_id = _optional_str(data, "id", f"{path}.", default=f"trigger-{index}")
    actions = data.get("actions")
    if not isinstance(actions, list) or not all(isinstance(a, str) for a in actions):
        raise ValidationError("actions must be a list of strings", f"{path}.actions")
    repeatable = data.get("repeatable", False)
    if not isinstance(repeatable, bool):
        raise ValidationError("repeatable must be a boolean", f"{path}.repeatable")
    fallback_k = data.get("fallback_k")
    if fallback_k is not None and (type(fallback_k) is not int):
        raise ValidationError("fallback_k must be an integer", f"{path}.fallback_k")
    cooldown = data.get("cooldown_turns", 0)
    if type(cooldown) is not int:
        raise ValidationError("cooldown_turns must be an integer", f"{path}.cooldown_turns")
    try:
        return Trigger(
            id=trigger_id,
            condition=_optional_str(data, "condition", f"{path}."),
            actions=tuple(actions),
            trigger_type=TriggerType.parse(_optional_str(data, "type", f"{path}.", "basic")),
            repeatable=repeatable,
            fallback_k=fallback_k,
            cooldown_turns=cooldown,
            requires_fired=_parse_id_list(data.get("requires_fired"), f"{path}.requires_fired"),
            requires_not_fired=_parse_id_list(
                data.get("requires_not_fired"), f"{path}.requires_not_fired"
            ),
        )
    except ValidationError as exc:
        if exc.path:
            raise
        raise exc.at(path) from None


def parse_story_definition(document: "str | bytes | Mapping[str, Any]") -> StoryDefinition:
    """Parse and validate a story document (JSON text or an already-decoded
    object). Raises :class:`ValidationError` with a path on any violation."""
    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON: {exc}") from None
    else:
        data = document
    if not isinstance(data, Mapping):
        raise ValidationError("story document must be a JSON object")
    _check_keys(data, _TOP_LEVEL_KEYS, "document")

    characters_raw = data.get("characters")
    if not isinstance(characters_raw, list):
        raise ValidationError("characters must be a list", "characters")
    characters = tuple(
        _parse_character(c, f"characters[{i}]") for i, c in enumerate(characters_raw)
    )

    triggers_raw = data.get("triggers", [])
    if triggers_raw is None:
        triggers_raw = []
    if not isinstance(triggers_raw, list):
        raise ValidationError("triggers must be a list", "triggers")
    triggers = tuple(
        _parse_trigger(t, i, f"triggers[{i}]") for i, t in enumerate(triggers_raw)
    )

    player = data.get("player_character")
    if player is not None and not isinstance(player, str):
        raise ValidationError("player_character must be a string or null", "player_character")

    try:
        return StoryDefinition(
            title=_require_str(data, "title", ""),
            world_setting=_require_str(data, "world_setting", ""),
            characters=characters,
            triggers=triggers,
            player_character=player,
        )
    except ValidationError as exc:
        if exc.path:
            raise
        raise exc.at("document") from None


def load_story_file(path) -> StoryDefinition:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_story_definition(fh.read())


# --- validation warnings ----------------------------------------------------


def _unfireable_trigger_ids(definition: StoryDefinition) -> list[str]:
    """Triggers whose requires_fired chain can never be satisfied.

    Fixpoint: a trigger is potentially fireable if everything it requires
    fired is itself potentially fireable. Cycles never enter the fixpoint.
    """
    fireable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for trigger in definition.triggers:
            if trigger.id in fireable:
                continue
            if all(ref in fireable for ref in trigger.requires_fired):
                fireable.add(trigger.id)
                changed = True
    return [t.id for t in definition.triggers if t.id not in fireable]


def validate_story(definition: StoryDefinition) -> list[StoryWarning]:
    """Non-fatal checks run after parsing; returns warnings, never raises."""
    warnings: list[StoryWarning] = []
    for trigger_id in _unfireable_trigger_ids(definition):
        warnings.append(
            StoryWarning(
                code="unfireable_trigger",
                message=(
                    f"trigger {trigger_id!r} is gated on triggers that can never "
                    "all fire (requires_fired cycle); it is unfireable"
                ),
                trigger_id=trigger_id,
            )
        )
    for trigger in definition.triggers:
        if trigger.trigger_type is TriggerType.ENDING and len(trigger.actions) > 1:
            warnings.append(
                StoryWarning(
                    code="ending_extra_actions",
                    message=(
                        f"ending trigger {trigger.id!r} has {len(trigger.actions)} actions; "
                        "the session halts after the first, the rest are unreachable"
                    ),
                    trigger_id=trigger.id,
                )
            )
    if definition.player_character is None:
        warnings.append(
            StoryWarning(
                code="no_player_character",
                message="no player_character set; the story can only run autonomously",
            )
        )
    return warnings
