"""Prompt assembly and model-response parsing.

Both prompts share one context block (cast list + script so far) and differ
only in the closing instruction. The templates are frozen: tests compare
built prompts byte-for-byte against golden files, so any change here is a
contract change. Newlines are always ``\\n``.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Iterable

from .story import Dialogue, ScriptLine, StageAction, StoryDefinition, render_script

HEADER = (
    "We're writing a story in the form of a play script. "
    "The story has these characters:"
)
SCRIPT_INTRO = "So far, the script is as follows:"
SIMULATION_INSTRUCTION = (
    "Suggest a possible next line for the script. Wrap it in <line></line> tags."
)
CONDITION_INTRO = "Decide whether the following condition has been met in the script so far:"
YES_NO_INSTRUCTION = "Return either the single token YES or NO, nothing else."


class ResponseParseError(ValueError):
    """The model's reply does not satisfy the response contract."""


class NoTagFound(ResponseParseError):
    pass


class EmptyLine(ResponseParseError):
    pass


class MalformedLine(ResponseParseError):
    pass


class UnknownSpeaker(ResponseParseError):
    def __init__(self, speaker: str):
        self.speaker = speaker
        super().__init__(f"speaker {speaker!r} is not in the cast")


class AmbiguousYesNo(ResponseParseError):
    def __init__(self, raw: str):
        self.raw = raw
        super().__init__(f"expected YES or NO, got {raw!r}")


@dataclass(frozen=True)
class SimulationPrompt:
    text: str


@dataclass(frozen=True)
class TriggerCheckPrompt:
    text: str


def build_context(definition: StoryDefinition, lines: Iterable[ScriptLine]) -> str:
    """The shared context block: header, one ``Name: behavior`` line per cast
    member in cast order, then the script so far."""
    parts = [HEADER]
    parts.extend(f"{c.name}: {c.behavior_prompt}" for c in definition.characters)
    parts.append("")
    parts.append(SCRIPT_INTRO)
    parts.append(render_script(definition.world_setting, lines))
    return "\n".join(parts)


def build_simulation_prompt(
    definition: StoryDefinition, lines: Iterable[ScriptLine]
) -> SimulationPrompt:
    context = build_context(definition, lines)
    return SimulationPrompt(text=f"{context}\n\n{SIMULATION_INSTRUCTION}")


def build_trigger_check_prompt(
    definition: StoryDefinition, lines: Iterable[ScriptLine], trigger
) -> TriggerCheckPrompt:
    if not trigger.condition:
        raise ValueError(f"trigger {trigger.id!r} has no condition to check")
    context = build_context(definition, lines)
    return TriggerCheckPrompt(
        text=(
            f"{context}\n\n{CONDITION_INTRO}\n{trigger.condition}"
            f"\n\n{YES_NO_INSTRUCTION}"
        )
    )


_LINE_TAG = re.compile(r"<line>(.*?)</line>", re.DOTALL)


def parse_line_response(raw: str, cast_names: Iterable[str]) -> "Dialogue | StageAction":
    """Extract the first ``<line>...</line>`` span and parse it as a script
    line. Everything outside the tags (model chatter) is ignored."""
    match = _LINE_TAG.search(raw)
    if match is None:
        raise NoTagFound("no <line></line> tags in response")
    inner = match.group(1).strip()
    if not inner:
        raise EmptyLine("empty line between tags")
    if "\n" in inner:
        raise MalformedLine("tagged line spans multiple lines")
    if inner.startswith("*") and inner.endswith("*") and len(inner) >= 2:
        text = inner[1:-1].strip()
        if not text:
            raise EmptyLine("empty stage action")
        return StageAction(text=text)
    if ":" not in inner:
        raise MalformedLine(f"not 'Name: text' or '*action*': {inner!r}")
    speaker, _, text = inner.partition(":")
    speaker = speaker.strip()
    text = text.strip()
    if not text:
        raise EmptyLine("empty dialogue text")
    if speaker not in set(cast_names):
        raise UnknownSpeaker(speaker)
    return Dialogue(speaker=speaker, text=text)


def parse_yes_no(raw: str) -> bool:
    """Strict YES/NO classification, tolerating only case and trailing
    punctuation. Anything else is ambiguous."""
    token = raw.strip().rstrip(string.punctuation + string.whitespace)
    folded = token.casefold()
    if folded == "yes":
        return True
    if folded == "no":
        return False
    raise AmbiguousYesNo(raw)
