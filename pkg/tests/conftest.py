import json
from pathlib import Path

import pytest

from dramakit.backends import (
    IsSimulation,
    IsTriggerCheck,
    MatchAny,
    PromptContains,
    ScriptedBackend,
)
from dramakit.story import Dialogue, StageAction, parse_story_definition

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def dinner_story():
    """The canonical fixture story (the example trigger embedded in a
    two-character kitchen scene)."""
    return parse_story_definition((FIXTURES / "dinner_table.json").read_text("utf-8"))


@pytest.fixture
def dinner_lines():
    """The three-line opening used by the golden prompt files."""
    return [
        Dialogue(speaker="Sepideh", text="Long day? You've barely touched your food."),
        Dialogue(speaker="Byron", text="It's fine. Just tired."),
        StageAction(text="Byron pushes food around his plate without looking up."),
    ]


@pytest.fixture
def dinner_scripted_entries():
    data = json.loads((FIXTURES / "dinner_table_scripted.json").read_text("utf-8"))
    return data["responses"]


def sim(text: str) -> tuple:
    return (IsSimulation(), text)


def line(speaker: str, text: str) -> tuple:
    return (IsSimulation(), f"<line>{speaker}: {text}</line>")


def check(answer: str) -> tuple:
    return (IsTriggerCheck(), answer)


def check_for(condition_fragment: str, answer: str) -> tuple:
    return (PromptContains(condition_fragment), answer)


def scripted(*entries) -> ScriptedBackend:
    return ScriptedBackend(list(entries))


def anymatch(text: str) -> tuple:
    return (MatchAny(), text)
