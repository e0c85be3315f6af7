"""Run reports and aggregate statistics over transcript exports.

Aggregates are reported as "mean ± population standard deviation" with two
decimals. Population (not sample) std is deliberate and fixed so repeated
runs over the same exports always print the same table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .engine import Session, SessionState
from .exports import ended_by
from .story import Dialogue, StageAction


@dataclass(frozen=True)
class RunReport:
    session_id: str
    story_title: str
    simulation_length: int  # dialogue lines
    dialogue_count: int
    action_count: int  # trigger-injected stage actions
    generated_action_count: int  # model-written stage actions
    firings_per_trigger: dict[str, int]
    ended_by: str | None  # ending trigger id | "cap" | "error" | "exhaustion" | None

    @property
    def total_lines(self) -> int:
        # +1 for the world-setting head line of the rendered script
        return self.dialogue_count + self.action_count + self.generated_action_count + 1


def report_from_session(session: Session, *, turn_budget: int | None = None) -> RunReport:
    dialogue = sum(1 for l in session.lines if isinstance(l, Dialogue))
    injected = sum(1 for l in session.lines if isinstance(l, StageAction) and l.injected)
    generated = sum(1 for l in session.lines if isinstance(l, StageAction) and not l.injected)
    firings = {t.id: 0 for t in session.definition.triggers}
    for event in session.firing_log:
        firings[event.trigger_id] = firings.get(event.trigger_id, 0) + 1
    stopped_by = ended_by(session)
    if (
        stopped_by is None
        and turn_budget is not None
        and session.state is SessionState.RUNNING
        and session.turn >= turn_budget
    ):
        stopped_by = "exhaustion"
    return RunReport(
        session_id=session.id,
        story_title=session.definition.title,
        simulation_length=dialogue,
        dialogue_count=dialogue,
        action_count=injected,
        generated_action_count=generated,
        firings_per_trigger=firings,
        ended_by=stopped_by,
    )


def report_from_export(export: Mapping[str, Any]) -> RunReport:
    """Recount a report from a structured export (independent of the engine's
    own counters; tests use this as the recount oracle)."""
    lines = export["lines"]
    dialogue = sum(1 for l in lines if l["kind"] == "dialogue")
    injected = sum(
        1
        for l in lines
        if l["kind"] == "stage_action" and l["source"]["type"] == "trigger"
    )
    generated = sum(
        1 for l in lines if l["kind"] == "stage_action" and l["source"]["type"] == "model"
    )
    firings = {t["id"]: 0 for t in export["story"].get("triggers", [])}
    for event in export["firing_log"]:
        firings[event["trigger_id"]] = firings.get(event["trigger_id"], 0) + 1
    return RunReport(
        session_id=export["session_id"],
        story_title=export["story"].get("title", ""),
        simulation_length=dialogue,
        dialogue_count=dialogue,
        action_count=injected,
        generated_action_count=generated,
        firings_per_trigger=firings,
        ended_by=export.get("ended_by"),
    )


# --- aggregate statistics -----------------------------------------------------


def mean_and_population_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        raise ValueError("need at least one value")
    mean = sum(values) / len(values)
    variance = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(variance)


def format_mean_std(values: Sequence[float]) -> str:
    mean, std = mean_and_population_std(values)
    return f"{mean:.2f} ± {std:.2f}"


@dataclass(frozen=True)
class MetricRow:
    name: str
    values: tuple[float, ...]

    @property
    def formatted(self) -> str:
        return format_mean_std(self.values)


STAT_COLUMNS = (
    "Characters",
    "Triggers",
    "Action per trigger",
    "Simulation length",
    "Dialogues",
    "Actions",
)


def _actions_per_trigger(story: Mapping[str, Any]) -> float:
    triggers = story.get("triggers", [])
    if not triggers:
        return 0.0
    return sum(len(t["actions"]) for t in triggers) / len(triggers)


def stats_from_exports(exports: Iterable[Mapping[str, Any]]) -> list[MetricRow]:
    """One sample per export for each Table-style column: story shape from
    the embedded definition, playthrough counts from the transcript."""
    samples: dict[str, list[float]] = {name: [] for name in STAT_COLUMNS}
    for export in exports:
        story = export["story"]
        report = report_from_export(export)
        samples["Characters"].append(float(len(story["characters"])))
        samples["Triggers"].append(float(len(story.get("triggers", []))))
        samples["Action per trigger"].append(_actions_per_trigger(story))
        samples["Simulation length"].append(float(report.simulation_length))
        samples["Dialogues"].append(float(report.dialogue_count))
        samples["Actions"].append(float(report.action_count))
    return [MetricRow(name=name, values=tuple(samples[name])) for name in STAT_COLUMNS]


def format_stats_table(rows: Sequence[MetricRow]) -> str:
    width = max(len(row.name) for row in rows)
    return "\n".join(f"{row.name:<{width}}  {row.formatted}" for row in rows)
