#!/usr/bin/env python3
"""Sweep the cooldown setting of an eager (always-YES, repeatable) trigger and
report its firing cadence over a fixed-length run.

Demonstrates the anti-self-escalation behavior: with cooldown c, the trigger
re-fires exactly every c+1 turns. Deterministic, scripted backend only.

Usage: python3 scripts/cooldown_sweep.py [--turns N] [--max-cooldown C]
"""

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dramakit.backends import IsSimulation, PromptContains, ScriptedBackend
from dramakit.engine import SessionMode, create_session, run_autonomous
from dramakit.story import Character, StoryDefinition, Trigger


def build_story(cooldown: int) -> StoryDefinition:
    return StoryDefinition(
        title=f"Cooldown {cooldown}",
        world_setting="Two characters keep escalating.",
        characters=(Character(name="Ava"), Character(name="Bee")),
        triggers=(
            Trigger(
                id="escalate",
                condition="Is the argument heating up?",
                actions=("A door slams somewhere in the house.",),
                repeatable=True,
                cooldown_turns=cooldown,
            ),
        ),
    )


def run_sweep(turns: int, max_cooldown: int) -> None:
    print(f"{'cooldown':>8}  {'firings':>7}  fired on turns")
    for cooldown in range(max_cooldown + 1):
        queue = [
            (IsSimulation(), f"<line>{('Ava', 'Bee')[t % 2]}: line {t}.</line>")
            for t in range(turns)
        ]
        queue += [(PromptContains("heating up?"), "YES") for _ in range(turns)]
        session = create_session(
            build_story(cooldown), ScriptedBackend(queue), mode=SessionMode.AUTONOMOUS
        )
        run_autonomous(session, turns)
        fired = [e.turn for e in session.firing_log]
        print(f"{cooldown:>8}  {len(fired):>7}  {fired}")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--turns", type=int, default=12)
    parser.add_argument("--max-cooldown", type=int, default=4)
    args = parser.parse_args()
    run_sweep(args.turns, args.max_cooldown)
    return 0


if __name__ == "__main__":
    sys.exit(main())
