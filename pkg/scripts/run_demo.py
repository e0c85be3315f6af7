#!/usr/bin/env python3
"""Play the bundled fixture story against its scripted backend and print the
resulting script, firing log, and run report. No network, fully deterministic.

Usage: python3 scripts/run_demo.py [--max-turns N]
"""

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dramakit.backends import ScriptedBackend
from dramakit.engine import SessionMode, create_session, run_autonomous
from dramakit.reports import report_from_session
from dramakit.story import load_story_file


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--max-turns", type=int, default=6)
    args = parser.parse_args()

    definition = load_story_file(ROOT / "fixtures" / "dinner_table.json")
    fixture = json.loads((ROOT / "fixtures" / "dinner_table_scripted.json").read_text("utf-8"))
    backend = ScriptedBackend.from_spec({"kind": "scripted", **fixture})

    session = create_session(definition, backend, mode=SessionMode.AUTONOMOUS)
    run_autonomous(session, args.max_turns)

    print(session.render_text())
    print()
    for event in session.firing_log:
        print(f"fired turn={event.turn} trigger={event.trigger_id} action={event.action_index}")
    report = report_from_session(session, turn_budget=args.max_turns)
    print(
        f"\n{report.simulation_length} dialogue lines, "
        f"{report.action_count} injected actions, ended by: {report.ended_by}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
