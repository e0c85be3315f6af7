"""Command-line entry points: validate, run, batch, stats, serve.

Exit codes for ``validate``: 0 clean, 1 warnings only (0 with
--allow-warnings), 2 errors. Other commands exit 0 on success, 2 on error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import engine
from .backends import (
    CompletionBackend,
    HttpCompletionBackend,
    ScriptedBackend,
    matcher_from_spec,
)
from .engine import Session, SessionMode, SessionState
from .exports import build_export, render_export_text
from .reports import (
    RunReport,
    format_stats_table,
    report_from_session,
    stats_from_exports,
)
from .story import ValidationError, load_story_file, validate_story


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _slug(text: str) -> str:
    cleaned = re.sub(r"[^a-zA-Z0-9]+", "-", text).strip("-").lower()
    return cleaned or "story"


def _load_scripted_entries(path: str) -> list[tuple]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    entries = data["responses"] if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise ValueError("scripted fixture must be a list or {'responses': [...]}")
    return [
        (matcher_from_spec(e.get("match", "any")), str(e["response"])) for e in entries
    ]


def make_backend(selector: str, *, seed: int | None = None) -> CompletionBackend:
    """Build a backend from a ``--backend`` value: ``live`` or
    ``scripted:<fixture.json>``. A seed shuffles the scripted queue order
    (matchers keep responses type-safe); live backends ignore it."""
    if selector == "live":
        return HttpCompletionBackend.from_env()
    if selector.startswith("scripted:"):
        entries = _load_scripted_entries(selector.split(":", 1)[1])
        if seed is not None:
            random.Random(seed).shuffle(entries)
        return ScriptedBackend(entries)
    raise ValueError(f"backend must be 'live' or 'scripted:<fixture>', got {selector!r}")


# --- validate ---------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        definition = load_story_file(args.story)
    except OSError as exc:
        return _fail(str(exc))
    except ValidationError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    warnings = validate_story(definition)
    print(f"ok: {definition.title!r} — {len(definition.characters)} characters, "
          f"{len(definition.triggers)} triggers")
    for warning in warnings:
        print(f"warning [{warning.code}]: {warning.message}")
    if warnings and not args.allow_warnings:
        return 1
    return 0


# --- run / batch --------------------------------------------------------------


def _print_report(report: RunReport) -> None:
    print(f"session {report.session_id}:")
    print(f"  simulation length : {report.simulation_length}")
    print(f"  dialogues         : {report.dialogue_count}")
    print(f"  injected actions  : {report.action_count}")
    if report.generated_action_count:
        print(f"  generated actions : {report.generated_action_count}")
    print(f"  ended by          : {report.ended_by or 'still running'}")
    if report.firings_per_trigger:
        firings = ", ".join(f"{k}={v}" for k, v in report.firings_per_trigger.items())
        print(f"  firings           : {firings}")


def _write_exports(session: Session, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    export = build_export(session)
    json_path = out_dir / f"{session.id}.json"
    json_path.write_text(
        json.dumps(export, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (out_dir / f"{session.id}.txt").write_text(
        render_export_text(export), encoding="utf-8"
    )
    return json_path


def _drive_interactive(session: Session, max_turns: int, echo: bool) -> None:
    player = session.definition.player_character
    if echo:
        print(f"*{session.definition.world_setting}*")
    target = session.turn + max_turns
    while (
        session.state in (SessionState.RUNNING, SessionState.AWAITING_PLAYER)
        and session.turn < target
    ):
        if session.state is SessionState.AWAITING_PLAYER:
            try:
                text = input(f"{player}> ")
            except EOFError:
                print("\n(input closed, stopping)", file=sys.stderr)
                return
            try:
                outcome = engine.submit_player_line(session, text)
            except engine.PlayerInputError as exc:
                print(f"({exc})", file=sys.stderr)
                continue
        else:
            outcome = engine.step(session)
        if echo and outcome.appended is not None:
            from .story import render_line

            print(render_line(outcome.appended))
            if outcome.firing is not None:
                print(render_line(outcome.firing.injected))


def _run_one(
    definition,
    backend: CompletionBackend,
    *,
    mode: SessionMode,
    max_turns: int,
    session_id: str,
    seed: int | None,
    line_cap: int,
    echo: bool,
) -> Session:
    session = engine.create_session(
        definition,
        backend,
        mode=mode,
        session_id=session_id,
        seed=seed,
        line_cap=line_cap,
    )
    if mode is SessionMode.INTERACTIVE:
        _drive_interactive(session, max_turns, echo)
    else:
        engine.run_autonomous(session, max_turns)
        if echo:
            print(session.render_text())
    return session


def cmd_run(args: argparse.Namespace) -> int:
    try:
        definition = load_story_file(args.story)
        backend = make_backend(args.backend, seed=args.seed)
    except (OSError, ValueError, ValidationError) as exc:
        return _fail(str(exc))
    mode = SessionMode(args.mode)
    if mode is SessionMode.INTERACTIVE and definition.player_character is None:
        return _fail("interactive mode needs a player_character in the story")
    session_id = args.session_id or f"{_slug(definition.title)}-{os.urandom(3).hex()}"
    session = _run_one(
        definition,
        backend,
        mode=mode,
        max_turns=args.max_turns,
        session_id=session_id,
        seed=args.seed,
        line_cap=args.line_cap,
        echo=not args.quiet,
    )
    out_dir = Path(args.out)
    _write_exports(session, out_dir)
    report = report_from_session(session, turn_budget=args.max_turns)
    _print_report(report)
    if session.state is SessionState.ERRORED:
        print(f"session errored: {session.error_reason}", file=sys.stderr)
        return 2
    return 0


def cmd_batch(args: argparse.Namespace) -> int:
    try:
        definition = load_story_file(args.story)
    except (OSError, ValidationError) as exc:
        return _fail(str(exc))
    if not args.backend.startswith("scripted:"):
        return _fail("batch mode requires --backend scripted:<fixture>")
    base = _slug(definition.title)
    out_dir = Path(args.out)

    def run_index(index: int) -> Session:
        seed = None if args.seed is None else args.seed + index
        backend = make_backend(args.backend, seed=seed)
        return _run_one(
            definition,
            backend,
            mode=SessionMode.AUTONOMOUS,
            max_turns=args.max_turns,
            session_id=f"{base}-{index:03d}",
            seed=seed,
            line_cap=args.line_cap,
            echo=False,
        )

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        sessions = list(pool.map(run_index, range(args.count)))

    exports = []
    for session in sessions:
        _write_exports(session, out_dir)
        exports.append(build_export(session))
        _print_report(report_from_session(session, turn_budget=args.max_turns))
    print()
    print(format_stats_table(stats_from_exports(exports)))
    errored = [s for s in sessions if s.state is SessionState.ERRORED]
    if errored:
        for session in errored:
            print(f"session {session.id} errored: {session.error_reason}", file=sys.stderr)
        return 2
    return 0


# --- stats ---------------------------------------------------------------------


def cmd_stats(args: argparse.Namespace) -> int:
    directory = Path(args.transcripts)
    if not directory.is_dir():
        return _fail(f"not a directory: {directory}")
    exports = []
    for path in sorted(directory.glob("*.json")):
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
            continue
        if not isinstance(data, dict) or data.get("kind") != "transcript_export":
            print(f"skipping {path.name}: not a transcript export", file=sys.stderr)
            continue
        exports.append(data)
    if not exports:
        return _fail(f"no transcript exports in {directory}")
    print(f"{len(exports)} playthroughs")
    print(format_stats_table(stats_from_exports(exports)))
    return 0


# --- serve -----------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    from .storage import FileStore

    host, _, port = args.bind.rpartition(":")
    app = create_app(FileStore(args.data_dir), static_dir=args.static)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level=args.log_level)
    return 0


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dramakit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a story file")
    p_validate.add_argument("story")
    p_validate.add_argument(
        "--allow-warnings",
        action="store_true",
        help="exit 0 even when validation produces warnings",
    )
    p_validate.set_defaults(func=cmd_validate)

    def add_run_args(p, interactive_ok: bool):
        p.add_argument("story")
        p.add_argument("--backend", default="live", help="live or scripted:<fixture.json>")
        p.add_argument("--max-turns", type=int, default=30)
        p.add_argument("--out", default="runs")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--line-cap", type=int, default=engine.DEFAULT_LINE_CAP)

    p_run = sub.add_parser("run", help="play one session")
    add_run_args(p_run, True)
    p_run.add_argument("--mode", choices=["interactive", "autonomous"], default="autonomous")
    p_run.add_argument("--session-id", default=None)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_batch = sub.add_parser("batch", help="run N autonomous sessions")
    add_run_args(p_batch, False)
    p_batch.add_argument("--count", type=int, default=5)
    p_batch.add_argument("--jobs", type=int, default=1)
    p_batch.set_defaults(func=cmd_batch)

    p_stats = sub.add_parser("stats", help="aggregate statistics over exports")
    p_stats.add_argument("transcripts")
    p_stats.set_defaults(func=cmd_stats)

    p_serve = sub.add_parser("serve", help="run the HTTP session service")
    p_serve.add_argument("--data-dir", default=os.environ.get("DL_DATA_DIR", "data"))
    p_serve.add_argument("--bind", default=os.environ.get("DL_BIND_ADDR", "127.0.0.1:8000"))
    p_serve.add_argument("--static", default=None, help="serve a built UI bundle at /ui")
    p_serve.add_argument("--log-level", default="info")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
