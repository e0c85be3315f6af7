"""HTTP service: story CRUD, session lifecycle, annotation, and export.

Stepping is client-driven; the service holds no background loops. Each
session's mutations are serialized by a per-session lock — a second writer
gets 409 rather than queueing. Everything is persisted to the file store
after each mutation, so a restarted service resumes sessions exactly where
they stopped (scripted backends rewind to their remaining queue).
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from typing import Any

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import engine
from .backends import backend_from_spec
from .engine import (
    DEFAULT_LINE_CAP,
    Session,
    SessionMode,
    SessionState,
    SessionStateError,
    Snapshot,
    StepOutcome,
    PlayerInputError,
    session_from_dict,
    session_to_dict,
)
from .exports import build_export, ended_by, render_export_text
from .story import (
    Dialogue,
    ValidationError,
    line_to_dict,
    parse_story_definition,
    story_to_dict,
    validate_story,
)
from .storage import FileStore, NotFoundError


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(message)


@dataclass
class SessionHandle:
    session: Session
    story_id: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    paused: bool = False
    snapshot_counts: list[int] = field(default_factory=list)
    annotations: list[dict] = field(default_factory=list)
    annotation_seq: int = 0


class CreateSessionRequest(BaseModel):
    story_id: str
    mode: str = "autonomous"
    backend: dict | None = None
    line_cap: int = DEFAULT_LINE_CAP
    seed: int | None = None


class StepRequest(BaseModel):
    since: int | None = None


class PlayerLineRequest(BaseModel):
    text: str
    since: int | None = None


class ResetRequest(BaseModel):
    line_count: int


class AnnotationRequest(BaseModel):
    kind: str
    target_index: int
    correct: bool | None = None
    good: bool | None = None
    note: str | None = None
    author: str | None = None


def create_app(store: FileStore, *, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="dramakit session service")
    handles: dict[str, SessionHandle] = {}
    registry_lock = threading.Lock()

    # -- plumbing ---------------------------------------------------------

    @app.exception_handler(ApiError)
    def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(RequestValidationError)
    def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "validation_error",
                "message": "invalid request body",
                "detail": exc.errors(),
            },
        )

    def _parse_story(document: Any) -> tuple[dict, list[dict]]:
        try:
            definition = parse_story_definition(document)
        except ValidationError as exc:
            raise ApiError(
                400,
                "validation_error",
                exc.message,
                {"path": exc.path},
            ) from exc
        warnings = [
            {"code": w.code, "message": w.message, "trigger_id": w.trigger_id}
            for w in validate_story(definition)
        ]
        return story_to_dict(definition), warnings

    def _load_story(story_id: str) -> dict:
        try:
            return store.load_story(story_id)
        except NotFoundError:
            raise ApiError(404, "not_found", f"no story {story_id!r}") from None

    def _persist(handle: SessionHandle) -> None:
        store.save_session(
            handle.session.id,
            {
                "story_id": handle.story_id,
                "paused": handle.paused,
                "annotation_seq": handle.annotation_seq,
                "session": session_to_dict(handle.session),
            },
        )

    def _get_handle(session_id: str) -> SessionHandle:
        with registry_lock:
            handle = handles.get(session_id)
            if handle is not None:
                return handle
            try:
                payload = store.load_session(session_id)
            except NotFoundError:
                raise ApiError(404, "not_found", f"no session {session_id!r}") from None
            session = session_from_dict(payload["session"])
            handle = SessionHandle(
                session=session,
                story_id=payload["story_id"],
                paused=payload.get("paused", False),
                snapshot_counts=store.list_snapshot_counts(session_id),
                annotations=store.list_annotations(session_id),
                annotation_seq=payload.get("annotation_seq", 0),
            )
            handles[session_id] = handle
            return handle

    def _session_view(handle: SessionHandle) -> dict:
        session = handle.session
        return {
            "id": session.id,
            "story_id": handle.story_id,
            "title": session.definition.title,
            "world_setting": session.definition.world_setting,
            "player_character": session.definition.player_character,
            "mode": session.mode.value,
            "state": session.state.value,
            "paused": handle.paused,
            "awaiting_player": session.state is SessionState.AWAITING_PLAYER,
            "turn": session.turn,
            "line_count": len(session.lines),
            "error_reason": session.error_reason,
            "ended_by": ended_by(session),
        }

    def _outcome_view(outcome: StepOutcome) -> dict:
        return {
            "appended": line_to_dict(outcome.appended) if outcome.appended else None,
            "firing": outcome.firing.to_dict() if outcome.firing else None,
            "state": outcome.new_state.value,
            "awaiting_player": outcome.awaiting_player,
        }

    def _take_snapshot(handle: SessionHandle) -> int:
        count = len(handle.session.lines)
        if count not in handle.snapshot_counts:
            snap = engine.snapshot(handle.session)
            store.save_snapshot(handle.session.id, count, snap.state)
            handle.snapshot_counts.append(count)
        return count

    def _locked(handle: SessionHandle) -> threading.Lock:
        if not handle.lock.acquire(blocking=False):
            raise ApiError(409, "busy", "another request is mutating this session")
        return handle.lock

    def _mutation_response(handle: SessionHandle, outcome: StepOutcome, since: int | None, before: int) -> dict:
        session = handle.session
        start = before if since is None else since
        if (
            outcome.new_state is SessionState.ERRORED
            and session.error_reason != "length cap"
        ):
            raise ApiError(
                502,
                "backend_failure",
                session.error_reason or "backend failure",
                {"events": [e.to_dict() for e in session.event_log[-5:]]},
            )
        return {
            "outcome": _outcome_view(outcome),
            "new_lines": [line_to_dict(l) for l in session.lines[start:]],
            "total_lines": len(session.lines),
            "session": _session_view(handle),
        }

    # -- stories ------------------------------------------------------------

    @app.post("/stories", status_code=201)
    def create_story(document: dict = Body(...)):
        normalized, warnings = _parse_story(document)
        story_id = uuid.uuid4().hex[:12]
        store.save_story(story_id, normalized)
        return {"id": story_id, "story": normalized, "warnings": warnings}

    @app.get("/stories")
    def list_stories():
        stories = []
        for story_id in store.list_story_ids():
            document = store.load_story(story_id)
            stories.append(
                {
                    "id": story_id,
                    "title": document.get("title", ""),
                    "characters": len(document.get("characters", [])),
                    "triggers": len(document.get("triggers", [])),
                }
            )
        return {"stories": stories}

    @app.get("/stories/{story_id}")
    def get_story(story_id: str):
        document = _load_story(story_id)
        _, warnings = _parse_story(document)
        return {"id": story_id, "story": document, "warnings": warnings}

    @app.put("/stories/{story_id}")
    def update_story(story_id: str, document: dict = Body(...)):
        _load_story(story_id)
        normalized, warnings = _parse_story(document)
        store.save_story(story_id, normalized)
        return {"id": story_id, "story": normalized, "warnings": warnings}

    # -- sessions -------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        document = _load_story(body.story_id)
        definition = parse_story_definition(document)
        try:
            mode = SessionMode(body.mode)
        except ValueError:
            raise ApiError(400, "validation_error", f"unknown mode {body.mode!r}") from None
        backend_spec = body.backend or {"kind": "live"}
        try:
            backend = backend_from_spec(backend_spec)
        except ValueError as exc:
            raise ApiError(400, "validation_error", f"bad backend spec: {exc}") from None
        session = engine.create_session(
            definition,
            backend,
            mode=mode,
            line_cap=body.line_cap,
            seed=body.seed,
        )
        handle = SessionHandle(session=session, story_id=body.story_id)
        with registry_lock:
            handles[session.id] = handle
        _take_snapshot(handle)
        _persist(handle)
        return _session_view(handle)

    @app.get("/sessions")
    def list_sessions():
        with registry_lock:
            known = set(handles)
        ids = sorted(known | set(store.list_session_ids()))
        return {"sessions": [_session_view(_get_handle(session_id)) for session_id in ids]}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_view(_get_handle(session_id))

    @app.get("/sessions/{session_id}/lines")
    def get_lines(session_id: str, since: int = 0):
        handle = _get_handle(session_id)
        lines = handle.session.lines
        return {
            "lines": [line_to_dict(l) for l in lines[since:]],
            "since": since,
            "total_lines": len(lines),
        }

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str, body: StepRequest | None = None):
        handle = _get_handle(session_id)
        lock = _locked(handle)
        try:
            if handle.paused:
                raise ApiError(409, "paused", "session is paused")
            before = len(handle.session.lines)
            try:
                outcome = engine.step(handle.session)
            except SessionStateError as exc:
                raise ApiError(409, "wrong_state", str(exc)) from None
            _take_snapshot(handle)
            _persist(handle)
            return _mutation_response(handle, outcome, body.since if body else None, before)
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/player-line")
    def player_line(session_id: str, body: PlayerLineRequest):
        handle = _get_handle(session_id)
        lock = _locked(handle)
        try:
            before = len(handle.session.lines)
            try:
                outcome = engine.submit_player_line(handle.session, body.text)
            except SessionStateError as exc:
                raise ApiError(409, "wrong_state", str(exc)) from None
            except PlayerInputError as exc:
                raise ApiError(400, "validation_error", str(exc)) from None
            _take_snapshot(handle)
            _persist(handle)
            return _mutation_response(handle, outcome, body.since, before)
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/pause")
    def pause_session(session_id: str):
        handle = _get_handle(session_id)
        handle.paused = True
        _persist(handle)
        return _session_view(handle)

    @app.post("/sessions/{session_id}/resume")
    def resume_session(session_id: str):
        handle = _get_handle(session_id)
        handle.paused = False
        _persist(handle)
        return _session_view(handle)

    # -- snapshots ---------------------------------------------------------------

    @app.get("/sessions/{session_id}/snapshots")
    def list_snapshots(session_id: str):
        handle = _get_handle(session_id)
        return {
            "snapshots": [
                {"line_count": count} for count in sorted(handle.snapshot_counts)
            ]
        }

    @app.post("/sessions/{session_id}/snapshots", status_code=201)
    def create_snapshot(session_id: str):
        handle = _get_handle(session_id)
        lock = _locked(handle)
        try:
            count = _take_snapshot(handle)
            return {"line_count": count}
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/reset")
    def reset_session(session_id: str, body: ResetRequest):
        handle = _get_handle(session_id)
        lock = _locked(handle)
        try:
            if body.line_count not in handle.snapshot_counts:
                raise ApiError(
                    404, "not_found", f"no snapshot at line count {body.line_count}"
                )
            state = store.load_snapshot(session_id, body.line_count)
            snap = Snapshot(
                session_id=session_id, line_count=body.line_count, state=state
            )
            engine.reset_to(handle.session, snap)
            # histories diverge after a reset; later snapshots are stale
            store.delete_snapshots_above(session_id, body.line_count)
            handle.snapshot_counts = [
                c for c in handle.snapshot_counts if c <= body.line_count
            ]
            _persist(handle)
            return _session_view(handle)
        finally:
            lock.release()

    # -- annotations ---------------------------------------------------------

    @app.post("/sessions/{session_id}/annotations", status_code=201)
    def annotate(session_id: str, body: AnnotationRequest):
        handle = _get_handle(session_id)
        session = handle.session
        if body.kind == "trigger_accuracy":
            if body.correct is None:
                raise ApiError(400, "validation_error", "trigger_accuracy needs 'correct'")
            if not (0 <= body.target_index < len(session.firing_log)):
                raise ApiError(
                    400, "validation_error", f"no firing event {body.target_index}"
                )
            for existing in handle.annotations:
                if (
                    existing["kind"] == "trigger_accuracy"
                    and existing["target_index"] == body.target_index
                    and existing.get("author") == body.author
                ):
                    raise ApiError(
                        400,
                        "validation_error",
                        "this author already annotated this firing event",
                    )
            record = {
                "session_id": session_id,
                "kind": body.kind,
                "target_index": body.target_index,
                "correct": body.correct,
                "note": body.note,
                "author": body.author,
            }
        elif body.kind == "dialogue_quality":
            if body.good is None:
                raise ApiError(400, "validation_error", "dialogue_quality needs 'good'")
            if not (0 <= body.target_index < len(session.lines)) or not isinstance(
                session.lines[body.target_index], Dialogue
            ):
                raise ApiError(
                    400,
                    "validation_error",
                    f"line {body.target_index} is not a dialogue line",
                )
            record = {
                "session_id": session_id,
                "kind": body.kind,
                "target_index": body.target_index,
                "good": body.good,
                "note": body.note,
                "author": body.author,
            }
        else:
            raise ApiError(400, "validation_error", f"unknown annotation kind {body.kind!r}")
        handle.annotations.append(record)
        handle.annotation_seq += 1
        store.save_annotation(session_id, handle.annotation_seq, record)
        _persist(handle)
        return record

    @app.get("/sessions/{session_id}/annotations")
    def list_annotations(session_id: str):
        handle = _get_handle(session_id)
        return {"annotations": handle.annotations}

    # -- exports -----------------------------------------------------------------

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        handle = _get_handle(session_id)
        return build_export(handle.session, handle.annotations)

    @app.get("/sessions/{session_id}/export.txt")
    def export_session_text(session_id: str):
        handle = _get_handle(session_id)
        export = build_export(handle.session, handle.annotations)
        return PlainTextResponse(render_export_text(export))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
