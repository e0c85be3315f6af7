"""File-backed persistence: one JSON document per entity, written atomically.

Layout under the data root:
    stories/<id>.json
    sessions/<id>.json
    annotations/<session_id>/<seq>.json

Writes go to a temp file in the same directory followed by an atomic
rename, so readers never see partial documents. A file that fails to parse
is quarantined (renamed to ``*.corrupt``) instead of wedging every listing.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any


class StorageError(Exception):
    pass


class NotFoundError(StorageError):
    pass


class CorruptEntityError(StorageError):
    def __init__(self, path: Path, quarantined: Path, cause: Exception):
        self.path = path
        self.quarantined = quarantined
        super().__init__(f"corrupt entity {path} (moved to {quarantined}): {cause}")


def atomic_write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    os.replace(tmp, path)


class FileStore:
    def __init__(self, root: "str | Path"):
        self.root = Path(root)
        self.stories_dir = self.root / "stories"
        self.sessions_dir = self.root / "sessions"
        self.annotations_dir = self.root / "annotations"
        for directory in (self.stories_dir, self.sessions_dir, self.annotations_dir):
            directory.mkdir(parents=True, exist_ok=True)

    def _read(self, path: Path) -> Any:
        if not path.exists():
            raise NotFoundError(str(path))
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            quarantined = path.with_name(path.name + ".corrupt")
            os.replace(path, quarantined)
            raise CorruptEntityError(path, quarantined, exc) from exc

    # -- stories --------------------------------------------------------------

    def save_story(self, story_id: str, document: dict) -> None:
        atomic_write_json(self.stories_dir / f"{story_id}.json", document)

    def load_story(self, story_id: str) -> dict:
        return self._read(self.stories_dir / f"{story_id}.json")

    def story_exists(self, story_id: str) -> bool:
        return (self.stories_dir / f"{story_id}.json").exists()

    def list_story_ids(self) -> list[str]:
        return sorted(p.stem for p in self.stories_dir.glob("*.json"))

    # -- sessions -------------------------------------------------------------

    def save_session(self, session_id: str, payload: dict) -> None:
        atomic_write_json(self.sessions_dir / f"{session_id}.json", payload)

    def load_session(self, session_id: str) -> dict:
        return self._read(self.sessions_dir / f"{session_id}.json")

    def session_exists(self, session_id: str) -> bool:
        return (self.sessions_dir / f"{session_id}.json").exists()

    def list_session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.sessions_dir.glob("*.json"))

    # -- snapshots --------------------------------------------------------------
    # Snapshots are immutable once taken, so each lives in its own file and is
    # written exactly once; per-step persistence cost stays linear.

    def _snapshot_dir(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.snapshots"

    def save_snapshot(self, session_id: str, line_count: int, state: dict) -> None:
        atomic_write_json(self._snapshot_dir(session_id) / f"{line_count:06d}.json", state)

    def load_snapshot(self, session_id: str, line_count: int) -> dict:
        return self._read(self._snapshot_dir(session_id) / f"{line_count:06d}.json")

    def list_snapshot_counts(self, session_id: str) -> list[int]:
        directory = self._snapshot_dir(session_id)
        if not directory.exists():
            return []
        return sorted(int(p.stem) for p in directory.glob("*.json"))

    def delete_snapshots_above(self, session_id: str, line_count: int) -> None:
        for count in self.list_snapshot_counts(session_id):
            if count > line_count:
                (self._snapshot_dir(session_id) / f"{count:06d}.json").unlink()

    # -- annotations ------------------------------------------------------------

    def save_annotation(self, session_id: str, seq: int, payload: dict) -> None:
        atomic_write_json(self.annotations_dir / session_id / f"{seq:04d}.json", payload)

    def list_annotations(self, session_id: str) -> list[dict]:
        directory = self.annotations_dir / session_id
        if not directory.exists():
            return []
        return [self._read(path) for path in sorted(directory.glob("*.json"))]
