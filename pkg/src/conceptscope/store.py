"""Content-addressed JSON artifact store.

Immutable artifacts (datasets, pools, proposals, reports) are stored under a
digest of their canonical JSON and never rewritten; jobs and sessions are
mutable records keyed by opaque ids. Everything lives on disk, so a process
restart only needs a directory scan.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import uuid
from pathlib import Path

from .errors import StorageError

IMMUTABLE_KINDS = ("datasets", "pools", "proposals", "reports", "runs")
MUTABLE_KINDS = ("jobs", "sessions")


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def content_id(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()[:16]


class ArtifactStore:
    def __init__(self, root):
        self.root = Path(root)
        for kind in IMMUTABLE_KINDS + MUTABLE_KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, kind: str, art_id: str) -> Path:
        if kind not in IMMUTABLE_KINDS + MUTABLE_KINDS:
            raise StorageError(f"unknown artifact kind {kind!r}")
        if not art_id.replace("-", "").isalnum():
            raise StorageError(f"malformed artifact id {art_id!r}")
        return self.root / kind / f"{art_id}.json"

    def _write(self, path: Path, doc) -> None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def put(self, kind: str, doc) -> str:
        """Store an immutable artifact; returns its content id (idempotent)."""
        if kind not in IMMUTABLE_KINDS:
            raise StorageError(f"{kind} artifacts are not content-addressed")
        art_id = content_id(doc)
        path = self._path(kind, art_id)
        if not path.exists():
            self._write(path, doc)
        return art_id

    def put_mutable(self, kind: str, doc, art_id: str | None = None) -> str:
        if kind not in MUTABLE_KINDS:
            raise StorageError(f"{kind} artifacts are immutable")
        art_id = art_id or uuid.uuid4().hex[:16]
        with self._lock:
            self._write(self._path(kind, art_id), doc)
        return art_id

    def get(self, kind: str, art_id: str):
        path = self._path(kind, art_id)
        if not path.exists():
            raise KeyError(f"{kind}/{art_id} not found")
        with open(path) as fh:
            return json.load(fh)

    def exists(self, kind: str, art_id: str) -> bool:
        return self._path(kind, art_id).exists()

    def list_ids(self, kind: str) -> list[str]:
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))
