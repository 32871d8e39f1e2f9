"""File-backed document store with four collections: ndb, hdb, vdb, harm_objects.

Layout is one canonical-JSON file per key under <base>/<collection>/<key>.json.
Writes go through a temp-file-then-rename so a crash mid-put can never leave a
truncated document visible. transactional_update serializes read-modify-write
cycles per key via a lock file, so concurrent updaters never lose writes.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from pathlib import Path
from typing import Any, Callable, Optional

from filelock import FileLock, Timeout

from .errors import StorageError, UsageError
from .model import canonical_json

COLLECTIONS = ("ndb", "hdb", "vdb", "harm_objects")

# Network database key under which the reachability graph lives.
RG_KEY = "rg"

_KEY_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]{0,199}$")

_LOCK_TIMEOUT_S = 30.0


class Store:
    """Document store rooted at a directory, one subdirectory per collection."""

    def __init__(self, base_path: str | os.PathLike):
        self.base_path = Path(base_path)
        try:
            for name in COLLECTIONS:
                (self.base_path / name).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot initialize store at {self.base_path}: {exc}") from exc
        self._local_locks: dict[tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- path & key handling -------------------------------------------------

    def _collection_dir(self, collection: str) -> Path:
        if collection not in COLLECTIONS:
            raise UsageError(f"unknown collection {collection!r} (expected one of {', '.join(COLLECTIONS)})")
        return self.base_path / collection

    @staticmethod
    def _check_key(key: str) -> str:
        if not _KEY_RE.match(key):
            raise UsageError(f"key {key!r} is not a sanitized id")
        return key

    def _doc_path(self, collection: str, key: str) -> Path:
        return self._collection_dir(collection) / f"{self._check_key(key)}.json"

    # -- basic operations ----------------------------------------------------

    def put(self, collection: str, key: str, document: dict[str, Any]) -> None:
        """Atomically write a document; readers see the old or new version, never a mix."""
        path = self._doc_path(collection, key)
        rendered = canonical_json(document) + "\n"
        try:
            fd, tmp_name = tempfile.mkstemp(prefix=f".{key}.", suffix=".tmp", dir=path.parent)
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(rendered)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp_name, path)
            except BaseException:
                try:
                    os.unlink(tmp_name)
                except OSError:
                    pass
                raise
        except OSError as exc:
            raise StorageError(f"write failed for {path}: {exc}") from exc

    def get(self, collection: str, key: str) -> Optional[dict[str, Any]]:
        """Return the stored document, or None when the key is absent."""
        path = self._doc_path(collection, key)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise StorageError(f"read failed for {path}: {exc}") from exc
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise StorageError(f"corrupt document at {path}: {exc}") from exc

    def list(self, collection: str) -> list[str]:
        """Sorted keys present in a collection."""
        directory = self._collection_dir(collection)
        try:
            return sorted(p.stem for p in directory.glob("*.json"))
        except OSError as exc:
            raise StorageError(f"cannot list {directory}: {exc}") from exc

    def delete(self, collection: str, key: str) -> None:
        """Remove a document; deleting an absent key is a no-op."""
        path = self._doc_path(collection, key)
        try:
            path.unlink(missing_ok=True)
        except OSError as exc:
            raise StorageError(f"delete failed for {path}: {exc}") from exc

    # -- transactional update ------------------------------------------------

    def _local_lock(self, collection: str, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._local_locks.setdefault((collection, key), threading.Lock())

    def transactional_update(
        self,
        collection: str,
        key: str,
        update: Callable[[dict[str, Any]], dict[str, Any]],
    ) -> dict[str, Any]:
        """Apply a pure update function under a per-key lock.

        The function receives the current document ({} when absent) and
        returns the new one. Returning an equal document skips the rewrite
        entirely, leaving the file untouched.
        """
        path = self._doc_path(collection, key)
        lock_path = path.with_suffix(".lock")
        try:
            with self._local_lock(collection, key):
                with FileLock(str(lock_path), timeout=_LOCK_TIMEOUT_S):
                    current = self.get(collection, key)
                    base = current if current is not None else {}
                    new_doc = update(dict(base))
                    if current is not None and new_doc == current:
                        return new_doc
                    self.put(collection, key, new_doc)
                    return new_doc
        except Timeout as exc:
            raise StorageError(f"lock acquisition timed out for {lock_path}") from exc
