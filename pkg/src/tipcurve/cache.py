"""Content-addressed results cache.

A run's artifacts are stored under a SHA-256 key of the canonicalized
configuration subsection that determines the result (sorted-key JSON,
default float repr).  Entries are written atomically (temp file + rename)
and a hit reproduces the prior artifacts byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Dict, Optional

__all__ = ["canonical_json", "cache_key", "ResultsCache"]

CACHE_FORMAT = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def cache_key(config: dict) -> str:
    payload = canonical_json({"format": CACHE_FORMAT, "config": config})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResultsCache:
    def __init__(self, directory):
        self.directory = Path(directory)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[Dict[str, str]]:
        path = self._path(key)
        if not path.is_file():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        artifacts = entry.get("artifacts")
        if not isinstance(artifacts, dict):
            return None
        return artifacts

    def put(self, key: str, artifacts: Dict[str, str]) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        payload = json.dumps({"key": key, "artifacts": artifacts}, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(payload)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
