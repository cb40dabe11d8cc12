"""Content-addressed store of judge-model feature records."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path

from .parsing import LlmFeatureRecord


def cache_key(template_id: str, prompt: str, model_id: str) -> str:
    payload = json.dumps([template_id, prompt, model_id], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class FeatureCache:
    """In-memory map backed by a JSONL file of ``{"key": ..., "record": ...}`` lines.

    Writes are serialized by a lock; :meth:`flush` rewrites the whole file via
    a temporary file and ``os.replace`` so readers never see a partial line.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._records: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._dirty = False
        if self.path is not None and self.path.exists():
            self._records = _read_jsonl(self.path)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: str) -> bool:
        return key in self._records

    def get(self, key: str) -> LlmFeatureRecord | None:
        raw = self._records.get(key)
        return None if raw is None else LlmFeatureRecord.from_dict(raw)

    def put(self, key: str, record: LlmFeatureRecord) -> None:
        with self._lock:
            self._records[key] = record.to_dict()
            self._dirty = True

    def keys(self) -> list[str]:
        return sorted(self._records)

    def dumps(self) -> str:
        with self._lock:
            items = sorted(self._records.items())
        return "".join(
            json.dumps({"key": k, "record": v}, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"
            for k, v in items
        )

    def flush(self) -> None:
        if self.path is None or not self._dirty:
            return
        with self._lock:
            self._dirty = False
        _atomic_write(self.path, self.dumps())


def _read_jsonl(path: Path) -> dict[str, dict]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out[row["key"]] = row["record"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad cache line") from exc
    return out


def export_cache(cache: FeatureCache, path: str | Path) -> int:
    _atomic_write(Path(path), cache.dumps())
    return len(cache)


def import_cache(path: str | Path, into: FeatureCache | None = None) -> FeatureCache:
    records = _read_jsonl(Path(path))
    cache = into if into is not None else FeatureCache()
    for key, raw in records.items():
        cache.put(key, LlmFeatureRecord.from_dict(raw))
    return cache
