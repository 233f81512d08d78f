"""Content-addressed cache for LLM responses.

The cache key folds in everything that changes a completion: provider,
model, prompt text, sampling knobs, seed and stage tag. Entries are plain
UTF-8 files named by key digest, written atomically (temp file then rename)
so a crashed writer never leaves a truncated entry and concurrent writers
of the same key are idempotent.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from pathlib import Path

_FIELD_SEP = "\x1f"


def cache_key(
    provider_id: str,
    model_id: str,
    prompt: str,
    temperature: float,
    top_p: float,
    sampling_seed: int,
    stage: str,
) -> str:
    """Hex digest identifying one completion request.

    Floats are folded in via repr after float() coercion so 0.7 and the
    float 0.70 produce the same key while 0.7 and 0.75 never collide.
    """
    material = _FIELD_SEP.join(
        [
            provider_id,
            model_id,
            prompt,
            repr(float(temperature)),
            repr(float(top_p)),
            str(int(sampling_seed)),
            stage,
        ]
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class ResponseCache:
    """Directory-backed response store with hit/miss counters."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0

    def _path(self, key: str) -> Path:
        return self.root / key

    def get(self, key: str) -> str | None:
        try:
            text = self._path(key).read_text(encoding="utf-8")
        except FileNotFoundError:
            with self._lock:
                self._misses += 1
            return None
        with self._lock:
            self._hits += 1
        return text

    def put(self, key: str, response: str) -> None:
        fd, tmp_name = tempfile.mkstemp(dir=self.root, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(response)
            os.replace(tmp_name, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise

    def counters(self) -> dict[str, int]:
        with self._lock:
            return {"hits": self._hits, "misses": self._misses}

    def hit_rate(self) -> float:
        with self._lock:
            total = self._hits + self._misses
            return self._hits / total if total else 0.0
