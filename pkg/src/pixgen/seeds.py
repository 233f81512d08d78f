"""Deterministic seed and id derivation.

Every random-looking choice in the pipeline is a pure function of the query
seed, computed by hashing a namespaced string with SHA-256 and taking the
leading bytes. This keeps batches reproducible across runs, platforms and
worker counts, and makes each derivation independently testable.

Derivation formulas (stable; changing any of them is a format break):

    job_seed(q, i)          = u64_be(sha256(b"pixgen:job:"    + f"{q}:{i}"))
    stage_seed(j, s, a)     = u63_be(sha256(b"pixgen:stage:"  + f"{j}:{s}:{a}"))
    pick_index(j, label, n) = u64_be(sha256(b"pixgen:pick:"   + f"{j}:{label}")) % n
    record_id(q, i, p)      = hex16 (sha256(b"pixgen:record:" + f"{q}:{i}:{p}"))

stage_seed is limited to 63 bits so it stays non-negative in signed-int APIs.
"""

from __future__ import annotations

import hashlib


def _digest(namespace: str, payload: str) -> bytes:
    return hashlib.sha256(f"pixgen:{namespace}:{payload}".encode("utf-8")).digest()


def job_seed(query_seed: int, job_index: int) -> int:
    """64-bit per-job seed derived from the query seed and the job index."""
    return int.from_bytes(_digest("job", f"{query_seed}:{job_index}")[:8], "big")


def stage_seed(job_seed_: int, stage: str, attempt: int) -> int:
    """63-bit sampling seed for one (stage, attempt) of a job.

    Each retry gets a new seed, so a retried stage resamples the LLM instead
    of replaying the cached response.
    """
    raw = int.from_bytes(_digest("stage", f"{job_seed_}:{stage}:{attempt}")[:8], "big")
    return raw >> 1


def pick_index(job_seed_: int, label: str, n: int) -> int:
    """Uniform index in [0, n) for in-job choices (persona, topic pick)."""
    if n < 1:
        raise ValueError("pick_index needs n >= 1")
    return int.from_bytes(_digest("pick", f"{job_seed_}:{label}")[:8], "big") % n


def record_id(query_seed: int, job_index: int, pipeline_id: str) -> str:
    """16-hex-char record id, unique per (query seed, job index, pipeline)."""
    return _digest("record", f"{query_seed}:{job_index}:{pipeline_id}").hex()[:16]


def derived_record_id(source_id: str, purpose: str) -> str:
    """Id for a record derived from an existing one (e.g. pointing edits)."""
    return _digest("derived", f"{source_id}:{purpose}").hex()[:16]


def derived_seed(source_id: str, purpose: str) -> int:
    """64-bit seed for work derived from an existing record."""
    return int.from_bytes(_digest("derived-seed", f"{source_id}:{purpose}")[:8], "big")


def text_digest(text: str, length: int = 16) -> str:
    """Stable hex digest of a text, used for prompt and code provenance."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]
