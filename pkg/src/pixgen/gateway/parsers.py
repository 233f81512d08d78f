"""Strict parsers for staged LLM output.

LLMs wrap answers in prose, fences and stray whitespace; these parsers
extract the structured part and refuse everything else with typed errors,
so orchestration can retry a stage instead of propagating garbage. Every
parser either returns a value or raises a ParseError subclass; no parser
returns a partially-filled placeholder.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import (
    AmbiguousCodeBlocksError,
    EmptyOutputError,
    MalformedPayloadError,
    NoCodeBlockError,
    NoJsonObjectError,
    TopicCountMismatchError,
    ZeroValidTripletsError,
)

__all__ = [
    "QaTriplet",
    "extract_code_block",
    "format_qa_triplets",
    "parse_json_payload",
    "parse_qa_triplets",
    "parse_topics",
]


def parse_topics(text: str, expected: int | None = None) -> list[str]:
    """Parse a pipe-separated topic list.

    Topics are split on "|", trimmed, and empty fields dropped. With
    ``expected`` set, a count mismatch raises TopicCountMismatchError
    carrying the parsed list so the caller can decide whether a short list
    is still usable.
    """
    topics = [field.strip() for field in text.split("|")]
    topics = [topic for topic in topics if topic]
    if not topics:
        raise EmptyOutputError("no topics found in response")
    if expected is not None and len(topics) != expected:
        raise TopicCountMismatchError(parsed=topics, expected=expected)
    return topics


def _reject_constant(name: str):
    raise ValueError(f"non-finite JSON constant {name} rejected")


_JSON_DECODER = json.JSONDecoder(parse_constant=_reject_constant)


def parse_json_payload(text: str) -> dict:
    """Extract the first JSON object embedded in free-form text.

    The text is scanned left to right; at each "{" a full JSON parse is
    attempted, so surrounding prose, markdown fences and brace characters
    inside strings are all handled by the grammar rather than heuristics.
    NaN and Infinity are rejected: downstream serialization requires strict
    JSON. Raises NoJsonObjectError when the text has no "{" at all and
    MalformedPayloadError when none of the candidates parses to an object.
    """
    start = text.find("{")
    if start < 0:
        raise NoJsonObjectError("response contains no JSON object")
    pos = start
    while pos >= 0:
        try:
            value, _ = _JSON_DECODER.raw_decode(text, pos)
        except ValueError:
            value = None
        if isinstance(value, dict):
            return value
        pos = text.find("{", pos + 1)
    raise MalformedPayloadError("no brace candidate parses as a JSON object")


_FENCE_RE = re.compile(r"```[ \t]*([^\n`]*?)[ \t]*\r?\n(.*?)```", re.DOTALL)


def extract_code_block(text: str, expected_tag: str) -> tuple[str, str | None]:
    """Extract fenced source code, preferring the expected language tag.

    Returns (code, warning). The first fence whose tag equals
    ``expected_tag`` case-insensitively wins with no warning. If no fence
    matches but the response has exactly one fence, that block is accepted
    with a warning describing the tag mismatch: models frequently label
    e.g. LaTeX blocks as ``tex``. Zero fences raises NoCodeBlockError;
    several non-matching fences are ambiguous and raise
    AmbiguousCodeBlocksError.
    """
    blocks = [(tag.strip(), body) for tag, body in _FENCE_RE.findall(text)]
    if not blocks:
        raise NoCodeBlockError("response contains no fenced code block")
    want = expected_tag.strip().lower()
    for tag, body in blocks:
        if tag.lower() == want:
            return _strip_trailing_newline(body), None
    if len(blocks) == 1:
        tag, body = blocks[0]
        warning = f"expected ```{expected_tag} fence, accepted ```{tag or '(untagged)'}"
        return _strip_trailing_newline(body), warning
    raise AmbiguousCodeBlocksError(
        f"{len(blocks)} fenced blocks, none tagged {expected_tag!r}"
    )


def _strip_trailing_newline(body: str) -> str:
    return body[:-1] if body.endswith("\n") else body


@dataclass(frozen=True)
class QaTriplet:
    """One generated question with its reasoning and concise answer."""

    question: str
    explanation: str
    answer: str


_RECORD_SEP_RE = re.compile(r"\n\s*\n")


def parse_qa_triplets(text: str) -> tuple[list[QaTriplet], int]:
    """Parse blank-line-separated "question | explanation | answer" records.

    A record must contain exactly two "|" separators and three non-empty
    fields after trimming; anything else is dropped and counted rather than
    guessed at. Returns (triplets, dropped). All records malformed raises
    ZeroValidTripletsError carrying the dropped count.
    """
    triplets: list[QaTriplet] = []
    dropped = 0
    stripped = text.strip()
    records = _RECORD_SEP_RE.split(stripped) if stripped else []
    for record in records:
        record = record.strip()
        if not record:
            continue
        fields = [field.strip() for field in record.split("|")]
        if len(fields) != 3 or not all(fields):
            dropped += 1
            continue
        triplets.append(
            QaTriplet(question=fields[0], explanation=fields[1], answer=fields[2])
        )
    if not triplets:
        raise ZeroValidTripletsError(dropped)
    return triplets, dropped


def format_qa_triplets(triplets: list[QaTriplet]) -> str:
    """Inverse of parse_qa_triplets for fixtures and round-trip tests."""
    return "\n\n".join(
        f"{t.question} | {t.explanation} | {t.answer}" for t in triplets
    )
