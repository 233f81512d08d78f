"""Instruction generation and training-row formatting.

Questions are generated from the generating code and data as context, never
from the rendered pixels: the code fully describes the image, and a text
model can read code. Each triplet can then be emitted as a reasoning-style
row, a short-answer row, or both.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .gateway.client import LlmGateway
from .gateway.parsers import QaTriplet, parse_qa_triplets
from .gateway.templates import PromptTemplate, render_template
from .seeds import text_digest

COT_PROMPT_SUFFIX = " Provide reasoning steps and then give the short answer."
SHORT_PROMPT_SUFFIX = " Answer with as few words as possible."
ANSWER_PREFIX = "Answer: "


class Style(str, Enum):
    """Training-row formatting style."""

    COT = "cot"
    SHORT_ANSWER = "short_answer"


@dataclass(frozen=True)
class InstructionSet:
    """Parsed triplets tied to the code they were generated from."""

    triplets: tuple[QaTriplet, ...]
    source_code_hash: str
    dropped: int


def generate_instructions(
    gateway: LlmGateway,
    template: PromptTemplate,
    *,
    code: str,
    data_json: str,
    sampling_seed: int,
) -> tuple[InstructionSet, str, bool]:
    """Run the instruction stage for one rendered artifact.

    Returns (instruction set, rendered prompt, cache-hit flag); the prompt
    is returned so its hash can go into record provenance.
    """
    prompt = render_template(template, {"CODE": code, "DATA": data_json})
    response = gateway.complete("instruction", prompt, sampling_seed)
    triplets, dropped = parse_qa_triplets(response.text)
    instruction_set = InstructionSet(
        triplets=tuple(triplets),
        source_code_hash=text_digest(code),
        dropped=dropped,
    )
    return instruction_set, prompt, response.cached


def format_training_example(triplet: QaTriplet, style: Style) -> tuple[str, str]:
    """Format one triplet as a (prompt, target) training row.

    The two styles differ in a fixed suffix appended to the question and in
    whether the target carries the reasoning. These strings are load-bearing
    for downstream training and must never drift.
    """
    if style is Style.COT:
        prompt = triplet.question + COT_PROMPT_SUFFIX
        target = triplet.explanation + "\n" + ANSWER_PREFIX + triplet.answer
    elif style is Style.SHORT_ANSWER:
        prompt = triplet.question + SHORT_PROMPT_SUFFIX
        target = triplet.answer
    else:
        raise ValueError(f"unknown style {style!r}")
    return prompt, target


def emit_rows(
    triplets: list[QaTriplet] | tuple[QaTriplet, ...],
    styles: tuple[Style, ...] = (Style.COT, Style.SHORT_ANSWER),
) -> list[dict[str, str]]:
    """Expand triplets into training rows, one per (triplet, style)."""
    rows = []
    for triplet in triplets:
        for style in styles:
            prompt, target = format_training_example(triplet, style)
            rows.append({"style": style.value, "prompt": prompt, "target": target})
    return rows
