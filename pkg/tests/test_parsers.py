"""Model-output parsing: exact fixture strings, forced errors, and totality."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pixgen.errors import (
    AmbiguousCodeBlocksError,
    EmptyOutputError,
    MalformedPayloadError,
    NoCodeBlockError,
    NoJsonObjectError,
    ParseError,
    TopicCountMismatchError,
    ZeroValidTripletsError,
)
from pixgen.gateway.parsers import (
    QaTriplet,
    extract_code_block,
    format_qa_triplets,
    parse_json_payload,
    parse_qa_triplets,
    parse_topics,
)

REVENUE_LINE = (
    "what is the total revenue? | The total revenue is the sum of all revenue "
    "sources in the document, which is $2000 + $3000 + $5000 = $10000. | $10000"
)


def test_parse_topics_three_way_split():
    assert parse_topics("topic1 | topic2 | topic3", expected=3) == [
        "topic1",
        "topic2",
        "topic3",
    ]


def test_parse_topics_singleton():
    assert parse_topics("a", expected=1) == ["a"]


def test_parse_topics_count_mismatch_carries_both_counts():
    with pytest.raises(TopicCountMismatchError) as exc_info:
        parse_topics("a | b", expected=3)
    assert exc_info.value.parsed == ["a", "b"]
    assert exc_info.value.expected == 3


def test_parse_topics_drops_empty_pieces_and_rejects_empty_output():
    assert parse_topics("a || b |", expected=2) == ["a", "b"]
    with pytest.raises(EmptyOutputError):
        parse_topics(" | | ", expected=2)


def test_parse_json_payload_fenced_object():
    assert parse_json_payload('```json\n{"name":"Acme"}\n```') == {"name": "Acme"}


def test_parse_json_payload_prose_wrapped_object():
    assert parse_json_payload('Here you go: {"a":1}') == {"a": 1}


def test_parse_json_payload_no_braces():
    with pytest.raises(NoJsonObjectError):
        parse_json_payload("no braces here")


def test_parse_json_payload_malformed():
    with pytest.raises(MalformedPayloadError):
        parse_json_payload('{"a": }')
    with pytest.raises(MalformedPayloadError):
        parse_json_payload("{'single': 'quotes'}")


def test_parse_json_payload_requires_object_not_array():
    assert parse_json_payload('noise [1,2] more {"k": [1,2]} tail') == {"k": [1, 2]}


def test_extract_code_block_matching_tag():
    code, warning = extract_code_block("```html\n<html></html>\n```", "html")
    assert code == "<html></html>"
    assert warning is None


def test_extract_code_block_tag_is_case_insensitive():
    code, warning = extract_code_block("```HTML\n<p>x</p>\n```", "html")
    assert code == "<p>x</p>"
    assert warning is None


def test_extract_code_block_zero_fences():
    with pytest.raises(NoCodeBlockError):
        extract_code_block("no fences at all", "html")


def test_extract_code_block_single_mismatched_tag_with_warning():
    code, warning = extract_code_block("```python\nprint(1)\n```", "html")
    assert code == "print(1)"
    assert warning is not None


def test_extract_code_block_two_mismatched_blocks_ambiguous():
    text = "```python\na\n```\n\n```js\nb\n```"
    with pytest.raises(AmbiguousCodeBlocksError):
        extract_code_block(text, "html")


def test_extract_code_block_prefers_matching_tag_among_many():
    text = "```python\na\n```\n\n```html\n<b>\n```"
    code, warning = extract_code_block(text, "html")
    assert code == "<b>"
    assert warning is None


def test_revenue_example_line_parses_to_one_triplet():
    triplets, dropped = parse_qa_triplets(REVENUE_LINE)
    assert dropped == 0
    assert triplets == [
        QaTriplet(
            question="what is the total revenue?",
            explanation=(
                "The total revenue is the sum of all revenue sources in the "
                "document, which is $2000 + $3000 + $5000 = $10000."
            ),
            answer="$10000",
        )
    ]


def test_blank_line_separates_records():
    text = "q1 | e1 | a1\n\nq2 | e2 | a2"
    triplets, dropped = parse_qa_triplets(text)
    assert [t.question for t in triplets] == ["q1", "q2"]
    assert dropped == 0


def test_malformed_records_are_dropped_and_counted():
    text = "q1 | e1 | a1\n\nbad record without pipes\n\nq2 | e2 | a2"
    triplets, dropped = parse_qa_triplets(text)
    assert len(triplets) == 2
    assert dropped == 1


def test_all_malformed_raises_zero_valid():
    with pytest.raises(ZeroValidTripletsError) as exc_info:
        parse_qa_triplets("only one pipe | here")
    assert exc_info.value.dropped == 1


def test_extra_pipe_inside_answer_drops_that_record():
    # "|" inside a field is unrecoverable in this format; the record is
    # dropped, not mangled.
    text = "q | e | a | extra\n\nq2 | e2 | a2"
    triplets, dropped = parse_qa_triplets(text)
    assert len(triplets) == 1
    assert dropped == 1


_FIELD = st.text(
    alphabet=st.characters(blacklist_characters="|\n\r", blacklist_categories=("Cs",)),
    min_size=1,
).filter(lambda s: s.strip())


@given(st.lists(st.tuples(_FIELD, _FIELD, _FIELD), min_size=1, max_size=8))
def test_triplet_format_round_trip(raw):
    triplets = [
        QaTriplet(q.strip(), e.strip(), a.strip()) for q, e, a in raw
    ]
    reparsed, dropped = parse_qa_triplets(format_qa_triplets(triplets))
    assert dropped == 0
    assert reparsed == triplets


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=400))
def test_parsers_never_crash_on_random_bytes(data):
    text = data.decode("latin-1")
    for call in (
        lambda: parse_topics(text, expected=10),
        lambda: parse_json_payload(text),
        lambda: extract_code_block(text, "html"),
        lambda: parse_qa_triplets(text),
    ):
        try:
            call()
        except ParseError:
            pass
