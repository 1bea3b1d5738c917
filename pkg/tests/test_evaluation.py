import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphner.evaluation import (
    EntitySpan,
    extract_spans,
    f1_score,
    format_mcnemar,
    format_table,
    mcnemar,
    mcnemar_from_counts,
    spans_to_labels,
    to_records,
)


class TestSpans:
    def test_simple(self):
        assert extract_spans(["B-PER", "I-PER", "O"]) == [EntitySpan("PER", 0, 1)]

    def test_none(self):
        assert extract_spans(["O", "O"]) == []

    def test_adjacent_begins(self):
        assert extract_spans(["B-PER", "B-PER"]) == [EntitySpan("PER", 0, 0), EntitySpan("PER", 1, 1)]

    def test_iob1_opening(self):
        assert extract_spans(["O", "I-LOC", "I-LOC", "I-PER"]) == [
            EntitySpan("LOC", 1, 2), EntitySpan("PER", 3, 3)]

    def test_type_change(self):
        assert extract_spans(["B-LOC", "I-PER"]) == [EntitySpan("LOC", 0, 0), EntitySpan("PER", 1, 1)]

    def test_span_at_end(self):
        assert extract_spans(["O", "B-ORG", "I-ORG"]) == [EntitySpan("ORG", 1, 2)]

    @pytest.mark.parametrize("bad", ["X-PER", "B-", "BPER", "", "o"])
    def test_malformed(self, bad):
        with pytest.raises(ValueError):
            extract_spans([bad])


@st.composite
def span_lists(draw):
    length = draw(st.integers(0, 12))
    spans, pos = [], 0
    while pos < length:
        gap = draw(st.integers(0, 2))
        start = pos + gap
        if start >= length:
            break
        end = draw(st.integers(start, min(length - 1, start + 3)))
        spans.append(EntitySpan(draw(st.sampled_from(["PER", "LOC", "ORG"])), start, end))
        pos = end + 1
    return spans, length


@settings(max_examples=200, deadline=None)
@given(span_lists())
def test_spans_round_trip(data):
    spans, length = data
    assert extract_spans(spans_to_labels(spans, length)) == spans


LABELS = ["O", "B-PER", "I-PER", "B-LOC", "I-LOC"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.tuples(st.sampled_from(LABELS), st.sampled_from(LABELS)), min_size=1, max_size=6),
                min_size=1, max_size=5))
def test_scores_bounded_and_order_free(pairs):
    gold = [[g for g, _ in s] for s in pairs]
    pred = [[p for _, p in s] for s in pairs]
    r = f1_score(gold, pred)
    for v in (r.precision, r.recall, r.f1):
        assert 0.0 <= v <= 1.0
    r2 = f1_score(gold[::-1], pred[::-1])
    assert (r.precision, r.recall, r.f1) == (r2.precision, r2.recall, r2.f1)
    same = mcnemar(gold, pred, pred)
    assert same.b == same.c == 0 and not same.significant_at_95


class TestF1:
    def test_perfect(self):
        gold = [["B-PER", "I-PER", "O"], ["B-LOC"]]
        r = f1_score(gold, gold)
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)

    def test_boundary_mismatch(self):
        r = f1_score([["B-PER", "I-PER", "O"]], [["B-PER", "O", "O"]])
        assert r.correct == 0 and r.precision == 0.0 and r.recall == 0.0 and r.f1 == 0.0

    def test_half(self):
        r = f1_score([["B-PER", "O", "B-LOC"]], [["B-PER", "O", "B-ORG"]])
        assert (r.precision, r.recall, r.f1) == (0.5, 0.5, 0.5)

    def test_per_type(self):
        r = f1_score([["B-PER", "O", "B-LOC"]], [["B-PER", "O", "B-ORG"]])
        assert r.per_type["PER"].f1 == 1.0
        assert r.per_type["LOC"].recall == 0.0
        assert r.per_type["ORG"].precision == 0.0

    def test_no_entities(self):
        r = f1_score([["O"]], [["O"]])
        assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            f1_score([["O", "O"]], [["O"]])
        with pytest.raises(ValueError):
            f1_score([["O"]], [["O"], ["O"]])

    def test_rendering(self):
        r = f1_score([["B-PER", "O", "B-LOC"]], [["B-PER", "O", "B-ORG"]])
        table = format_table(r)
        assert "overall" in table and "50.00" in table
        records = [json.loads(line) for line in to_records(r)]
        assert records[-1]["type"] == "overall" and records[-1]["f1"] == 0.5


class TestMcNemar:
    def test_symmetric(self):
        r = mcnemar_from_counts(5, 5)
        assert r.chi_square == 0.0 and not r.significant_at_95

    def test_ten_two(self):
        r = mcnemar_from_counts(10, 2)
        assert r.chi_square == pytest.approx(49 / 12, abs=1e-12)
        assert r.significant_at_95

    def test_zero(self):
        r = mcnemar_from_counts(0, 0)
        assert r.chi_square == 0.0 and not r.significant_at_95

    def test_token_counts(self):
        gold = [["B-PER", "O", "O", "B-LOC"]]
        a = [["B-PER", "O", "O", "O"]]
        b = [["O", "O", "B-LOC", "B-LOC"]]
        r = mcnemar(gold, a, b)
        assert (r.b, r.c) == (2, 1)

    def test_entity_counts(self):
        gold = [["B-PER", "I-PER", "O", "B-LOC"]]
        a = [["B-PER", "I-PER", "O", "O"]]
        b = [["B-PER", "O", "O", "B-LOC"]]
        r = mcnemar(gold, a, b, unit="entity")
        assert (r.b, r.c) == (1, 1)

    def test_bad_unit(self):
        with pytest.raises(ValueError):
            mcnemar([["O"]], [["O"]], [["O"]], unit="sentence")

    def test_format(self):
        assert "4.08" in format_mcnemar(mcnemar_from_counts(10, 2))
        assert "not significant" in format_mcnemar(mcnemar_from_counts(3, 3))
