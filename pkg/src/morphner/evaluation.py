"""Entity-level CoNLL scoring and McNemar's test for paired taggers."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

# chi-square critical value, 1 degree of freedom, alpha = 0.05
CHI2_CRITICAL_95 = 3.841459


@dataclass(frozen=True)
class EntitySpan:
    type: str
    start: int
    end: int


@dataclass
class TypeScore:
    precision: float
    recall: float
    f1: float
    gold: int
    predicted: int
    correct: int


@dataclass
class EvalResult:
    precision: float
    recall: float
    f1: float
    gold: int
    predicted: int
    correct: int
    per_type: dict[str, TypeScore] = field(default_factory=dict)


@dataclass
class McNemarResult:
    b: int
    c: int
    chi_square: float
    significant_at_95: bool


def _split(label: str):
    if label == "O":
        return "O", None
    if len(label) > 2 and label[0] in "BI" and label[1] == "-":
        return label[0], label[2:]
    raise ValueError(f"malformed IOB label {label!r}")


def extract_spans(labels) -> list[EntitySpan]:
    """Maximal entity spans; an ``I-X`` that does not continue an ``X`` span
    opens a new one (IOB1 tolerance)."""
    spans = []
    kind = start = None
    for i, label in enumerate(labels):
        prefix, typ = _split(label)
        if kind is not None and (prefix != "I" or typ != kind):
            spans.append(EntitySpan(kind, start, i - 1))
            kind = None
        if prefix != "O" and kind is None:
            kind, start = typ, i
    if kind is not None:
        spans.append(EntitySpan(kind, start, len(labels) - 1))
    return spans


def spans_to_labels(spans, length: int) -> list[str]:
    labels = ["O"] * length
    for s in spans:
        labels[s.start] = f"B-{s.type}"
        for i in range(s.start + 1, s.end + 1):
            labels[i] = f"I-{s.type}"
    return labels


def _check_aligned(gold, *preds):
    for pred in preds:
        if len(gold) != len(pred):
            raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
        for i, (g, p) in enumerate(zip(gold, pred)):
            if len(g) != len(p):
                raise ValueError(f"sentence {i}: {len(g)} gold labels vs {len(p)} predicted")


def _prf(correct, predicted, gold):
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def f1_score(gold, pred) -> EvalResult:
    """Exact-match (type, start, end) precision/recall/F1 over sentences."""
    _check_aligned(gold, pred)
    gold_counts, pred_counts, hit_counts = Counter(), Counter(), Counter()
    for g, p in zip(gold, pred):
        gs = set(extract_spans(g))
        ps = set(extract_spans(p))
        gold_counts.update(s.type for s in gs)
        pred_counts.update(s.type for s in ps)
        hit_counts.update(s.type for s in gs & ps)
    per_type = {}
    for typ in sorted(set(gold_counts) | set(pred_counts)):
        per_type[typ] = TypeScore(
            *_prf(hit_counts[typ], pred_counts[typ], gold_counts[typ]),
            gold=gold_counts[typ], predicted=pred_counts[typ], correct=hit_counts[typ],
        )
    total_g, total_p, total_c = (sum(c.values()) for c in (gold_counts, pred_counts, hit_counts))
    return EvalResult(*_prf(total_c, total_p, total_g), gold=total_g, predicted=total_p,
                      correct=total_c, per_type=per_type)


def mcnemar_from_counts(b: int, c: int) -> McNemarResult:
    """Continuity-corrected McNemar statistic from the discordant counts."""
    if b + c == 0:
        chi = 0.0
    else:
        chi = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    return McNemarResult(b, c, chi, chi > CHI2_CRITICAL_95)


def mcnemar(gold, pred_a, pred_b, unit: str = "token") -> McNemarResult:
    """Compare two taggers on the same gold data.

    ``unit="token"`` counts per-token label correctness; ``unit="entity"``
    counts, for every gold entity, whether each system recovered it exactly.
    """
    _check_aligned(gold, pred_a, pred_b)
    b = c = 0
    if unit == "token":
        for g, pa, pb in zip(gold, pred_a, pred_b):
            for gl, al, bl in zip(g, pa, pb):
                a_ok, b_ok = al == gl, bl == gl
                b += a_ok and not b_ok
                c += b_ok and not a_ok
    elif unit == "entity":
        for g, pa, pb in zip(gold, pred_a, pred_b):
            sa, sb = set(extract_spans(pa)), set(extract_spans(pb))
            for span in extract_spans(g):
                a_ok, b_ok = span in sa, span in sb
                b += a_ok and not b_ok
                c += b_ok and not a_ok
    else:
        raise ValueError(f"unit must be 'token' or 'entity', got {unit!r}")
    return mcnemar_from_counts(b, c)


def format_table(result: EvalResult) -> str:
    """Plain-text table with percentages to two decimals."""
    header = f"{'type':<16}{'prec':>8}{'rec':>8}{'F1':>8}{'gold':>7}{'pred':>7}{'corr':>7}"
    lines = [header, "-" * len(header)]

    def row(name, s):
        return (f"{name:<16}{100 * s.precision:>8.2f}{100 * s.recall:>8.2f}{100 * s.f1:>8.2f}"
                f"{s.gold:>7}{s.predicted:>7}{s.correct:>7}")

    for typ, score in result.per_type.items():
        lines.append(row(typ, score))
    lines.append("-" * len(header))
    lines.append(row("overall", result))
    return "\n".join(lines)


def to_records(result: EvalResult) -> list[str]:
    """One JSON object per line: each entity type, then the overall row."""
    out = []
    for typ, s in result.per_type.items():
        out.append(json.dumps({"type": typ, "precision": s.precision, "recall": s.recall,
                               "f1": s.f1, "gold": s.gold, "predicted": s.predicted,
                               "correct": s.correct}, sort_keys=True))
    out.append(json.dumps({"type": "overall", "precision": result.precision, "recall": result.recall,
                           "f1": result.f1, "gold": result.gold, "predicted": result.predicted,
                           "correct": result.correct}, sort_keys=True))
    return out


def format_mcnemar(result: McNemarResult) -> str:
    verdict = "significant" if result.significant_at_95 else "not significant"
    return (f"b={result.b} c={result.c} chi-square={result.chi_square:.2f} "
            f"{verdict} at 95% confidence")
