"""Input checking for the estimator API.

Sentences may be given as :class:`~morphner.corpus.Sentence` objects, lists of
:class:`~morphner.corpus.Token`, or lists of ``(surface, analysis)`` /
``(surface, analysis, label)`` tuples where ``analysis`` is either a raw
analysis string or a parsed :class:`~morphner.morpho.MorphAnalysis`.
"""
from __future__ import annotations

from .corpus import LABEL_RE, Sentence, Token, normalize_iob
from .morpho import MorphAnalysis, parse_analysis


def _as_token(item, where) -> Token:
    if isinstance(item, Token):
        return item
    if not isinstance(item, (tuple, list)) or len(item) not in (2, 3):
        raise ValueError(f"{where}: expected a Token or (surface, analysis[, label]) tuple, got {item!r}")
    surface, analysis = item[0], item[1]
    label = item[2] if len(item) == 3 else None
    if not isinstance(surface, str) or not surface:
        raise ValueError(f"{where}: surface must be a non-empty string")
    if not isinstance(analysis, MorphAnalysis):
        analysis = parse_analysis(str(analysis))
    return Token(surface, analysis, label)


def check_labels(labels, where="labels") -> list[str]:
    labels = list(labels)
    for lab in labels:
        if not isinstance(lab, str) or not LABEL_RE.match(lab):
            raise ValueError(f"{where}: invalid IOB label {lab!r}")
    return labels


def check_sentences(X, y=None, require_labels=False, strict_iob=False) -> list[Sentence]:
    """Normalize ``X`` (and optional aligned label lists ``y``) to sentences."""
    if isinstance(X, Sentence):
        raise TypeError("X must be a sequence of sentences, not a single Sentence")
    X = list(X)
    if y is not None:
        y = list(y)
        if len(y) != len(X):
            raise ValueError(f"X has {len(X)} sentences but y has {len(y)}")
    out = []
    for i, sent in enumerate(X):
        items = sent.tokens if isinstance(sent, Sentence) else list(sent)
        if not items:
            raise ValueError(f"sentence {i} is empty")
        tokens = [_as_token(item, f"sentence {i}, token {j}") for j, item in enumerate(items)]
        if y is not None:
            labels = check_labels(y[i], f"sentence {i}")
            if len(labels) != len(tokens):
                raise ValueError(f"sentence {i}: {len(tokens)} tokens but {len(labels)} labels")
            tokens = [Token(t.surface, t.analysis, lab) for t, lab in zip(tokens, labels)]
        if require_labels:
            if any(t.label is None for t in tokens):
                raise ValueError(f"sentence {i} has unlabeled tokens")
            labels = check_labels([t.label for t in tokens], f"sentence {i}")
            labels, _ = normalize_iob(labels, strict=strict_iob)
            tokens = [Token(t.surface, t.analysis, lab) for t, lab in zip(tokens, labels)]
        out.append(Sentence(tokens))
    return out
