"""Corpus files, vocabularies and pretrained word vectors.

Corpus format: UTF-8, one token per line with three whitespace-separated
columns ``surface analysis label``; a blank line ends a sentence.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .morpho import MorphAnalysis, MorphFormatError, Scheme, parse_analysis, project

logger = logging.getLogger(__name__)

UNK = "<unk>"
PAD = "<pad>"
EMPTY = "<empty>"

LABEL_RE = re.compile(r"^(O|[BI]-\S+)$")


class CorpusFormatError(ValueError):
    def __init__(self, message, line=None, path=None):
        where = f"{path}:" if path else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class Token:
    surface: str
    analysis: MorphAnalysis
    label: str | None = None


@dataclass
class Sentence:
    tokens: list[Token]

    def __len__(self):
        return len(self.tokens)

    @property
    def labels(self) -> list[str | None]:
        return [t.label for t in self.tokens]

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


def check_label(label: str) -> str:
    if not LABEL_RE.match(label):
        raise ValueError(f"invalid IOB label {label!r}")
    return label


def normalize_iob(labels, strict=False):
    """Rewrite IOB1-style ``I-X`` span openings as ``B-X``.

    Returns ``(labels, changed)``.  With ``strict`` a violation raises instead.
    """
    out, changed, prev = [], 0, "O"
    for i, lab in enumerate(labels):
        if lab.startswith("I-") and (prev == "O" or prev[2:] != lab[2:]):
            if strict:
                raise ValueError(f"position {i}: {lab!r} cannot follow {prev!r}")
            lab = "B-" + lab[2:]
            changed += 1
        out.append(lab)
        prev = lab
    return out, changed


def read_blocks(path):
    """Yield sentences as lists of ``(line_number, columns)``."""
    block = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cols = line.split()
            if not cols:
                if block:
                    yield block
                    block = []
                continue
            block.append((lineno, cols))
    if block:
        yield block


def load_corpus(path, strict=False, labeled=True) -> list[Sentence]:
    """Read a 3-column corpus (2 columns when ``labeled`` is false).

    IOB1-style spans are normalized to IOB2 unless ``strict`` is set, in which
    case they are reported as errors.
    """
    ncols = 3 if labeled else 2
    sentences, normalized = [], 0
    for block in read_blocks(path):
        tokens = []
        for lineno, cols in block:
            if len(cols) != ncols:
                raise CorpusFormatError(f"expected {ncols} columns, got {len(cols)}", lineno, path)
            try:
                analysis = parse_analysis(cols[1])
            except MorphFormatError as exc:
                raise CorpusFormatError(str(exc), lineno, path) from None
            label = None
            if labeled:
                label = cols[2]
                if not LABEL_RE.match(label):
                    raise CorpusFormatError(f"invalid IOB label {label!r}", lineno, path)
            tokens.append(Token(cols[0], analysis, label))
        if labeled:
            try:
                labels, changed = normalize_iob([t.label for t in tokens], strict=strict)
            except ValueError as exc:
                raise CorpusFormatError(str(exc), block[0][0], path) from None
            if changed:
                normalized += changed
                tokens = [Token(t.surface, t.analysis, lab) for t, lab in zip(tokens, labels)]
        sentences.append(Sentence(tokens))
    if normalized:
        logger.warning("%s: normalized %d IOB1 span openings to IOB2", path, normalized)
    return sentences


def format_corpus(sentences, extra_columns=None) -> str:
    """Serialize sentences back to the corpus format.

    ``extra_columns`` is an optional per-sentence list of per-token strings
    appended as an additional column.
    """
    lines = []
    for si, sent in enumerate(sentences):
        for ti, tok in enumerate(sent.tokens):
            cols = [tok.surface, tok.analysis.raw]
            if tok.label is not None:
                cols.append(tok.label)
            if extra_columns is not None:
                cols.append(extra_columns[si][ti])
            lines.append(" ".join(cols))
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


class Vocab:
    """Symbol <-> id mapping in first-occurrence order."""

    def __init__(self, symbols=(), specials=(UNK, PAD)):
        self.symbols: list[str] = []
        self.index: dict[str, int] = {}
        self.specials = tuple(specials)
        for s in (*self.specials, *symbols):
            self.add(s)

    def add(self, symbol: str) -> int:
        if symbol not in self.index:
            self.index[symbol] = len(self.symbols)
            self.symbols.append(symbol)
        return self.index[symbol]

    @property
    def unk_id(self):
        return self.index.get(UNK)

    @property
    def pad_id(self):
        return self.index.get(PAD)

    def id(self, symbol: str) -> int:
        idx = self.index.get(symbol)
        if idx is None:
            if self.unk_id is None:
                raise KeyError(symbol)
            return self.unk_id
        return idx

    def __contains__(self, symbol):
        return symbol in self.index

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.symbols == other.symbols

    def __repr__(self):
        return f"Vocab({len(self)} symbols)"

    @classmethod
    def from_symbols(cls, symbols, specials):
        vocab = cls(specials=())
        vocab.specials = tuple(specials)
        for s in symbols:
            vocab.add(s)
        return vocab


def build_vocabs(sentences, scheme: Scheme | str | None):
    """Word, character, morphological-symbol and label vocabularies."""
    if not sentences:
        raise ValueError("build_vocabs needs at least one sentence")
    scheme = Scheme.parse(scheme) if scheme is not None else None
    words = Vocab()
    chars = Vocab()
    morphs = Vocab(specials=(UNK, PAD, EMPTY))
    labels = Vocab(specials=())
    for sent in sentences:
        for tok in sent.tokens:
            words.add(tok.surface)
            for ch in tok.surface:
                chars.add(ch)
            if scheme is not None:
                for sym in project(tok.analysis, scheme):
                    morphs.add(sym)
            if tok.label is not None:
                labels.add(tok.label)
    return words, chars, morphs, labels


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    duplicates: int = 0

    def get(self, word: str):
        """Vector for ``word`` or ``None`` when absent."""
        return self.vectors.get(word)

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, word):
        return word in self.vectors


def load_embeddings(path, expected_dim: int) -> EmbeddingTable:
    """Load a text vector file: a ``<count> <dim>`` header, then one
    ``<word> <v1> ... <v_dim>`` row per line."""
    table = EmbeddingTable(dim=expected_dim)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise CorpusFormatError("expected '<count> <dim>' header", 1, path)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise CorpusFormatError("non-integer header", 1, path) from None
        if dim != expected_dim:
            raise CorpusFormatError(f"header dim {dim} != expected {expected_dim}", 1, path)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            word, nums = parts[0], parts[1:]
            if len(nums) != expected_dim:
                raise CorpusFormatError(
                    f"word {word!r} has {len(nums)} values, expected {expected_dim}", lineno, path
                )
            try:
                vec = np.array([float(v) for v in nums])
            except ValueError:
                raise CorpusFormatError(f"non-numeric value for word {word!r}", lineno, path) from None
            if word in table.vectors:
                table.duplicates += 1
            table.vectors[word] = vec
    if table.duplicates:
        logger.warning("%s: %d duplicate words, last occurrence kept", path, table.duplicates)
    if count != len(table):
        logger.warning("%s: header announces %d words, read %d", Path(path).name, count, len(table))
    return table
