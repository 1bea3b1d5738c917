"""Parsing of morphological analysis strings and their symbol projections.

An analysis looks like ``İstanbul+Noun+Prop+A3sg+Pnon+Loc^DB+Verb+Zero+Past+A3sg``:
a root, then ``+``-separated tags, with ``^DB`` marking a derivation boundary
that opens a new tag group.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

DB = "^DB"


class MorphFormatError(ValueError):
    """Raised for analysis strings that do not follow the root+tag convention."""


class Scheme(enum.Enum):
    WR = "wr"
    WOR = "wor"
    WR_ADB = "wr_adb"
    CHAR = "char"

    @classmethod
    def parse(cls, name: str | "Scheme") -> "Scheme":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scheme {name!r}; expected one of: {valid}") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MorphAnalysis:
    root: str
    groups: tuple[tuple[str, ...], ...]
    raw: str

    def serialize(self) -> str:
        parts = []
        for i, group in enumerate(self.groups):
            head = self.root if i == 0 else DB
            parts.append("+".join((head,) + group))
        return "".join(parts)

    @property
    def tags(self) -> list[str]:
        return [t for g in self.groups for t in g]


def parse_analysis(raw: str) -> MorphAnalysis:
    """Split ``raw`` into its root and derivation-boundary tag groups.

    >>> parse_analysis("ev+Noun+A3pl+P3sg+Loc").groups
    (('Noun', 'A3pl', 'P3sg', 'Loc'),)
    """
    if not raw:
        raise MorphFormatError("empty analysis string")
    if any(ch.isspace() for ch in raw):
        raise MorphFormatError(f"whitespace in analysis {raw!r}")
    chunks = raw.split(DB)
    head = chunks[0].split("+")
    root = head[0]
    if not root:
        raise MorphFormatError(f"empty root in analysis {raw!r}")
    groups = [tuple(head[1:])]
    for chunk in chunks[1:]:
        # every boundary must be followed by "+Tag" or end the group empty
        if chunk and not chunk.startswith("+"):
            raise MorphFormatError(f"malformed derivation boundary in {raw!r}")
        groups.append(tuple(chunk.split("+")[1:]) if chunk else ())
    for group in groups:
        if any(t == "" for t in group):
            raise MorphFormatError(f"empty tag in analysis {raw!r}")
    # "^DB" glued to the root (no tag group before it) is rejected
    if len(chunks) > 1 and "+" not in chunks[0]:
        raise MorphFormatError(f"derivation boundary before any tag in {raw!r}")
    analysis = MorphAnalysis(root=root, groups=tuple(groups), raw=raw)
    if analysis.serialize() != raw:
        raise MorphFormatError(f"analysis {raw!r} does not round-trip")
    return analysis


def project(analysis: MorphAnalysis, scheme: Scheme | str) -> list[str]:
    """Turn an analysis into the symbol sequence fed to the morphological encoder."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.CHAR:
        return list(analysis.raw)
    if scheme is Scheme.WR_ADB:
        out = [analysis.root]
        for group in analysis.groups[1:]:
            out.append(DB)
            out.extend(group)
        return out
    out = []
    for i, group in enumerate(analysis.groups):
        if i:
            out.append(DB)
        out.extend(group)
    if scheme is Scheme.WR:
        out.insert(0, analysis.root)
    return out
