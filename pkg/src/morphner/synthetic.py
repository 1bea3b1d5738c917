"""Deterministic toy NER corpus with Turkish-style morphological analyses.

The lexicon has exactly 40 word forms.  Entity labels follow fixed rules:
person names are single ``PERSON`` tokens, ``Name'daydı``-style forms are
``LOCATION`` tokens, and organization head + suffix word pairs are two-token
``ORGANIZATION`` spans.  The held-out split swaps every entity word for an
unseen one whose analysis follows the same pattern, so only the character
and morphological channels can identify it.
"""
from __future__ import annotations

import numpy as np

from .corpus import Sentence, Token
from .morpho import DB, parse_analysis

PERSONS = ["Ali", "Ayşe", "Mehmet", "Zeynep", "Elif", "Murat"]
PERSONS_HELDOUT = ["Kerem", "Deniz", "Selin", "Emre", "Burak", "Ece"]

# (surface, root)
LOCATIONS = [("Ankara'daydı", "Ankara"), ("İzmir'deydi", "İzmir"), ("Bursa'daydı", "Bursa"),
             ("Konya'daydı", "Konya"), ("Adana'daydı", "Adana"), ("Trabzon'daydı", "Trabzon")]
LOCATIONS_HELDOUT = [("Sivas'taydı", "Sivas"), ("Rize'deydi", "Rize"), ("Muş'taydı", "Muş"),
                     ("Van'daydı", "Van"), ("Kars'taydı", "Kars"), ("Bolu'daydı", "Bolu")]

ORG_HEADS = ["Koç", "Türk", "Yapı"]
ORG_HEADS_HELDOUT = ["Arçelik", "Vakıf", "Doğan"]
ORG_TAILS = ["Holding", "Telekom", "Kredi"]

OTHER = {
    "geldi": "gel+Verb+Pos+Past+A3sg",
    "gitti": "git+Verb+Pos+Past+A3sg",
    "bugün": "bugün+Adv",
    "dün": "dün+Adv",
    "ve": "ve+Conj",
    "ile": "ile+Postp+PCNom",
    "çok": "çok+Adv",
    "güzel": "güzel+Adj",
    "ev": "ev+Noun+A3sg+Pnon+Nom",
    "evde": "ev+Noun+A3sg+Pnon+Loc",
    "kitap": "kitap+Noun+A3sg+Pnon+Nom",
    "okudu": "oku+Verb+Pos+Past+A3sg",
    "okuldaydı": "okul+Noun+A3sg+Pnon+Loc" + DB + "+Verb+Zero+Past+A3sg",
    "güzelleşti": "güzel+Adj" + DB + "+Verb+Become+Pos+Past+A3sg",
    "çalışkanlık": "çalış+Verb+Pos" + DB + "+Adj+Agt" + DB + "+Noun+Ness+A3sg+Pnon+Nom",
    "yazdı": "yaz+Verb+Pos+Past+A3sg",
    "büyük": "büyük+Adj",
    "şehir": "şehir+Noun+A3sg+Pnon+Nom",
    "yeni": "yeni+Adj",
    "oldu": "ol+Verb+Pos+Past+A3sg",
    "bir": "bir+Det",
    "için": "için+Postp+PCNom",
}

LEXICON_SIZE = len(PERSONS) + len(LOCATIONS) + len(ORG_HEADS) + len(ORG_TAILS) + len(OTHER)


def _person(name):
    return [Token(name, parse_analysis(f"{name}+Noun+Prop+A3sg+Pnon+Nom"), "B-PERSON")]


def _location(surface, root):
    raw = f"{root}+Noun+Prop+A3sg+Pnon+Loc{DB}+Verb+Zero+Past+A3sg"
    return [Token(surface, parse_analysis(raw), "B-LOCATION")]


def _organization(head, tail):
    return [
        Token(head, parse_analysis(f"{head}+Noun+Prop+A3sg+Pnon+Nom"), "B-ORGANIZATION"),
        Token(tail, parse_analysis(f"{tail}+Noun+A3sg+P3sg+Nom"), "I-ORGANIZATION"),
    ]


def make_corpus(n_sentences: int = 50, seed: int = 0, heldout: bool = False) -> list[Sentence]:
    """Generate ``n_sentences`` sentences of 3-7 slots each."""
    rng = np.random.default_rng(seed)
    persons = PERSONS_HELDOUT if heldout else PERSONS
    locations = LOCATIONS_HELDOUT if heldout else LOCATIONS
    heads = ORG_HEADS_HELDOUT if heldout else ORG_HEADS
    others = list(OTHER)
    sentences = []
    for _ in range(n_sentences):
        tokens = []
        for _ in range(int(rng.integers(3, 8))):
            r = rng.random()
            if r < 0.15:
                tokens += _person(persons[rng.integers(len(persons))])
            elif r < 0.32:
                tokens += _location(*locations[rng.integers(len(locations))])
            elif r < 0.42:
                tokens += _organization(heads[rng.integers(len(heads))], ORG_TAILS[rng.integers(len(ORG_TAILS))])
            else:
                word = others[rng.integers(len(others))]
                tokens.append(Token(word, parse_analysis(OTHER[word]), "O"))
        sentences.append(Sentence(tokens))
    return sentences


def db_fraction(sentences) -> float:
    tokens = [t for s in sentences for t in s.tokens]
    return sum(len(t.analysis.groups) > 1 for t in tokens) / len(tokens)
