"""Versioned word lists shipped with the package."""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

LEXICON_FILES = (
    "hedges.txt",
    "discourse_markers.txt",
    "subordinators.txt",
    "abbreviations.txt",
    "pos_lexicon.txt",
)


def _read(name: str) -> str:
    return resources.files("judgekit.linguistic").joinpath("data", name).read_text(encoding="utf-8")


def _entries(name: str) -> list[str]:
    out = []
    for line in _read(name).splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


@lru_cache(maxsize=None)
def phrase_list(name: str) -> tuple[tuple[str, ...], ...]:
    """Entries of a lexicon file as lower-cased word tuples."""
    return tuple(tuple(e.lower().split()) for e in _entries(name))


@lru_cache(maxsize=None)
def word_set(name: str) -> frozenset[str]:
    return frozenset(e.lower() for e in _entries(name))


@lru_cache(maxsize=None)
def pos_lexicon() -> dict[str, str]:
    table = {}
    for entry in _entries("pos_lexicon.txt"):
        word, tag = entry.split("\t")
        table[word] = tag
    return table


@lru_cache(maxsize=None)
def lexicon_hashes() -> tuple[str, ...]:
    """``name:sha256`` for every shipped lexicon, in a fixed order."""
    return tuple(
        f"{name}:{hashlib.sha256(_read(name).encode('utf-8')).hexdigest()}" for name in LEXICON_FILES
    )
