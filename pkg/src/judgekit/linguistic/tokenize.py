"""Whitespace tokenizer and rule-based sentence splitter."""

from __future__ import annotations

import re
from enum import Enum
from typing import NamedTuple

from .lexicons import word_set


class Kind(str, Enum):
    WORD = "word"
    PUNCT = "punct"
    NUMBER = "number"
    URL = "url"


class Tag(str, Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    PRON = "PRON"
    OTHER = "OTHER"


class Token(NamedTuple):
    surface: str
    kind: Kind
    tag: Tag | None = None


TokenSequence = list[Token]

_URL_PREFIXES = ("http://", "https://", "www.")
_URL_TRAILING = ".,;:!?)]}'\""
_NUMBER = re.compile(r"^\d[\d,]*(?:\.\d+)?$")


def tokenize(text: str) -> TokenSequence:
    """Split ``text`` into word, number, URL and punctuation tokens.

    Chunks are whitespace-delimited. A chunk starting with ``http://``,
    ``https://`` or ``www.`` is a URL (trailing sentence punctuation is split
    off). Otherwise leading and trailing non-alphanumeric characters become
    one punctuation token each and the remaining core is a word or a number;
    internal apostrophes and hyphens stay in the core.
    """
    tokens: TokenSequence = []
    for chunk in text.split():
        if chunk.isalpha():
            tokens.append(Token(chunk, Kind.WORD))
            continue
        if chunk.lower().startswith(_URL_PREFIXES):
            core = chunk.rstrip(_URL_TRAILING)
            tokens.append(Token(core, Kind.URL))
            tokens.extend(Token(ch, Kind.PUNCT) for ch in chunk[len(core):])
            continue
        start, end = 0, len(chunk)
        while start < end and not chunk[start].isalnum():
            start += 1
        while end > start and not chunk[end - 1].isalnum():
            end -= 1
        tokens.extend(Token(ch, Kind.PUNCT) for ch in chunk[:start])
        core = chunk[start:end]
        if core:
            tokens.append(Token(core, Kind.NUMBER if _NUMBER.match(core) else Kind.WORD))
        tokens.extend(Token(ch, Kind.PUNCT) for ch in chunk[end:])
    return tokens


_BOUNDARY = re.compile(r"[.!?]+(?=\s|$)")
_SINGLE_LETTER = re.compile(r"^[^\W\d_]\.$")


def _ends_abbreviation(text: str, dot_end: int) -> bool:
    """True when the '.' ending at ``dot_end`` closes an abbreviation or an initial."""
    start = dot_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    chunk = text[start:dot_end]
    while chunk and not (chunk[0].isalnum()):
        chunk = chunk[1:]
    if not chunk:
        return False
    return chunk.lower() in word_set("abbreviations.txt") or bool(_SINGLE_LETTER.match(chunk))


def split_sentences(text: str) -> list[str]:
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        if m.group() == "." and _ends_abbreviation(text, m.end()):
            continue
        span = text[start:m.end()].strip()
        if span and any(ch.isalnum() for ch in span):
            sentences.append(span)
        start = m.end()
    tail = text[start:].strip()
    if tail and any(ch.isalnum() for ch in tail):
        sentences.append(tail)
    return sentences
