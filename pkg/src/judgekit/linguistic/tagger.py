"""Deterministic part-of-speech tagging from a closed lexicon plus suffix rules."""

from __future__ import annotations

from typing import Protocol

from .lexicons import pos_lexicon
from .tokenize import Kind, Tag, Token, TokenSequence

_APOSTROPHES = ("'", "’")

_NOUN_SUFFIXES = ("tion", "sion", "ness", "ment", "ity", "ism", "ance", "ence", "ship", "hood")
_VERB_SUFFIXES = ("ize", "ise", "ify", "ate")
_ADJ_SUFFIXES = ("ous", "ful", "able", "ible", "ive", "less", "ic", "al", "ish")


class Tagger(Protocol):
    def tag(self, tokens: TokenSequence) -> TokenSequence: ...


def _known_verb_stem(word: str, lex: dict[str, str]) -> bool:
    for suffix in ("ing", "ed", "d"):
        if not word.endswith(suffix) or len(word) <= len(suffix) + 1:
            continue
        stem = word[: -len(suffix)]
        candidates = [stem, stem + "e"]
        if len(stem) > 2 and stem[-1] == stem[-2]:
            candidates.append(stem[:-1])
        if stem.endswith("i"):
            candidates.append(stem[:-1] + "y")
        if any(lex.get(c) == "VERB" for c in candidates):
            return True
    return False


class LexiconTagger:
    """Closed-lexicon tagger; unknown words fall back to suffix heuristics, then NOUN."""

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = pos_lexicon() if lexicon is None else lexicon
        self._memo: dict[str, Tag] = {}

    def tag_word(self, surface: str) -> Tag:
        w = surface.lower()
        hit = self._memo.get(w)
        if hit is None:
            hit = self._memo[w] = self._tag_lower(w)
        return hit

    def _tag_lower(self, w: str) -> Tag:
        lex = self.lexicon
        if w in lex:
            return Tag(lex[w])
        for ap in _APOSTROPHES:
            if ap in w:
                head, _, tail = w.partition(ap)
                if tail == "t" and head.endswith("n"):
                    head = head[:-1]
                    if head == "wo":
                        head = "will"
                    elif head == "ca":
                        head = "can"
                if head in lex:
                    return Tag(lex[head])
                return Tag.NOUN
        if w.endswith("ly") and len(w) > 4:
            return Tag.ADV
        if w.endswith(_NOUN_SUFFIXES):
            return Tag.NOUN
        if w.endswith(_VERB_SUFFIXES) and len(w) > 5:
            return Tag.VERB
        if _known_verb_stem(w, lex):
            return Tag.VERB
        if w.endswith(_ADJ_SUFFIXES) and len(w) > 4:
            return Tag.ADJ
        return Tag.NOUN

    def tag(self, tokens: TokenSequence) -> TokenSequence:
        return [
            Token(t.surface, t.kind, self.tag_word(t.surface)) if t.kind is Kind.WORD else t
            for t in tokens
        ]
