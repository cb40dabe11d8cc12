"""Syntactic-complexity proxies behind a pluggable analyzer interface."""

from __future__ import annotations

from typing import NamedTuple, Protocol

from .lexicons import word_set
from .tagger import LexiconTagger, Tagger
from .tokenize import Kind, Tag, split_sentences, tokenize

_BE_FORMS = frozenset({"am", "is", "are", "was", "were", "be", "been", "being"})
_IRREGULAR_PARTICIPLES = frozenset(
    """made done given taken seen known written built sold told found held kept left lost
    paid sent spent brought bought caught taught thought put set cut hit read shown chosen
    eaten drawn driven grown thrown worn torn broken spoken stolen forgotten hidden""".split()
)
_NOT_PARTICIPLE = (Tag.ADV, Tag.ADJ, Tag.PRON, Tag.OTHER)


class SyntaxStats(NamedTuple):
    syntax_tree_depth: float
    average_dependency_length: float
    passive_voice_ratio: float
    subordinate_clause_rate: float


class SyntaxAnalyzer(Protocol):
    def analyze(self, text: str) -> SyntaxStats: ...


class HeuristicSyntaxAnalyzer:
    """Parser-free approximations of dependency depth, distance, passives and subordination.

    * depth: 1 + maximum clause nesting, where a subordinator opens a clause,
      a comma closes the innermost one and ``;``/``:`` close all.
    * dependency length: per word, distance to the nearest preceding verb in
      the sentence (or to position 0), averaged over words.
    * passive: a ``be`` form followed within two words by an -ed/-en or
      irregular participle.
    """

    def __init__(self, tagger: Tagger | None = None):
        self.tagger = tagger or LexiconTagger()
        self.subordinators = word_set("subordinators.txt")

    def _is_participle(self, surface: str, tag: Tag | None) -> bool:
        w = surface.lower()
        if w in _BE_FORMS:
            return False
        if w in _IRREGULAR_PARTICIPLES:
            return True
        return w.endswith(("ed", "en")) and len(w) > 3 and tag not in _NOT_PARTICIPLE

    def analyze(self, text: str, sentences: list[str] | None = None) -> SyntaxStats:
        sentences = split_sentences(text) if sentences is None else sentences
        if not sentences:
            return SyntaxStats(0.0, 0.0, 0.0, 0.0)
        max_depth = 0
        dep_total = 0
        n_words = 0
        passives = 0
        subordinators = 0
        for sent in sentences:
            tokens = self.tagger.tag(tokenize(sent))
            nesting = deepest = 0
            words = []
            for tok in tokens:
                if tok.kind is Kind.PUNCT:
                    if tok.surface == ",":
                        nesting = max(nesting - 1, 0)
                    elif tok.surface in ";:":
                        nesting = 0
                    continue
                words.append(tok)
                if tok.kind is Kind.WORD and tok.surface.lower() in self.subordinators:
                    subordinators += 1
                    nesting += 1
                    deepest = max(deepest, nesting)
            max_depth = max(max_depth, 1 + deepest)

            last_verb = 0
            for i, tok in enumerate(words):
                dep_total += i - last_verb
                if tok.tag is Tag.VERB:
                    last_verb = i
            n_words += len(words)

            for i, tok in enumerate(words):
                if tok.surface.lower() in _BE_FORMS and any(
                    self._is_participle(w.surface, w.tag) for w in words[i + 1:i + 3]
                ):
                    passives += 1
                    break
        n_sent = len(sentences)
        return SyntaxStats(
            float(max_depth),
            dep_total / n_words if n_words else 0.0,
            passives / n_sent,
            subordinators / n_sent,
        )
