"""Linguistic feature record computed from candidate text."""

from __future__ import annotations

import re
from dataclasses import astuple, dataclass, fields
from functools import lru_cache

import numpy as np

from ..data import JudgmentInstance, JudgmentType
from ..schema import Block, FeatureBlock, SchemaError
from .lexicons import phrase_list
from .syntax import HeuristicSyntaxAnalyzer, SyntaxAnalyzer
from .tagger import LexiconTagger, Tagger
from .tokenize import Kind, Tag, TokenSequence, split_sentences, tokenize

NOUN_VERB_CAP = 50.0
_LIST_LINE = re.compile(r"^\s*(?:[-*•]|\d+[.)])")
_APOSTROPHES = ("'", "’")


@dataclass(frozen=True)
class LinguisticRecord:
    word_count: float = 0.0
    char_count: float = 0.0
    sentence_count: float = 0.0
    avg_sentence_length: float = 0.0
    list_count: float = 0.0
    paragraph_count: float = 0.0
    punctuation_count: float = 0.0
    reference_count: float = 0.0
    unique_words: float = 0.0
    vocab_diversity: float = 0.0
    average_word_length: float = 0.0
    noun_verb_ratio: float = 0.0
    adjective_ratio: float = 0.0
    adverb_ratio: float = 0.0
    pronoun_ratio: float = 0.0
    contraction_rate: float = 0.0
    coleman_liau: float = 0.0
    syntax_tree_depth: float = 0.0
    average_dependency_length: float = 0.0
    passive_voice_ratio: float = 0.0
    subordinate_clause_rate: float = 0.0
    hedging_frequency: float = 0.0
    discourse_marker_rate: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


FIELD_NAMES: tuple[str, ...] = tuple(f.name for f in fields(LinguisticRecord))


def length_features(
    text: str, tokens: TokenSequence | None = None, sentences: list[str] | None = None
) -> dict[str, float]:
    tokens = tokenize(text) if tokens is None else tokens
    words = sum(1 for t in tokens if t.kind in (Kind.WORD, Kind.NUMBER))
    sentences = len(split_sentences(text) if sentences is None else sentences)
    lines = text.splitlines()
    paragraphs = 0
    in_par = False
    for line in lines:
        blank = not line.strip()
        if not blank and not in_par:
            paragraphs += 1
        in_par = not blank
    return {
        "word_count": float(words),
        "char_count": float(len(text)),
        "sentence_count": float(sentences),
        "avg_sentence_length": words / max(sentences, 1),
        "list_count": float(sum(1 for line in lines if _LIST_LINE.match(line))),
        "paragraph_count": float(paragraphs),
        "punctuation_count": float(sum(1 for t in tokens if t.kind is Kind.PUNCT)),
        "reference_count": float(sum(1 for t in tokens if t.kind is Kind.URL)),
    }


def lexical_features(tokens: TokenSequence) -> dict[str, float]:
    """Diversity, word length, tag ratios and contractions over word tokens.

    Ratios divide by the word count used for length (words plus numbers),
    so they agree with ``word_count``. Requires tagged word tokens.
    """
    words = [t for t in tokens if t.kind is Kind.WORD]
    if any(t.tag is None for t in words):
        raise ValueError("lexical_features needs tagged tokens; run a tagger first")
    word_count = sum(1 for t in tokens if t.kind in (Kind.WORD, Kind.NUMBER))
    if not words:
        return {name: 0.0 for name in (
            "unique_words", "vocab_diversity", "average_word_length", "noun_verb_ratio",
            "adjective_ratio", "adverb_ratio", "pronoun_ratio", "contraction_rate")}
    lowered = [t.surface.lower() for t in words]
    counts = {tag: 0 for tag in Tag}
    for t in words:
        counts[t.tag] += 1
    unique = len(set(lowered))
    contractions = sum(
        1 for w in lowered if any(ap in w[1:-1] for ap in _APOSTROPHES)
    )
    return {
        "unique_words": float(unique),
        "vocab_diversity": unique / len(words),
        "average_word_length": sum(len(w) for w in lowered) / len(words),
        "noun_verb_ratio": min(counts[Tag.NOUN] / max(counts[Tag.VERB], 1), NOUN_VERB_CAP),
        "adjective_ratio": counts[Tag.ADJ] / word_count,
        "adverb_ratio": counts[Tag.ADV] / word_count,
        "pronoun_ratio": counts[Tag.PRON] / word_count,
        "contraction_rate": contractions / word_count,
    }


def coleman_liau(
    text: str, tokens: TokenSequence | None = None, sentences: list[str] | None = None
) -> float:
    """Coleman-Liau index with letters and sentences per 100 words.

    Letters are alphabetic characters; returns 0 for text without words.
    """
    tokens = tokenize(text) if tokens is None else tokens
    words = sum(1 for t in tokens if t.kind in (Kind.WORD, Kind.NUMBER))
    if words == 0:
        return 0.0
    letters = sum(1 for ch in text if ch.isalpha())
    sentences = split_sentences(text) if sentences is None else sentences
    return coleman_liau_from_counts(letters, words, len(sentences))


def coleman_liau_from_counts(letters: int, words: int, sentences: int) -> float:
    per100_letters = letters / words * 100.0
    per100_sentences = sentences / words * 100.0
    return 0.0588 * per100_letters - 0.296 * per100_sentences - 15.8


def syntax_features(
    text: str, analyzer: SyntaxAnalyzer | None = None, sentences: list[str] | None = None
) -> dict[str, float]:
    analyzer = analyzer or _default_analyzer()
    if sentences is not None and isinstance(analyzer, HeuristicSyntaxAnalyzer):
        return analyzer.analyze(text, sentences)._asdict()
    stats = analyzer.analyze(text)
    return stats._asdict()


@lru_cache(maxsize=None)
def _phrase_index(name: str) -> dict[str, tuple[tuple[str, ...], ...]]:
    """Phrases of a lexicon keyed by first word, longest first."""
    index: dict[str, list[tuple[str, ...]]] = {}
    for p in sorted(phrase_list(name), key=len, reverse=True):
        index.setdefault(p[0], []).append(p)
    return {k: tuple(v) for k, v in index.items()}


def _count_phrases(lowered: list[str], name: str) -> int:
    """Greedy left-to-right count of non-overlapping phrases, longest match first."""
    index = _phrase_index(name)
    hits = 0
    i = 0
    while i < len(lowered):
        for p in index.get(lowered[i], ()):
            if tuple(lowered[i:i + len(p)]) == p:
                hits += 1
                i += len(p)
                break
        else:
            i += 1
    return hits


def discourse_features(tokens: TokenSequence) -> dict[str, float]:
    words = [t.surface.lower() for t in tokens if t.kind is Kind.WORD]
    word_count = sum(1 for t in tokens if t.kind in (Kind.WORD, Kind.NUMBER))
    if not word_count:
        return {"hedging_frequency": 0.0, "discourse_marker_rate": 0.0}
    return {
        "hedging_frequency": _count_phrases(words, "hedges.txt") / word_count,
        "discourse_marker_rate": _count_phrases(words, "discourse_markers.txt") / word_count,
    }


_DEFAULTS: dict = {}


def _default_tagger() -> Tagger:
    if "tagger" not in _DEFAULTS:
        _DEFAULTS["tagger"] = LexiconTagger()
    return _DEFAULTS["tagger"]


def _default_analyzer() -> SyntaxAnalyzer:
    if "analyzer" not in _DEFAULTS:
        _DEFAULTS["analyzer"] = HeuristicSyntaxAnalyzer(_default_tagger())
    return _DEFAULTS["analyzer"]


def linguistic_record(
    text: str, tagger: Tagger | None = None, analyzer: SyntaxAnalyzer | None = None
) -> LinguisticRecord:
    """All linguistic features of one text; every field is 0 for blank text."""
    if not text.strip():
        return LinguisticRecord(char_count=float(len(text)))
    tokens = (tagger or _default_tagger()).tag(tokenize(text))
    values: dict[str, float] = {}
    sentences = split_sentences(text)
    values.update(length_features(text, tokens, sentences))
    values.update(lexical_features(tokens))
    values["coleman_liau"] = coleman_liau(text, tokens, sentences)
    values.update(syntax_features(text, analyzer, sentences))
    values.update(discourse_features(tokens))
    return LinguisticRecord(**values)


# --------------------------------------------------------------------------
# Instance-level block


def linguistic_names(jtype: JudgmentType, k_items: int | None = None) -> tuple[str, ...]:
    if jtype is JudgmentType.POINTWISE:
        return tuple(f"ling.{f}" for f in FIELD_NAMES)
    if jtype is JudgmentType.PAIRWISE:
        return tuple(
            f"ling.{part}.{f}" for part in ("r1", "r2", "diff") for f in FIELD_NAMES
        )
    if not k_items:
        raise SchemaError("listwise features need a fixed item count")
    names = []
    for i in range(k_items):
        names.extend(f"ling.item{i}.{f}" for f in FIELD_NAMES)
        names.append(f"ling.item{i}.present")
    for j in range(k_items - 1):
        names.extend(f"ling.diff.rank{j}.{f}" for f in FIELD_NAMES)
    return tuple(names)


class LinguisticExtractor:
    """Computes the linguistic block of an instance, memoizing per-text records."""

    def __init__(self, tagger: Tagger | None = None, analyzer: SyntaxAnalyzer | None = None):
        self.tagger = tagger or _default_tagger()
        self.analyzer = analyzer or (
            _default_analyzer() if tagger is None else HeuristicSyntaxAnalyzer(self.tagger)
        )
        self._memo: dict[str, np.ndarray] = {}

    def record_array(self, text: str) -> np.ndarray:
        arr = self._memo.get(text)
        if arr is None:
            arr = linguistic_record(text, self.tagger, self.analyzer).as_array()
            self._memo[text] = arr
        return arr

    def extract(self, instance: JudgmentInstance, k_items: int | None = None) -> FeatureBlock:
        jtype = instance.type
        responses = instance.candidate.responses
        names = linguistic_names(jtype, k_items)
        nf = len(FIELD_NAMES)
        if jtype is JudgmentType.POINTWISE:
            if len(responses) != 1:
                raise SchemaError("pointwise instance must have exactly one response")
            values = self.record_array(responses[0])
            return FeatureBlock(Block.LINGUISTIC, names, values.copy(), np.ones(nf, dtype=bool))
        if jtype is JudgmentType.PAIRWISE:
            if len(responses) != 2:
                raise SchemaError("pairwise instance must have exactly two responses")
            r1 = self.record_array(responses[0])
            r2 = self.record_array(responses[1])
            values = np.concatenate([r1, r2, r1 - r2])
            return FeatureBlock(Block.LINGUISTIC, names, values, np.ones(len(values), dtype=bool))
        if len(responses) > k_items:
            raise SchemaError(f"listwise instance has {len(responses)} responses, schema allows {k_items}")
        stride = nf + 1
        values = np.zeros(len(names), dtype=np.float64)
        present = np.ones(len(names), dtype=bool)
        records = []
        for i in range(k_items):
            base = i * stride
            if i < len(responses):
                rec = self.record_array(responses[i])
                values[base:base + nf] = rec
                values[base + nf] = 1.0
                records.append(rec)
            else:
                present[base:base + nf] = False
                records.append(None)
        ranking = instance.score.ranking
        off = k_items * stride
        for j in range(k_items - 1):
            sl = slice(off + j * nf, off + (j + 1) * nf)
            if j + 1 < len(ranking):
                values[sl] = records[ranking[j]] - records[ranking[j + 1]]
            else:
                present[sl] = False
        return FeatureBlock(Block.LINGUISTIC, names, values, present)


def extract_linguistic(instance: JudgmentInstance, k_items: int | None = None) -> FeatureBlock:
    return LinguisticExtractor().extract(instance, k_items)
