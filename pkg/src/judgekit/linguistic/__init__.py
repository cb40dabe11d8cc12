"""Deterministic linguistic features of candidate text."""

from .features import (
    FIELD_NAMES,
    LinguisticExtractor,
    LinguisticRecord,
    coleman_liau,
    coleman_liau_from_counts,
    discourse_features,
    extract_linguistic,
    length_features,
    lexical_features,
    linguistic_names,
    linguistic_record,
    syntax_features,
)
from .lexicons import lexicon_hashes
from .syntax import HeuristicSyntaxAnalyzer, SyntaxAnalyzer, SyntaxStats
from .tagger import LexiconTagger, Tagger
from .tokenize import Kind, Tag, Token, TokenSequence, split_sentences, tokenize

__all__ = [
    "FIELD_NAMES",
    "HeuristicSyntaxAnalyzer",
    "Kind",
    "LexiconTagger",
    "LinguisticExtractor",
    "LinguisticRecord",
    "SyntaxAnalyzer",
    "SyntaxStats",
    "Tag",
    "Tagger",
    "Token",
    "TokenSequence",
    "coleman_liau",
    "coleman_liau_from_counts",
    "discourse_features",
    "extract_linguistic",
    "length_features",
    "lexical_features",
    "lexicon_hashes",
    "linguistic_names",
    "linguistic_record",
    "split_sentences",
    "syntax_features",
    "tokenize",
]
