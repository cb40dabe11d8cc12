"""Judge-model features: prompts, reply parsing, provider access and caching."""

from .cache import FeatureCache, cache_key, export_cache, import_cache
from .client import (
    CacheMiss,
    LlmFeatureClient,
    ProviderFailure,
    aligned_dims_for,
    fetch_llm_features,
    llm_block,
    llm_names,
)
from .parsing import JudgmentParseError, LlmFeatureRecord, parse_judgment_json
from .prompts import (
    FieldSpec,
    PromptError,
    ResponseSchema,
    render_prompt,
    response_schema,
    template_for,
)
from .provider import OpenAICompatibleProvider, Provider, ProviderConfig, TransportError

__all__ = [
    "CacheMiss",
    "FeatureCache",
    "FieldSpec",
    "JudgmentParseError",
    "LlmFeatureClient",
    "LlmFeatureRecord",
    "OpenAICompatibleProvider",
    "PromptError",
    "Provider",
    "ProviderConfig",
    "ProviderFailure",
    "ResponseSchema",
    "TransportError",
    "aligned_dims_for",
    "cache_key",
    "export_cache",
    "fetch_llm_features",
    "import_cache",
    "llm_block",
    "llm_names",
    "parse_judgment_json",
    "render_prompt",
    "response_schema",
    "template_for",
]
