"""Cached, retrying retrieval of judge-model features for instances."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from ..data import JudgmentInstance, JudgmentType, ScaleSpec, dimension_names
from ..schema import Block, FeatureBlock
from .cache import FeatureCache, cache_key
from .parsing import JudgmentParseError, LlmFeatureRecord, parse_judgment_json
from .prompts import render_prompt, response_schema, template_for
from .provider import Provider, ProviderConfig, TransportError

LOGGER = logging.getLogger(__name__)


class CacheMiss(LookupError):
    """Offline strict mode found no cached record for an instance."""


class ProviderFailure(RuntimeError):
    """Strict mode gave up on an instance after exhausting retries."""


def llm_names(aligned_dims: Sequence[str]) -> tuple[str, ...]:
    return (
        "llm.style",
        "llm.format",
        "llm.wording",
        *(f"llm.aligned.{d}" for d in aligned_dims),
        "llm.overall",
        "llm.valid",
    )


def llm_block(record: LlmFeatureRecord, aligned_dims: Sequence[str]) -> FeatureBlock:
    """Lay out a record as a feature block; an invalid record is all zeros, all absent."""
    names = llm_names(aligned_dims)
    n = len(names)
    values = np.zeros(n, dtype=np.float64)
    present = np.zeros(n, dtype=bool)
    present[-1] = True
    if not record.valid:
        return FeatureBlock(Block.LLM, names, values, present)
    values[0:3] = (record.style, record.format, record.wording)
    present[0:3] = True
    for i, d in enumerate(aligned_dims, start=3):
        if d in record.aligned:
            values[i] = record.aligned[d]
            present[i] = True
    if record.overall is not None:
        values[-2] = record.overall
        present[-2] = True
    values[-1] = 1.0
    return FeatureBlock(Block.LLM, names, values, present)


class LlmFeatureClient:
    """Fetches feature records through a cache.

    ``offline=True`` never calls the provider (cache replay). With
    ``strict=True`` a miss (offline) or an exhausted retry budget (online)
    raises; otherwise an invalid record is returned and ``llm.valid`` is 0.
    Invalid records are not cached.
    """

    def __init__(
        self,
        cache: FeatureCache,
        scale: ScaleSpec,
        provider: Provider | None = None,
        model_id: str | None = None,
        offline: bool = False,
        strict: bool = False,
        max_retries: int = 3,
        max_concurrent: int = 1,
        backoff: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if provider is None and not offline:
            raise ValueError("online mode needs a provider")
        self.cache = cache
        self.scale = scale
        self.provider = provider
        self.model_id = model_id or (provider.model_id if provider is not None else None)
        if self.model_id is None:
            raise ValueError("model_id is required")
        self.offline = offline
        self.strict = strict
        self.max_retries = max_retries
        self.max_concurrent = max_concurrent
        self.backoff = backoff
        self.sleep = sleep
        self.calls = 0

    @classmethod
    def from_config(cls, config: ProviderConfig, cache: FeatureCache, scale: ScaleSpec, **kw) -> "LlmFeatureClient":
        from .provider import OpenAICompatibleProvider

        provider = None if kw.get("offline") else OpenAICompatibleProvider(config)
        return cls(
            cache,
            scale,
            provider=provider,
            model_id=config.model_id,
            max_retries=config.max_retries,
            max_concurrent=config.max_concurrent,
            **kw,
        )

    def key_for(self, instance: JudgmentInstance) -> tuple[str, str, str]:
        template_id = template_for(instance.type)
        prompt = render_prompt(template_id, instance, self.scale)
        return cache_key(template_id, prompt, self.model_id), template_id, prompt

    def _query(self, instance: JudgmentInstance, prompt: str) -> LlmFeatureRecord:
        schema = response_schema(instance.type, self.scale, len(instance.candidate.responses))
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                self.calls += 1
                reply = self.provider.complete(prompt)
                return parse_judgment_json(reply, schema)
            except (TransportError, JudgmentParseError) as exc:
                last_error = exc
                LOGGER.debug("attempt %d for %s failed: %s", attempt + 1, instance.candidate.id, exc)
        if self.strict:
            raise ProviderFailure(
                f"instance {instance.candidate.id!r}: no usable reply after {self.max_retries + 1} attempts"
            ) from last_error
        LOGGER.warning("instance %s: no usable reply; marking llm features invalid", instance.candidate.id)
        return LlmFeatureRecord.invalid()

    def fetch(self, instance: JudgmentInstance) -> LlmFeatureRecord:
        key, _, prompt = self.key_for(instance)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if self.offline:
            if self.strict:
                raise CacheMiss(f"no cached judge features for instance {instance.candidate.id!r}")
            return LlmFeatureRecord.invalid()
        record = self._query(instance, prompt)
        if record.valid:
            self.cache.put(key, record)
        return record

    def fetch_many(self, instances: Sequence[JudgmentInstance]) -> list[LlmFeatureRecord]:
        if self.offline or self.max_concurrent <= 1:
            out = [self.fetch(inst) for inst in instances]
        else:
            with ThreadPoolExecutor(max_workers=self.max_concurrent) as pool:
                out = list(pool.map(self.fetch, instances))
        self.cache.flush()
        return out


def aligned_dims_for(jtype: JudgmentType, scale: ScaleSpec) -> tuple[str, ...]:
    return dimension_names(jtype, scale)


def fetch_llm_features(
    instance: JudgmentInstance, client: LlmFeatureClient
) -> FeatureBlock:
    record = client.fetch(instance)
    return llm_block(record, aligned_dims_for(instance.type, client.scale))
