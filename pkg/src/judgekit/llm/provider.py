"""OpenAI-compatible chat-completions provider."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Protocol

import requests

LOGGER = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """The provider could not be reached or returned an unusable HTTP response."""


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    model_id: str
    api_key_env: str | None = None
    max_retries: int = 3
    timeout: float = 60.0
    max_concurrent: int = 4
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")

    @classmethod
    def load(cls, path: str | Path) -> "ProviderConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**raw)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


class Provider(Protocol):
    model_id: str

    def complete(self, prompt: str) -> str: ...


class OpenAICompatibleProvider:
    """POSTs ``{model, messages, temperature}`` and reads ``choices[0].message.content``."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self.model_id = config.model_id
        self.session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            else:
                LOGGER.warning("environment variable %s is not set", self.config.api_key_env)
        return headers

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        try:
            resp = self.session.post(
                self.config.endpoint, json=payload, headers=self._headers(), timeout=self.config.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {type(exc).__name__}") from exc
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code} from provider")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError("provider reply lacks choices[0].message.content") from exc
