"""Model providers: embedding and language interfaces, offline mocks, HTTP remotes.

Every model access in the engine goes through one of the two interfaces here,
so the whole pipeline runs deterministically offline with the mock providers
and switches to remote services purely through configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
import requests

from .errors import ProviderError, SchemaError

DEFAULT_EMBEDDING_MODEL = "intfloat/multilingual-e5-base"
DEFAULT_LLM_MODEL = "gemini-2.0-flash"
DEFAULT_API_KEY_ENV = "GUIDEQA_API_KEY"


class EmbeddingKind(str, Enum):
    QUERY = "query"
    PASSAGE = "passage"


@runtime_checkable
class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, texts: list[str], kind: EmbeddingKind) -> list[np.ndarray]: ...


@runtime_checkable
class LanguageProvider(Protocol):
    name: str

    def generate(self, system_instructions: str, user_content: str) -> str: ...


_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _splitmix64_uniform(seed: int, count: int) -> np.ndarray:
    """`count` deterministic draws in [-1, 1] from a splitmix64 stream."""
    state = seed & _MASK64
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        out[i] = (z >> 11) / float(1 << 53) * 2.0 - 1.0
    return out


class MockEmbeddingProvider:
    """Deterministic offline embeddings.

    Each lowercase whitespace token gets a fixed pseudo-random vector (splitmix64
    seeded by the token's FNV-1a 64-bit hash); a text embeds as the L2-normalized
    sum of its token vectors. Texts sharing tokens therefore land closer together
    than token-disjoint texts, which is all the retrieval tests need.
    """

    name = "mock-embedding"

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is None:
            seed = _fnv1a64(token.encode("utf-8"))
            cached = _splitmix64_uniform(seed, self.dimension)
            self._token_cache[token] = cached
        return cached

    def _embed_one(self, text: str) -> np.ndarray:
        tokens = text.lower().split()
        if not tokens:
            tokens = [""]
        acc = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            acc += self._token_vector(token)
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:  # degenerate cancellation; keep the map total
            acc = self._token_vector("").copy()
            norm = float(np.linalg.norm(acc))
        return acc / norm

    def embed(self, texts: list[str], kind: EmbeddingKind = EmbeddingKind.PASSAGE) -> list[np.ndarray]:
        # kind is ignored: the mock has no query/passage asymmetry.
        return [self._embed_one(t) for t in texts]


@dataclass(frozen=True)
class ScriptRule:
    """One scripted response, keyed by content digest or regex.

    Patterns are matched with ``re.search`` under DOTALL against the user
    content; rules are tried in order and the first match wins.
    """

    response: str
    pattern: str | None = None
    sha256: str | None = None

    def __post_init__(self):
        if self.pattern is None and self.sha256 is None:
            raise SchemaError("a script rule needs either 'pattern' or 'sha256'")


class ScriptedLanguageProvider:
    """Deterministic stand-in for a remote LLM, keyed on prompt content.

    Records every (system, content) call for test assertions on prompt
    construction. Unmatched prompts return the configured default response.
    """

    name = "mock-llm"

    def __init__(self, rules: list[ScriptRule] | None = None, default: str = ""):
        self.rules = list(rules or [])
        self.default = default
        self.calls: list[tuple[str, str]] = []
        self._compiled = [
            (rule, re.compile(rule.pattern, re.DOTALL) if rule.pattern else None)
            for rule in self.rules
        ]

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedLanguageProvider":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [
            ScriptRule(
                response=entry["response"],
                pattern=entry.get("pattern"),
                sha256=entry.get("sha256"),
            )
            for entry in raw.get("rules", [])
        ]
        return cls(rules=rules, default=raw.get("default", ""))

    def generate(self, system_instructions: str, user_content: str) -> str:
        self.calls.append((system_instructions, user_content))
        digest = hashlib.sha256(user_content.encode("utf-8")).hexdigest()
        for rule, compiled in self._compiled:
            if rule.sha256 is not None and rule.sha256 == digest:
                return rule.response
            if compiled is not None and compiled.search(user_content):
                return rule.response
        return self.default


def _api_key_headers(api_key_env: str) -> dict[str, str]:
    key = os.environ.get(api_key_env, "")
    return {"Authorization": f"Bearer {key}"} if key else {}


class RemoteLanguageProvider:
    """HTTP language provider: POST {system, content} -> {text}."""

    def __init__(
        self,
        endpoint: str,
        model: str = DEFAULT_LLM_MODEL,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout_s: float = 60.0,
    ):
        if not endpoint:
            raise ProviderError("remote language provider requires an endpoint")
        self.endpoint = endpoint
        self.name = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def generate(self, system_instructions: str, user_content: str) -> str:
        try:
            resp = requests.post(
                self.endpoint,
                json={"system": system_instructions, "content": user_content},
                headers=_api_key_headers(self.api_key_env),
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ProviderError(f"language provider call failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"language provider returned non-JSON payload: {exc}") from exc
        if "text" not in payload:
            raise ProviderError("language provider response is missing 'text'")
        return payload["text"]


class RemoteEmbeddingProvider:
    """HTTP embedding provider: POST {texts, kind} -> {vectors}.

    Applies the e5-family "query: " / "passage: " prefixes client-side, per the
    convention of the default multilingual model.
    """

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        model: str = DEFAULT_EMBEDDING_MODEL,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout_s: float = 60.0,
    ):
        if not endpoint:
            raise ProviderError("remote embedding provider requires an endpoint")
        if dimension < 1:
            raise ProviderError("embedding dimension must be positive")
        self.endpoint = endpoint
        self.dimension = dimension
        self.name = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def embed(self, texts: list[str], kind: EmbeddingKind) -> list[np.ndarray]:
        prefixed = [f"{kind.value}: {t}" for t in texts]
        try:
            resp = requests.post(
                self.endpoint,
                json={"texts": prefixed, "kind": kind.value},
                headers=_api_key_headers(self.api_key_env),
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ProviderError(f"embedding provider call failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"embedding provider returned non-JSON payload: {exc}") from exc
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embedding provider returned a malformed 'vectors' field")
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dimension,):
                raise ProviderError(
                    f"embedding provider returned dimension {arr.shape}, expected ({self.dimension},)"
                )
            out.append(arr)
        return out
