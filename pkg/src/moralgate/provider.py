"""Completion providers.

The pipeline only depends on :class:`CompletionProvider`. :class:`ScriptedProvider`
replays completions from a JSON script keyed by prompt id and is what every
test and experiment uses. :class:`HTTPChatProvider` talks to a
chat-completions style endpoint and is never used unless explicitly selected.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence

from .corpus import SchemaError


class ProviderError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationRequest:
    prompt_text: str
    k: int = 1
    temperature: float = 0.7
    prompt_id: Optional[str] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")


@dataclass(frozen=True)
class GenerationResult:
    completions: tuple
    token_logprobs: Optional[tuple] = None
    provider_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "completions", tuple(self.completions))
        if self.token_logprobs is not None:
            lp = tuple(tuple(float(x) for x in row) for row in self.token_logprobs)
            if len(lp) != len(self.completions):
                raise ValueError("need one log-probability list per completion")
            object.__setattr__(self, "token_logprobs", lp)


class CompletionProvider(Protocol):
    name: str

    def generate(self, req: GenerationRequest) -> GenerationResult:
        ...


class ScriptedProvider:
    """Deterministic provider backed by a ``{prompt_id: {completions, logprobs}}`` map.

    Lookup uses ``req.prompt_id`` and falls back to the prompt text. In strict
    mode an unknown prompt, or a request for more completions than were
    scripted, raises :class:`ProviderError`; otherwise scripted variants are
    cycled and unknown prompts get ``fallback``.
    """

    name = "scripted"

    def __init__(self, script: Mapping[str, Mapping], strict: bool = True,
                 fallback: str = "No scripted answer is available for this prompt."):
        self._script = {key: _check_entry(key, entry) for key, entry in script.items()}
        self.strict = strict
        self.fallback = fallback

    def __contains__(self, key: str) -> bool:
        return key in self._script

    def generate(self, req: GenerationRequest) -> GenerationResult:
        entry = None
        for key in (req.prompt_id, req.prompt_text):
            if key is not None and key in self._script:
                entry = self._script[key]
                break
        if entry is None:
            if self.strict:
                raise ProviderError(f"no script entry for prompt {req.prompt_id or req.prompt_text!r}")
            return GenerationResult((self.fallback,) * req.k, None, self.name)
        completions, logprobs = entry
        if req.k > len(completions) and self.strict:
            raise ProviderError(
                f"prompt {req.prompt_id!r}: {req.k} completions requested, {len(completions)} scripted")
        idx = [i % len(completions) for i in range(req.k)]
        lp = None if logprobs is None else tuple(logprobs[i] for i in idx)
        return GenerationResult(tuple(completions[i] for i in idx), lp, self.name)


def _check_entry(key, entry) -> tuple:
    if not isinstance(entry, Mapping):
        raise SchemaError(f"script[{key!r}] must be an object")
    extra = set(entry) - {"completions", "logprobs"}
    if extra:
        raise SchemaError(f"script[{key!r}]: unknown key(s) {sorted(extra)}")
    completions = entry.get("completions")
    if (not isinstance(completions, Sequence) or isinstance(completions, str) or not completions
            or not all(isinstance(c, str) for c in completions)):
        raise SchemaError(f"script[{key!r}].completions must be a non-empty list of strings")
    logprobs = entry.get("logprobs")
    if logprobs is not None:
        ok = (isinstance(logprobs, Sequence) and len(logprobs) == len(completions)
              and all(isinstance(row, Sequence) and all(isinstance(x, (int, float))
                      and not isinstance(x, bool) for x in row) for row in logprobs))
        if not ok:
            raise SchemaError(f"script[{key!r}].logprobs must be one list of numbers per completion")
        logprobs = tuple(tuple(float(x) for x in row) for row in logprobs)
    return tuple(completions), logprobs


def mock_from_script(path, strict: bool = True) -> ScriptedProvider:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: script must be a JSON object keyed by prompt id")
    return ScriptedProvider(data, strict=strict)


class HTTPChatProvider:
    """Minimal client for an OpenAI-compatible ``/chat/completions`` endpoint.

    Configured from ``MORALGATE_BASE_URL``, ``MORALGATE_MODEL`` and
    ``MORALGATE_API_KEY``.
    """

    name = "http"

    def __init__(self, base_url: str | None = None, model: str | None = None,
                 api_key: str | None = None, timeout: float = 30.0, opener=None):
        self.base_url = (base_url or os.environ.get("MORALGATE_BASE_URL", "")).rstrip("/")
        self.model = model or os.environ.get("MORALGATE_MODEL", "")
        self.api_key = api_key or os.environ.get("MORALGATE_API_KEY")
        if not self.base_url or not self.model:
            raise ProviderError("HTTP provider needs MORALGATE_BASE_URL and MORALGATE_MODEL")
        self.timeout = timeout
        self._open = opener or urllib.request.urlopen

    def generate(self, req: GenerationRequest) -> GenerationResult:
        body = json.dumps({
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt_text}],
            "n": req.k,
            "temperature": req.temperature,
            "logprobs": True,
        }).encode()
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        http_req = urllib.request.Request(f"{self.base_url}/chat/completions", data=body,
                                          headers=headers, method="POST")
        try:
            with self._open(http_req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise ProviderError(f"backend request failed: {exc}") from exc
        return parse_chat_response(payload, req.k, self.name)


def parse_chat_response(payload: dict, k: int, provider_name: str = "http") -> GenerationResult:
    try:
        choices = payload["choices"]
        completions = [c["message"]["content"] for c in choices]
        rows = []
        for c in choices:
            content = (c.get("logprobs") or {}).get("content")
            rows.append(None if content is None else [t["logprob"] for t in content])
    except (KeyError, TypeError) as exc:
        raise ProviderError(f"malformed backend reply: {exc!r}") from None
    if len(completions) != k or not all(isinstance(c, str) for c in completions):
        raise ProviderError(f"backend returned {len(completions)} completions, expected {k}")
    logprobs = None if any(r is None for r in rows) else rows
    return GenerationResult(tuple(completions), logprobs, provider_name)
