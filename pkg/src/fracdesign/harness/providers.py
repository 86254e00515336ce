"""Chat-completion clients: OpenAI chat, Gemini generateContent and a replay mock.

Each call is a fresh single-turn conversation carrying the prompt as the
only user message. Sampling parameters are left at provider defaults; only
the reasoning setting is sent.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Callable, Mapping

import httpx

log = logging.getLogger(__name__)

DIALECTS = ("openai-chat", "gemini-generate", "mock")
RETRY_STATUS = {408, 429, 500, 502, 503, 504}
PER_MILLION = Decimal(10**6)


class ConfigurationError(RuntimeError):
    """Missing API key or malformed provider configuration."""


class TransportError(RuntimeError):
    """The provider could not be reached or kept failing after retries."""


@dataclass(frozen=True)
class Usage:
    input: int
    output: int


@dataclass(frozen=True)
class Completion:
    text: str
    usage: Usage | None = None


@dataclass(frozen=True)
class ProviderProfile:
    id: str
    dialect: str
    model: str = ""
    endpoint: str = ""
    auth_env: str = ""
    price_in: Decimal = Decimal(0)
    price_out: Decimal = Decimal(0)
    reasoning: str | int | None = None
    min_interval: float = 1.0
    fixtures: str | None = None

    def __post_init__(self):
        if self.dialect not in DIALECTS:
            raise ConfigurationError(f"profile {self.id!r}: unknown dialect {self.dialect!r}")
        object.__setattr__(self, "price_in", Decimal(str(self.price_in)))
        object.__setattr__(self, "price_out", Decimal(str(self.price_out)))
        if self.price_in < 0 or self.price_out < 0:
            raise ConfigurationError(f"profile {self.id!r}: prices must be nonnegative")
        if self.dialect != "mock" and not self.auth_env:
            raise ConfigurationError(f"profile {self.id!r}: auth_env is required")

    @classmethod
    def from_dict(cls, data: Mapping) -> ProviderProfile:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown profile keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


DEFAULT_PROFILES = {
    "gpt": ProviderProfile(
        id="gpt",
        dialect="openai-chat",
        model="gpt-5.1-chat-latest",
        endpoint="https://api.openai.com/v1/chat/completions",
        auth_env="OPENAI_API_KEY",
        price_in=Decimal("1.5"),
        price_out=Decimal("10"),
        reasoning="medium",
    ),
    "gemini": ProviderProfile(
        id="gemini",
        dialect="gemini-generate",
        model="gemini-2.5-flash",
        endpoint="https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent",
        auth_env="GEMINI_API_KEY",
        price_in=Decimal("0.3"),
        price_out=Decimal("2.5"),
        reasoning=-1,
    ),
    "mock": ProviderProfile(id="mock", dialect="mock", model="mock", min_interval=0.0),
}


def load_profiles(path: str | Path | None = None) -> dict[str, ProviderProfile]:
    """Built-in profiles, overridden or extended by a JSON config file.

    The file holds ``{"profiles": [{"id": ..., "dialect": ..., ...}, ...]}``.
    """
    profiles = dict(DEFAULT_PROFILES)
    if path is None:
        return profiles
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read provider config {path}: {exc}") from None
    entries = data.get("profiles") if isinstance(data, dict) else None
    if not isinstance(entries, list):
        raise ConfigurationError(f"{path}: expected a 'profiles' list")
    for entry in entries:
        if not isinstance(entry, dict):
            raise ConfigurationError(f"{path}: profile entries must be objects")
        profile = ProviderProfile.from_dict(entry)
        profiles[profile.id] = profile
    return profiles


def estimate_cost(usage: Usage | None, profile: ProviderProfile) -> Decimal | None:
    """Linear tariff on provider-reported tokens; None when usage is unknown."""
    if usage is None:
        return None
    return (usage.input * profile.price_in + usage.output * profile.price_out) / PER_MILLION


def request_payload(profile: ProviderProfile, prompt: str) -> dict:
    if profile.dialect == "openai-chat":
        body = {"model": profile.model, "messages": [{"role": "user", "content": prompt}]}
        if profile.reasoning is not None:
            body["reasoning_effort"] = profile.reasoning
        return body
    if profile.dialect == "gemini-generate":
        body = {"contents": [{"role": "user", "parts": [{"text": prompt}]}]}
        if profile.reasoning is not None:
            body["generationConfig"] = {"thinkingConfig": {"thinkingBudget": int(profile.reasoning)}}
        return body
    raise ConfigurationError(f"dialect {profile.dialect!r} has no HTTP payload")


def _headers(profile: ProviderProfile, key: str) -> dict[str, str]:
    if profile.dialect == "openai-chat":
        return {"Authorization": f"Bearer {key}"}
    return {"x-goog-api-key": key}


def parse_reply(profile: ProviderProfile, data: dict) -> Completion:
    if profile.dialect == "openai-chat":
        choices = data.get("choices") or [{}]
        text = (choices[0].get("message") or {}).get("content") or ""
        usage = data.get("usage")
        if usage and "prompt_tokens" in usage:
            return Completion(text, Usage(usage["prompt_tokens"], usage.get("completion_tokens", 0)))
        return Completion(text)
    candidates = data.get("candidates") or [{}]
    parts = (candidates[0].get("content") or {}).get("parts") or []
    text = "".join(p.get("text", "") for p in parts if not p.get("thought"))
    meta = data.get("usageMetadata")
    if meta and "promptTokenCount" in meta:
        # thinking tokens are billed at the output rate
        out = meta.get("candidatesTokenCount", 0) + meta.get("thoughtsTokenCount", 0)
        return Completion(text, Usage(meta["promptTokenCount"], out))
    return Completion(text)


class RateLimiter:
    """Enforces a minimum interval between consecutive requests."""

    def __init__(self, min_interval: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.min_interval = min_interval
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None

    def wait(self) -> None:
        if self._last is not None and self.min_interval > 0:
            remaining = self._last + self.min_interval - self._clock()
            if remaining > 0:
                self._sleep(remaining)
        self._last = self._clock()


@dataclass
class ChatClient:
    """HTTP client for one provider profile."""

    profile: ProviderProfile
    env: Mapping[str, str] = field(default_factory=lambda: os.environ)
    http: httpx.Client | None = None
    max_retries: int = 4
    base_delay: float = 2.0
    max_delay: float = 60.0
    sleep: Callable[[float], None] = time.sleep
    timeout: float = 600.0

    def __post_init__(self):
        if self.profile.dialect == "mock":
            raise ConfigurationError("use MockClient for mock profiles")
        self._limiter = RateLimiter(self.profile.min_interval, sleep=self.sleep)

    def _key(self) -> str:
        key = self.env.get(self.profile.auth_env)
        if not key:
            raise ConfigurationError(
                f"environment variable {self.profile.auth_env} is not set for provider {self.profile.id!r}")
        return key

    def complete(self, prompt: str, key=None) -> Completion:
        api_key = self._key()
        url = self.profile.endpoint.format(model=self.profile.model)
        body = request_payload(self.profile, prompt)
        headers = _headers(self.profile, api_key)
        http = self.http or httpx.Client(timeout=self.timeout)
        try:
            return self._send(http, url, body, headers)
        finally:
            if self.http is None:
                http.close()

    def _send(self, http: httpx.Client, url: str, body: dict, headers: dict) -> Completion:
        last = ""
        for attempt in range(self.max_retries + 1):
            if attempt:
                delay = min(self.base_delay * 2 ** (attempt - 1), self.max_delay)
                log.info("retrying %s in %.1fs (%s)", self.profile.id, delay, last)
                self.sleep(delay)
            self._limiter.wait()
            try:
                resp = http.post(url, json=body, headers=headers)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code in RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
            except ValueError:
                raise TransportError("provider returned a non-JSON body") from None
            return parse_reply(self.profile, data)
        raise TransportError(f"gave up after {self.max_retries + 1} attempts: {last}")


def fixture_name(n: int, m: int, replicate: int) -> str:
    return f"n{n}_m{m}_r{replicate}.txt"


@dataclass
class MockClient:
    """Replays raw responses from ``<dir>/n{n}_m{m}_r{rep}.txt``.

    An optional ``.usage.json`` sidecar (``{"input": .., "output": ..}``)
    supplies token usage. A shared ``n{n}_m{m}.txt`` serves every replicate
    that has no file of its own.
    """

    fixtures: Path

    def __post_init__(self):
        self.fixtures = Path(self.fixtures)
        if not self.fixtures.is_dir():
            raise ConfigurationError(f"mock fixture directory {self.fixtures} does not exist")

    def complete(self, prompt: str, key=None) -> Completion:
        if key is None:
            raise ConfigurationError("mock completions need an (n, m, replicate) key")
        n, m, rep = key
        path = self.fixtures / fixture_name(n, m, rep)
        if not path.exists():
            path = self.fixtures / f"n{n}_m{m}.txt"
        if not path.exists():
            raise TransportError(f"no mock fixture for n={n} m={m} replicate={rep}")
        usage = None
        sidecar = path.with_suffix(".usage.json")
        if sidecar.exists():
            data = json.loads(sidecar.read_text())
            usage = Usage(int(data["input"]), int(data["output"]))
        return Completion(path.read_text(encoding="utf-8"), usage)


def make_client(profile: ProviderProfile, **kwargs):
    if profile.dialect == "mock":
        if not profile.fixtures:
            raise ConfigurationError(f"mock profile {profile.id!r} needs a fixtures directory")
        return MockClient(Path(profile.fixtures))
    return ChatClient(profile, **kwargs)


def complete(profile: ProviderProfile, prompt: str, key=None, **kwargs) -> Completion:
    """One stateless completion under ``profile``."""
    return make_client(profile, **kwargs).complete(prompt, key=key)
