"""Hate scoring through pluggable text classifiers.

A deterministic offline stub provider (phrase-match against a bundled
identity-attack lexicon) is the default so the whole suite runs with no
network access or API keys. HTTP providers are config-enabled adapters
with rate limiting, bounded retry, and a persistent response cache.

A post is hateful when at least one available provider says so; providers
returning a confidence score count as hateful only above the 0.7
threshold (strict inequality).
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Protocol

import httpx

_DATA_DIR = Path(__file__).parent / "data"

SCORE_THRESHOLD = 0.7


class Label(str, Enum):
    HATEFUL = "hateful"
    NON_HATEFUL = "non-hateful"


@dataclass(frozen=True)
class ProviderResult:
    provider: str
    label: Label | None = None       # label-style providers
    confidence: float | None = None  # score-style providers
    available: bool = True

    def __post_init__(self):
        if self.available and self.label is None and self.confidence is None:
            raise ValueError("available result needs a label or a confidence")


@dataclass(frozen=True)
class HateVerdictRule:
    score_threshold: float = SCORE_THRESHOLD
    combination: str = "or"

    def __post_init__(self):
        if not 0.0 < self.score_threshold < 1.0:
            raise ValueError("score_threshold must be in (0, 1)")


@dataclass
class ClusterScore:
    cluster_id: int
    hateful: int
    total: int

    @property
    def hate_score(self) -> float:
        return self.hateful / self.total

    @property
    def exact(self) -> Fraction:
        return Fraction(self.hateful, self.total)


class ProviderUnavailableError(RuntimeError):
    """Every configured provider failed for a text."""


class Provider(Protocol):
    name: str

    def score(self, text: str) -> ProviderResult: ...


class StubLexiconProvider:
    """Offline phrase-match scorer: lexicon hit -> hateful with confidence 1.0."""

    def __init__(self, phrases=None, name: str = "stub"):
        self.name = name
        if phrases is None:
            phrases = [
                line.strip().lower()
                for line in (_DATA_DIR / "hate_lexicon.txt").read_text(
                    encoding="utf-8").splitlines()
                if line.strip() and not line.startswith("#")
            ]
        self.phrases = tuple(phrases)

    def score(self, text: str) -> ProviderResult:
        lowered = text.lower()
        hit = any(p in lowered for p in self.phrases)
        return ProviderResult(self.name, confidence=1.0 if hit else 0.0)


class RateLimiter:
    """Blocking limiter: at most ``per_second`` calls per second."""

    def __init__(self, per_second: float):
        self.interval = 1.0 / per_second if per_second > 0 else 0.0
        self._lock = threading.Lock()
        self._next_ok = 0.0

    def wait(self) -> None:
        if self.interval == 0.0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_ok - now
            self._next_ok = max(now, self._next_ok) + self.interval
        if delay > 0:
            time.sleep(delay)


class HttpProvider:
    """Generic JSON-over-HTTP classifier adapter.

    ``style`` selects how the response is read: "score" providers return a
    confidence in [0, 1] under ``score_field``; "label" providers return a
    label under ``label_field`` (compared against "hateful") plus an
    optional confidence. Timeouts and 5xx responses are retried a bounded
    number of times, then reported as unavailable.
    """

    def __init__(self, name: str, endpoint: str, style: str = "score",
                 api_key: str | None = None, rate_limit_per_s: float = 0.0,
                 retries: int = 2, timeout_s: float = 10.0,
                 score_field: str = "score", label_field: str = "label",
                 transport: httpx.BaseTransport | None = None):
        if style not in ("score", "label"):
            raise ValueError(f"unknown provider style {style!r}")
        self.name = name
        self.endpoint = endpoint
        self.style = style
        self.api_key = api_key
        self.retries = retries
        self.score_field = score_field
        self.label_field = label_field
        self._limiter = RateLimiter(rate_limit_per_s)
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def score(self, text: str) -> ProviderResult:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        for attempt in range(self.retries + 1):
            self._limiter.wait()
            try:
                resp = self._client.post(self.endpoint, json={"text": text},
                                         headers=headers)
            except httpx.HTTPError:
                continue
            if resp.status_code >= 500:
                continue
            if resp.status_code != 200:
                break
            payload = resp.json()
            if self.style == "score":
                return ProviderResult(self.name,
                                      confidence=float(payload[self.score_field]))
            label = Label.HATEFUL if str(payload[self.label_field]).lower() == "hateful" \
                else Label.NON_HATEFUL
            conf = payload.get(self.score_field)
            return ProviderResult(self.name, label=label,
                                  confidence=float(conf) if conf is not None else None)
        return ProviderResult(self.name, available=False)


class ResultCache:
    """Single-file append-only cache keyed by SHA-256 of (provider, text).

    Safe for concurrent readers; writes are serialized. Unavailable
    results are never cached so transient failures retry later.
    """

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._entries: dict[str, ProviderResult] = {}
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._entries[obj["key"]] = ProviderResult(
                    provider=obj["provider"],
                    label=Label(obj["label"]) if obj.get("label") else None,
                    confidence=obj.get("confidence"),
                )

    @staticmethod
    def key(provider: str, text: str) -> str:
        digest = hashlib.sha256()
        digest.update(provider.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(text.encode("utf-8"))
        return digest.hexdigest()

    def get(self, provider: str, text: str) -> ProviderResult | None:
        return self._entries.get(self.key(provider, text))

    def put(self, provider: str, text: str, result: ProviderResult) -> None:
        if not result.available:
            return
        k = self.key(provider, text)
        with self._lock:
            self._entries[k] = result
            if self.path is not None:
                line = json.dumps({
                    "key": k, "provider": result.provider,
                    "label": result.label.value if result.label else None,
                    "confidence": result.confidence,
                }, sort_keys=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")


def classify(text: str, providers: list[Provider],
             cache: ResultCache | None = None) -> list[ProviderResult]:
    """One result per configured provider, cache-first."""
    if not text:
        raise ValueError("cannot classify empty text")
    if not providers:
        raise ValueError("no providers configured")
    results = []
    for provider in providers:
        cached = cache.get(provider.name, text) if cache is not None else None
        if cached is not None:
            results.append(cached)
            continue
        result = provider.score(text)
        if cache is not None:
            cache.put(provider.name, text, result)
        results.append(result)
    return results


def classify_many(texts: list[str], providers: list[Provider],
                  cache: ResultCache | None = None,
                  max_in_flight: int = 1) -> list[list[ProviderResult]]:
    """Classify a batch, optionally with bounded concurrency.

    Useful for HTTP providers; the stub is cheap enough that the default
    stays sequential. Result order matches the input order.
    """
    if max_in_flight <= 1:
        return [classify(t, providers, cache) for t in texts]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(lambda t: classify(t, providers, cache), texts))


def is_hateful(results: list[ProviderResult],
               rule: HateVerdictRule = HateVerdictRule()) -> bool:
    """OR over available providers; scores count only above the threshold."""
    available = [r for r in results if r.available]
    if not available:
        raise ProviderUnavailableError("all providers unavailable")
    for r in available:
        if r.label is not None:
            if r.label == Label.HATEFUL:
                return True
        elif r.confidence is not None and r.confidence > rule.score_threshold:
            return True
    return False


def score_cluster(cluster_id: int, texts: list[str], providers: list[Provider],
                  cache: ResultCache | None = None,
                  rule: HateVerdictRule = HateVerdictRule()) -> ClusterScore:
    """Fraction of a cluster's texts judged hateful."""
    if not texts:
        raise ValueError("cluster has no posts to score")
    hateful = sum(
        1 for t in texts if is_hateful(classify(t, providers, cache), rule))
    return ClusterScore(cluster_id=cluster_id, hateful=hateful, total=len(texts))


@dataclass
class ProviderConfig:
    """Provider entry as it appears in the config file."""

    name: str
    kind: str = "stub"  # stub | http-score | http-label
    endpoint: str = ""
    key_env: str | None = None
    rate_limit_per_s: float = 0.0
    retries: int = 2
    lexicon: list[str] = field(default_factory=list)


def build_providers(configs: list[ProviderConfig], env: dict[str, str]) -> list[Provider]:
    providers: list[Provider] = []
    for cfg in configs:
        if cfg.kind == "stub":
            providers.append(StubLexiconProvider(cfg.lexicon or None, name=cfg.name))
        elif cfg.kind in ("http-score", "http-label"):
            api_key = env.get(cfg.key_env) if cfg.key_env else None
            providers.append(HttpProvider(
                cfg.name, cfg.endpoint,
                style="score" if cfg.kind == "http-score" else "label",
                api_key=api_key, rate_limit_per_s=cfg.rate_limit_per_s,
                retries=cfg.retries))
        else:
            raise ValueError(f"unknown provider kind {cfg.kind!r}")
    return providers
