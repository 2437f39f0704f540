"""Run configuration: TOML or JSON files plus dotted-key overrides."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .clustering import ClusterSource
from .hate import ProviderConfig


class ConfigError(ValueError):
    pass


@dataclass
class ClusterConfig:
    eps: float | None = None          # mandatory before the cluster stage runs
    min_samples: int | None = None
    source: ClusterSource = ClusterSource.FUSED
    min_size: int = 30

    def require(self) -> None:
        if self.eps is None:
            raise ConfigError("missing config key: cluster.eps")
        if self.min_samples is None:
            raise ConfigError("missing config key: cluster.min_samples")


@dataclass
class AnnotationConfig:
    top_posts: int = 300
    candidates: int = 3


@dataclass
class HateConfig:
    providers: list[ProviderConfig] = field(
        default_factory=lambda: [ProviderConfig(name="stub", kind="stub")])
    cache: str | None = None


@dataclass
class SearchConfig:
    origin: int
    preset: str | None = None
    variant_lo: float | None = None
    variant_hi: float | None = None
    mask_hi: float | None = None
    accept_lo: float | None = None
    k: int = 10


@dataclass
class EntitySearchConfig:
    origin: int
    entity_file: str | None = None  # "surface<TAB>category" lines; defaults per line


@dataclass
class Config:
    embeddings: str = ""
    metadata: str | None = None
    out_dir: str = "run"
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    annotation: AnnotationConfig = field(default_factory=AnnotationConfig)
    hate: HateConfig = field(default_factory=HateConfig)
    community_percentile: float = 98.0
    searches: list[SearchConfig] = field(default_factory=list)
    entity_search: EntitySearchConfig | None = None
    host: str = "127.0.0.1"
    port: int = 8000

    def snapshot(self) -> dict:
        return json.loads(json.dumps(self, default=_plain, sort_keys=True))


def _plain(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return {k: getattr(obj, k) for k in obj.__dataclass_fields__}
    if isinstance(obj, ClusterSource):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _read_file(path: Path) -> dict:
    if path.suffix == ".toml":
        with path.open("rb") as fh:
            return tomllib.load(fh)
    if path.suffix == ".json":
        return json.loads(path.read_text(encoding="utf-8"))
    raise ConfigError(f"unsupported config format: {path.suffix!r} (use .toml or .json)")


def load_config(path: str | Path | None = None,
                overrides: dict[str, str] | None = None) -> Config:
    """Build a Config from an optional file plus dotted-key overrides
    (e.g. {"cluster.eps": "0.3"})."""
    raw: dict = {}
    if path is not None:
        raw = _read_file(Path(path))
    for key, value in (overrides or {}).items():
        _set_dotted(raw, key, value)
    return _from_raw(raw)


def _set_dotted(raw: dict, dotted: str, value: str) -> None:
    parts = dotted.split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted!r} conflicts with config structure")
    node[parts[-1]] = _coerce(value)


def _coerce(value: str):
    if isinstance(value, (int, float, bool, list, dict)):
        return value
    try:
        return json.loads(value)
    except (json.JSONDecodeError, TypeError):
        return value


def _from_raw(raw: dict) -> Config:
    cfg = Config()
    corpus = raw.get("corpus", {})
    # flat keys (typical for --set overrides) win over sectioned ones
    cfg.embeddings = raw.get("embeddings", corpus.get("embeddings", ""))
    cfg.metadata = raw.get("metadata", corpus.get("metadata"))
    cfg.out_dir = raw.get("out_dir", raw.get("run", {}).get("out_dir", "run"))

    c = raw.get("cluster", {})
    cfg.cluster = ClusterConfig(
        eps=c.get("eps"), min_samples=c.get("min_samples"),
        source=ClusterSource(c.get("source", "fused")),
        min_size=c.get("min_size", 30))

    a = raw.get("annotation", {})
    cfg.annotation = AnnotationConfig(top_posts=a.get("top_posts", 300),
                                      candidates=a.get("candidates", 3))

    h = raw.get("hate", {})
    providers = [
        ProviderConfig(
            name=p["name"], kind=p.get("kind", "stub"),
            endpoint=p.get("endpoint", ""), key_env=p.get("key_env"),
            rate_limit_per_s=p.get("rate_limit_per_s", 0.0),
            retries=p.get("retries", 2), lexicon=p.get("lexicon", []))
        for p in h.get("providers", [])
    ] or [ProviderConfig(name="stub", kind="stub")]
    cfg.hate = HateConfig(providers=providers, cache=h.get("cache"))

    cfg.community_percentile = raw.get("community", {}).get("percentile", 98.0)

    cfg.searches = [
        SearchConfig(origin=s["origin"], preset=s.get("preset"),
                     variant_lo=s.get("variant_lo"), variant_hi=s.get("variant_hi"),
                     mask_hi=s.get("mask_hi"), accept_lo=s.get("accept_lo"),
                     k=s.get("k", 10))
        for s in raw.get("evolution", {}).get("searches", [])
    ]

    ent = raw.get("entities")
    if ent:
        cfg.entity_search = EntitySearchConfig(origin=ent["origin"],
                                               entity_file=ent.get("file"))

    serve = raw.get("serve", {})
    cfg.host = serve.get("host", "127.0.0.1")
    cfg.port = serve.get("port", 8000)
    return cfg
