"""End-to-end analysis runs: ingest through communities, plus evolution.

Artifacts land under a per-run directory and are immutable once written;
every pipeline command also emits a run manifest with SHA-256 digests of
its inputs and outputs, so identical configs can be verified to produce
bit-identical artifacts. A stage failure aborts with the stage name and
leaves earlier artifacts in place.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import annotation as annot
from . import clustering, communities, evolution, hate, temporal, vecops
from .config import Config
from .store import EmbeddingStore, Modality

STAGES = ("ingest", "fuse", "cluster", "annotate", "score", "communities",
          "evolution", "entities")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "command": self.command, "config": self.config,
            "inputs": self.inputs, "outputs": self.outputs,
            "wall_time_s": self.wall_time_s,
        }, sort_keys=True, indent=2) + "\n"


@dataclass
class RunResult:
    out_dir: Path
    manifest: RunManifest
    store: EmbeddingStore
    clusters: list[clustering.Cluster] = field(default_factory=list)
    centroids: list[clustering.Centroid] = field(default_factory=list)
    annotations: list[annot.Annotation] = field(default_factory=list)
    scores: dict[int, hate.ClusterScore] = field(default_factory=dict)
    partition: communities.CommunityPartition | None = None
    triplets: list[evolution.VariantTriplet] = field(default_factory=list)
    entity_variants: list[evolution.EntityVariant] = field(default_factory=list)


class _ArtifactWriter:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.digests: dict[str, str] = {}

    def write(self, relpath: str, text: str) -> Path:
        path = self.out_dir / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.digests[relpath] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return path


def _cluster_points(store: EmbeddingStore, source: clustering.ClusterSource):
    """Vectors and member ids for the configured clustering source."""
    if source == clustering.ClusterSource.FUSED:
        if not store.pairs:
            raise ValueError("fused clustering needs post pairs in the metadata")
        points = np.stack([
            vecops.fuse_vectors(store.vector(p.image_id), store.vector(p.text_id))
            for p in store.pairs
        ])
        ids = np.asarray([p.post_id for p in store.pairs], dtype=np.int64)
        return points, ids
    modality = Modality.IMAGE if source == clustering.ClusterSource.IMAGE else Modality.TEXT
    mask = store.modalities == int(modality)
    return store.vectors[mask].astype(np.float64), store.ids[mask].astype(np.int64)


def _cluster_texts(store: EmbeddingStore, source: clustering.ClusterSource,
                   member_ids) -> list[str]:
    """Texts of the posts belonging to one cluster."""
    if source == clustering.ClusterSource.FUSED:
        by_post = {p.post_id: p.text_id for p in store.pairs}
        return [store.text(by_post[m]) or "" for m in member_ids]
    if source == clustering.ClusterSource.IMAGE:
        by_image: dict[int, list[int]] = {}
        for p in store.pairs:
            by_image.setdefault(p.image_id, []).append(p.text_id)
        return [store.text(t) or "" for m in member_ids for t in by_image.get(m, [])]
    return [store.text(m) or "" for m in member_ids]


def phash_popularity(store: EmbeddingStore) -> dict[int, int]:
    """image id -> number of posts whose image shares its phash group."""
    hashes = temporal.store_hashes(store)
    if not hashes:
        return {}
    groups = temporal.group_by_phash(hashes.keys(), hashes)
    posts_per_image: dict[int, int] = {}
    for p in store.pairs:
        posts_per_image[p.image_id] = posts_per_image.get(p.image_id, 0) + 1
    popularity = {}
    for g in groups:
        count = sum(posts_per_image.get(m, 0) for m in g.member_ids)
        for m in g.member_ids:
            popularity[m] = count
    return popularity


def resolve_thresholds(search) -> evolution.EvolutionThresholds:
    if search.preset:
        base = evolution.PRESETS[search.preset]
        return evolution.EvolutionThresholds(
            variant_lo=search.variant_lo if search.variant_lo is not None else base.variant_lo,
            variant_hi=search.variant_hi if search.variant_hi is not None else base.variant_hi,
            influencer_mask_hi=search.mask_hi if search.mask_hi is not None else base.mask_hi,
            triplet_accept_lo=search.accept_lo if search.accept_lo is not None
            else base.triplet_accept_lo,
            k=search.k)
    if search.variant_lo is None or search.variant_hi is None:
        raise ValueError("search needs a preset or explicit variant_lo/variant_hi")
    return evolution.EvolutionThresholds(
        variant_lo=search.variant_lo, variant_hi=search.variant_hi,
        influencer_mask_hi=search.mask_hi,
        triplet_accept_lo=search.accept_lo if search.accept_lo is not None else 0.94,
        k=search.k)


def load_entities(path: str | Path, store: EmbeddingStore) -> list[evolution.EntityInfluencer]:
    """Entity list: tab-separated ``surface  category  text_record_id`` lines."""
    entities = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected surface<TAB>category<TAB>id")
        surface, category, text_id = parts
        entities.append(evolution.EntityInfluencer(
            surface=surface, category=evolution.EntityCategory(category),
            text_id=int(text_id)))
    for e in entities:
        if e.text_id not in store:
            raise ValueError(f"entity {e.surface!r}: text id {e.text_id} not in store")
    return entities


def run_pipeline(config: Config, command: str = "run",
                 until: str = "entities") -> RunResult:
    """Execute the pipeline through ``until`` (a STAGES name), writing
    artifacts and a run manifest under config.out_dir."""
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    limit = STAGES.index(until)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = _ArtifactWriter(out_dir)
    started = time.monotonic()

    manifest = RunManifest(command=command, config=config.snapshot())
    stage = "ingest"
    try:
        store = EmbeddingStore.ingest(config.embeddings, config.metadata)
        manifest.inputs["embeddings"] = sha256_file(config.embeddings)
        if config.metadata:
            manifest.inputs["metadata"] = sha256_file(config.metadata)
        writer.write("ingest_report.json",
                     json.dumps(store.summary(), sort_keys=True, indent=2) + "\n")
        result = RunResult(out_dir=out_dir, manifest=manifest, store=store)

        if limit >= STAGES.index("cluster"):
            stage = "fuse"
            config.cluster.require()
            points, member_ids = _cluster_points(store, config.cluster.source)

            stage = "cluster"
            params = clustering.DbscanParams(eps=config.cluster.eps,
                                             min_samples=config.cluster.min_samples,
                                             source=config.cluster.source)
            cluster_result = clustering.dbscan(points, params, ids=member_ids)
            lines = [json.dumps({"id": c.id, "size": c.size,
                                 "member_ids": list(c.member_ids)}, sort_keys=True)
                     for c in cluster_result.clusters]
            writer.write("clusters.jsonl", "".join(line + "\n" for line in lines))
            writer.write("cluster_stats.json", json.dumps({
                "eps": config.cluster.eps, "min_samples": config.cluster.min_samples,
                "source": config.cluster.source.value,
                "points": len(points),
                "clusters": len(cluster_result.clusters),
                "noise_count": cluster_result.noise_count,
                "noise_fraction": cluster_result.noise_fraction,
                "clustered_fraction": cluster_result.clustered_fraction,
            }, sort_keys=True, indent=2) + "\n")

            result.clusters = clustering.filter_clusters(cluster_result,
                                                         config.cluster.min_size)
            id_to_pos = {int(m): i for i, m in enumerate(member_ids)}
            result.centroids = clustering.compute_centroids(
                result.clusters, lambda m: points[id_to_pos[m]])

        if limit >= STAGES.index("annotate"):
            stage = "annotate"
            result.annotations = [
                annot.annotate_cluster(c.vector, store, c.cluster_id,
                                       n=config.annotation.top_posts,
                                       top=config.annotation.candidates)
                for c in result.centroids
            ]
            lines = [json.dumps({
                "cluster_id": a.cluster_id, "phrase": a.phrase,
                "candidates": [{"phrase": p.text, "score": p.score}
                               for p in a.candidates],
                "method": a.method}, sort_keys=True) for a in result.annotations]
            writer.write("annotations.jsonl", "".join(line + "\n" for line in lines))

        if limit >= STAGES.index("score"):
            stage = "score"
            providers = hate.build_providers(config.hate.providers, dict(os.environ))
            cache = hate.ResultCache(config.hate.cache) if config.hate.cache else None
            for cluster in result.clusters:
                texts = _cluster_texts(store, config.cluster.source, cluster.member_ids)
                usable = [t for t in texts if t]
                hateful = sum(
                    1 for t in usable
                    if hate.is_hateful(hate.classify(t, providers, cache)))
                result.scores[cluster.id] = hate.ClusterScore(
                    cluster_id=cluster.id, hateful=hateful, total=len(texts))
            lines = [json.dumps({
                "cluster_id": s.cluster_id, "hateful": s.hateful, "total": s.total,
                "hate_score": s.hate_score}, sort_keys=True)
                for s in result.scores.values()]
            writer.write("cluster_scores.jsonl", "".join(line + "\n" for line in lines))

        if limit >= STAGES.index("communities"):
            stage = "communities"
            if len(result.centroids) >= 2:
                graph = communities.build_graph(result.centroids,
                                                config.community_percentile)
                partition = communities.louvain(graph)
                communities.score_communities(partition, result.scores)
                writer.write("graph.json", communities.graph_to_json(graph) + "\n")
                writer.write("graph.dot",
                             communities.graph_to_dot(graph, partition.assignment))
                writer.write("communities.json",
                             communities.partition_to_json(partition) + "\n")
                result.partition = partition
            else:
                writer.write("communities.json", json.dumps({
                    "modularity": 0.0, "pass_modularity": [],
                    "communities": [
                        {"id": 0, "clusters": [c.id for c in result.clusters],
                         "posts": sum(s.total for s in result.scores.values()),
                         "hateful": sum(s.hateful for s in result.scores.values()),
                         "hate_score": 0.0}
                    ] if result.clusters else [],
                }, sort_keys=True) + "\n")

        if limit >= STAGES.index("evolution") and config.searches:
            stage = "evolution"
            lines = []
            for search in config.searches:
                thresholds = resolve_thresholds(search)
                found = evolution.discover_triplets(search.origin, thresholds, store)
                result.triplets.extend(found)
                lines.extend(json.dumps({
                    "origin_id": t.origin_id, "variant_id": t.variant_id,
                    "influencer_id": t.influencer_id,
                    "sim_origin_variant": t.sim_origin_variant,
                    "sim_sum_variant": t.sim_sum_variant,
                    "rank": t.influencer_rank}, sort_keys=True) for t in found)
            writer.write("triplets.jsonl", "".join(line + "\n" for line in lines))

        if limit >= STAGES.index("entities") and config.entity_search:
            stage = "entities"
            entities = load_entities(config.entity_search.entity_file, store)
            popularity = phash_popularity(store)
            result.entity_variants = evolution.entity_variants(
                config.entity_search.origin, entities, store, popularity)
            writer.write("entity_variants.json", json.dumps([
                {"surface": v.entity.surface, "category": v.entity.category.value,
                 "text_id": v.entity.text_id, "variant_id": v.variant_id,
                 "similarity": v.similarity, "post_count": v.post_count}
                for v in result.entity_variants
            ], sort_keys=True, indent=2) + "\n")
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, exc) from exc

    manifest.outputs = dict(sorted(writer.digests.items()))
    manifest.wall_time_s = round(time.monotonic() - started, 3)
    (out_dir / "run_manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return result
