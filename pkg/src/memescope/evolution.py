"""Meme-variant and influencer discovery via embedding regularities.

Visual route: images whose cosine to an origin meme falls in a half-open
band are variant candidates; for each variant, candidate influencers are
ranked by the cosine between the (renormalized) origin+candidate sum and
the variant, after masking off near-duplicates of the variant. Triplets
scoring below the acceptance threshold are discarded.

Visual-linguistic route: a 0.2/0.8 image/text fusion per pre-selected
entity retrieves the top-2 images, and the one whose perceptual-hash
group appears in more posts wins.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .store import EmbeddingStore, Modality, SearchHits, cosine
from .vecops import cross_modal_fuse


@dataclass(frozen=True)
class EvolutionThresholds:
    variant_lo: float
    variant_hi: float
    influencer_mask_hi: float | None = None  # defaults to variant_hi
    triplet_accept_lo: float = 0.94
    k: int = 10

    def __post_init__(self):
        if not -1.0 <= self.variant_lo < self.variant_hi <= 1.0:
            raise ValueError("need -1 <= variant_lo < variant_hi <= 1")
        if not 0.0 < self.triplet_accept_lo <= 1.0:
            raise ValueError("triplet_accept_lo must be in (0, 1]")

    @property
    def mask_hi(self) -> float:
        return self.influencer_mask_hi if self.influencer_mask_hi is not None \
            else self.variant_hi


# Tuned bands for the two case-study memes; other origins need their own.
PRESETS: dict[str, EvolutionThresholds] = {
    "happy-merchant": EvolutionThresholds(
        variant_lo=0.85, variant_hi=0.91,
        influencer_mask_hi=0.91, triplet_accept_lo=0.94),
    "pepe": EvolutionThresholds(
        variant_lo=0.93, variant_hi=0.95,
        influencer_mask_hi=0.96, triplet_accept_lo=0.89),
}


@dataclass(frozen=True)
class VariantTriplet:
    origin_id: int
    variant_id: int
    influencer_id: int
    sim_origin_variant: float
    sim_sum_variant: float
    influencer_rank: int


@dataclass
class InfluencerSearch:
    triplets: list[VariantTriplet]
    reason: str | None = None  # set when no candidate survived masking


class EntityCategory(str, Enum):
    PEOPLE = "People"
    GPE = "GPE"
    NORP = "NORP"
    ORG = "ORG"


@dataclass(frozen=True)
class EntityInfluencer:
    surface: str
    category: EntityCategory
    text_id: int


@dataclass(frozen=True)
class EntityVariant:
    entity: EntityInfluencer
    variant_id: int
    similarity: float
    post_count: int


def find_variants(origin_id: int, thresholds: EvolutionThresholds,
                  store: EmbeddingStore) -> SearchHits:
    """Images in the variant band around the origin, origin excluded."""
    if store.modality(origin_id) != Modality.IMAGE:
        raise ValueError(f"origin {origin_id} is not an image")
    return store.band_query(store.vector(origin_id),
                            thresholds.variant_lo, thresholds.variant_hi,
                            modality=Modality.IMAGE, exclude={origin_id})


def find_influencers(origin_id: int, variant_id: int,
                     thresholds: EvolutionThresholds, store: EmbeddingStore,
                     dedup_by_phash: bool = False) -> InfluencerSearch:
    """Top-k influencer candidates for one (origin, variant) pair.

    Candidates too similar to the variant are masked off first; surviving
    ones are ranked by cos(normalize(e_origin + e_candidate), e_variant)
    and triplets under the acceptance threshold are dropped.
    """
    for rid in (origin_id, variant_id):
        if store.modality(rid) != Modality.IMAGE:
            raise ValueError(f"record {rid} is not an image")
    origin_vec = store.vector(origin_id).astype(np.float64)
    variant_vec = store.vector(variant_id).astype(np.float64)
    sim_ov = cosine(origin_vec, variant_vec)

    image_mask = store.modalities == Modality.IMAGE
    image_mask &= (store.ids != np.uint64(origin_id)) & (store.ids != np.uint64(variant_id))
    sims_to_variant = np.clip(store.vectors64 @ variant_vec, -1.0, 1.0)
    candidate_mask = image_mask & (sims_to_variant <= thresholds.mask_hi)
    if not candidate_mask.any():
        return InfluencerSearch([], reason="no candidate survives masking")

    if dedup_by_phash:
        candidate_mask = _dedup_mask(store, candidate_mask)

    cand_ids = store.ids[candidate_mask]
    # unit vectors: cos(o+c, v) = (o.v + c.v) / sqrt(2 + 2 o.c)
    sims_to_origin = np.clip(store.vectors64 @ origin_vec, -1.0, 1.0)
    norms_sq = 2.0 + 2.0 * sims_to_origin[candidate_mask]
    degenerate = norms_sq <= 1e-12  # candidate antipodal to the origin
    norms = np.sqrt(np.where(degenerate, 1.0, norms_sq))
    scores = np.clip((sim_ov + sims_to_variant[candidate_mask]) / norms, -1.0, 1.0)
    scores[degenerate] = -1.0

    order = np.lexsort((cand_ids, -scores))[: thresholds.k]
    triplets = []
    for rank, idx in enumerate(order, start=1):
        score = float(scores[idx])
        if score < thresholds.triplet_accept_lo:
            continue
        assert score >= thresholds.triplet_accept_lo
        triplets.append(VariantTriplet(
            origin_id=origin_id, variant_id=variant_id,
            influencer_id=int(cand_ids[idx]),
            sim_origin_variant=sim_ov, sim_sum_variant=score,
            influencer_rank=rank))
    return InfluencerSearch(triplets)


def _dedup_mask(store: EmbeddingStore, mask: np.ndarray) -> np.ndarray:
    """Keep only the lowest-id image per phash group among masked candidates."""
    seen: set[str] = set()
    out = mask.copy()
    for pos in np.flatnonzero(mask):
        rid = int(store.ids[pos])
        ph = store.metadata(rid).phash
        if ph is None:
            continue
        if ph in seen:
            out[pos] = False
        else:
            seen.add(ph)
    return out


def discover_triplets(origin_id: int, thresholds: EvolutionThresholds,
                      store: EmbeddingStore,
                      dedup_by_phash: bool = False) -> list[VariantTriplet]:
    """Full visual pipeline: variants in band, then influencers per variant."""
    triplets: list[VariantTriplet] = []
    for hit in find_variants(origin_id, thresholds, store):
        assert thresholds.variant_lo <= hit.score < thresholds.variant_hi
        result = find_influencers(origin_id, hit.id, thresholds, store,
                                  dedup_by_phash=dedup_by_phash)
        triplets.extend(result.triplets)
    return triplets


def entity_variants(origin_id: int, entities: list[EntityInfluencer],
                    store: EmbeddingStore, popularity: Mapping[int, int],
                    k: int = 2,
                    fuse_weights: tuple[float, float] = (0.2, 0.8)) -> list[EntityVariant]:
    """Per-entity directed variant: fuse origin with the entity text, take the
    top-k images, return the most popular one (post count of its phash
    group); ties go to the higher similarity."""
    if store.modality(origin_id) != Modality.IMAGE:
        raise ValueError(f"origin {origin_id} is not an image")
    origin_vec = store.vector(origin_id)
    out = []
    for entity in entities:
        if store.modality(entity.text_id) != Modality.TEXT:
            raise ValueError(f"entity {entity.surface!r}: {entity.text_id} is not a text")
        fused = cross_modal_fuse(origin_vec, store.vector(entity.text_id),
                                 weights=fuse_weights)
        hits = store.top_k(fused, k, modality=Modality.IMAGE, exclude={origin_id})
        best = max(hits, key=lambda h: (popularity.get(h.id, 0), h.score, -h.id))
        out.append(EntityVariant(entity=entity, variant_id=best.id,
                                 similarity=best.score,
                                 post_count=popularity.get(best.id, 0)))
    return out


@dataclass
class SweepSheet:
    threshold: float
    step: float
    sample_ids: list[int]
    similarities: list[float]
    eligible: int

    def to_json(self) -> str:
        return json.dumps({
            "threshold": self.threshold, "step": self.step,
            "samples": [{"id": i, "similarity": s}
                        for i, s in zip(self.sample_ids, self.similarities)],
            "eligible": self.eligible,
        }, sort_keys=True)


def sweep(origin_id: int, store: EmbeddingStore, lo_from: float = 0.81,
          lo_to: float = 0.95, step: float = 0.01, sample_n: int = 16,
          seed: int = 0) -> list[SweepSheet]:
    """Seeded threshold sweep: for each threshold t, sample up to sample_n
    images with cosine in [t, t+step) for manual labeling."""
    if step <= 0:
        raise ValueError("step must be > 0")
    if store.modality(origin_id) != Modality.IMAGE:
        raise ValueError(f"origin {origin_id} is not an image")
    steps = int(round((lo_to - lo_from) / step)) + 1
    sheets = []
    for i in range(steps):
        t = lo_from + i * step
        hits = store.band_query(store.vector(origin_id), t, min(t + step, 1.0),
                                modality=Modality.IMAGE, exclude={origin_id})
        rng = random.Random(f"{seed}:{t:.6f}")
        chosen = sorted(rng.sample(range(len(hits)), min(sample_n, len(hits))))
        sheets.append(SweepSheet(
            threshold=round(t, 6), step=step,
            sample_ids=[hits[j].id for j in chosen],
            similarities=[hits[j].score for j in chosen],
            eligible=len(hits)))
    return sheets


def false_positive_rates(sheets: list[SweepSheet],
                         labels: Mapping[int, str]) -> list[dict]:
    """Percent of labeled samples per threshold marked fp (labels: tp | fp)."""
    rows = []
    for sheet in sheets:
        labeled = [labels[i] for i in sheet.sample_ids if i in labels]
        bad = [v for v in labeled if v not in ("tp", "fp")]
        if bad:
            raise ValueError(f"labels must be tp or fp, got {bad[0]!r}")
        fp = sum(1 for v in labeled if v == "fp")
        rows.append({
            "threshold": sheet.threshold,
            "labeled": len(labeled),
            "false_positive_pct": 100.0 * fp / len(labeled) if labeled else None,
        })
    return rows
