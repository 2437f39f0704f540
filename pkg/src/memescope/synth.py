"""Deterministic synthetic corpus generator with planted ground truth.

Every pipeline stage is testable without real data or models: the
generator plants clusters on the unit sphere, aligned image/text pairs,
variant triplets built as normalize(alpha*origin + (1-alpha)*influencer),
and entity fusions at the cross-modal weights, then records the
construction in a manifest that downstream tests use as the oracle.

Noise is angular (von-Mises style): a vector is rotated by |N(0, sigma)|
radians toward a random tangent, so spreads read directly as cosine
bands on the sphere. Output is bit-reproducible per seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .store import Modality, write_emb1

_THEME_POOL = [
    "merchant", "frog", "election", "border", "flag", "crusade", "bank",
    "media", "country", "empire", "church", "market", "senate", "castle",
    "harvest", "winter", "network", "forum", "anthem", "parade", "treaty",
    "colony", "doctrine", "tribunal", "province", "brigade", "bazaar",
    "monarch", "congress", "frontier", "chapel", "ledger", "villager",
    "minister", "festival", "harbor", "garrison", "scroll", "beacon",
    "archive",
]
_FILLER_POOL = [
    "thread", "poster", "reply", "image", "board", "comment", "story",
    "opinion", "news", "debate", "video", "link", "screenshot", "joke",
    "take", "source", "claim", "question", "answer", "post",
]
_HATE_PHRASES = ["kill all", "subhuman", "deport all", "death to"]
_ENTITY_SURFACES = [
    "trump", "hillary", "putin", "trudeau", "bernie", "obama", "macron",
    "merkel", "farage", "assad", "america", "germany", "canada", "russia",
    "france", "israel", "mexico", "sweden", "turkey", "china", "muslims",
    "christians", "germans", "americans", "canadians", "russians",
    "reddit", "twitter", "facebook", "cnn",
]
_ENTITY_CATEGORIES = ["People"] * 10 + ["GPE"] * 10 + ["NORP"] * 6 + ["ORG"] * 4


@dataclass
class ClusterBlueprint:
    count: int = 8
    size: int = 150
    spread: float = 0.08          # angular std around the center, radians
    hate_fraction_max: float = 0.4


@dataclass
class TripletBlueprint:
    count: int = 200
    alpha: float = 0.5
    noise: float = 0.01           # angular std on the planted variant
    band_margin: float = 0.02


@dataclass
class EntityBlueprint:
    count: int = 30
    weights: tuple[float, float] = (0.2, 0.8)
    duplicated: int = 5           # entities whose winner is a popular duplicate group
    dup_group_size: int = 7
    base_posts: int = 1


@dataclass
class SynthSpec:
    seed: int = 7
    dimension: int = 512
    clusters: ClusterBlueprint = field(default_factory=ClusterBlueprint)
    pair_noise: float = 0.03      # image/text alignment noise, radians
    triplets: TripletBlueprint = field(default_factory=TripletBlueprint)
    entities: EntityBlueprint = field(default_factory=EntityBlueprint)
    background_posts: int = 8269  # default spec lands at ~19.9k records
    timestamp_range: tuple[int, int] = (1467244800, 1501459200)  # 2016-06-30..2017-07-31

    def validate(self) -> None:
        for name, val in (("cluster spread", self.clusters.spread),
                          ("pair noise", self.pair_noise),
                          ("triplet noise", self.triplets.noise)):
            if val < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.clusters.count and self.clusters.size < 1:
            raise ValueError("cluster size must be >= 1")
        if self.entities.count > len(_ENTITY_SURFACES):
            raise ValueError(f"at most {len(_ENTITY_SURFACES)} entities supported")
        if self.entities.duplicated > self.entities.count:
            raise ValueError("more duplicated groups than entities")


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _perturb(rng: np.random.Generator, v: np.ndarray, angle_std: float) -> np.ndarray:
    """Rotate v by |N(0, angle_std)| radians toward a random tangent."""
    if angle_std == 0.0:
        return v.copy()
    theta = abs(rng.normal(0.0, angle_std))
    t = rng.standard_normal(v.shape[0])
    t -= (t @ v) * v
    t /= np.linalg.norm(t)
    return np.cos(theta) * v + np.sin(theta) * t


class _Corpus:
    """Accumulates records and metadata rows with dense ids."""

    def __init__(self, spec: SynthSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.ids: list[int] = []
        self.modalities: list[int] = []
        self.timestamps: list[int] = []
        self.vectors: list[np.ndarray] = []
        self.meta: list[dict] = []
        self._next_id = 1
        self._next_post = 1

    def _ts(self) -> int:
        lo, hi = self.spec.timestamp_range
        return int(self.rng.integers(lo, hi))

    def add_record(self, modality: Modality, vector: np.ndarray, ts: int,
                   post_id: int, text: str | None = None,
                   phash: str | None = None) -> int:
        rid = self._next_id
        self._next_id += 1
        self.ids.append(rid)
        self.modalities.append(int(modality))
        self.timestamps.append(ts)
        self.vectors.append(vector.astype(np.float32))
        row = {"id": rid,
               "kind": "image" if modality == Modality.IMAGE else "text",
               "post_id": post_id, "thread_id": post_id // 20}
        if modality == Modality.IMAGE:
            row["media_path"] = f"media/{rid}.png"
            row["phash"] = phash if phash is not None else f"{rid:016x}"
        else:
            row["text"] = text or ""
        self.meta.append(row)
        return rid

    def add_post(self, image_vec: np.ndarray, text_vec: np.ndarray, text: str,
                 phash: str | None = None, ts: int | None = None) -> tuple[int, int, int]:
        post_id = self._next_post
        self._next_post += 1
        ts = self._ts() if ts is None else ts
        img = self.add_record(Modality.IMAGE, image_vec, ts, post_id, phash=phash)
        txt = self.add_record(Modality.TEXT, text_vec, ts, post_id, text=text)
        return img, txt, post_id

    def add_text_post(self, text_vec: np.ndarray, text: str) -> tuple[int, int]:
        post_id = self._next_post
        self._next_post += 1
        txt = self.add_record(Modality.TEXT, text_vec, self._ts(), post_id, text=text)
        return txt, post_id


def _words(rng: np.random.Generator, theme: list[str], n: int,
           theme_weight: float = 0.0) -> str:
    out = []
    for _ in range(n):
        if theme and rng.random() < theme_weight:
            out.append(theme[int(rng.integers(0, len(theme)))])
        else:
            out.append(_FILLER_POOL[int(rng.integers(0, len(_FILLER_POOL)))])
    return " ".join(out)


def generate(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Emit EMB1 + metadata + ground-truth manifest under out_dir.

    Returns the manifest (also written as ground_truth.json).
    """
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    corpus = _Corpus(spec, rng)
    dim = spec.dimension
    manifest: dict = {"seed": spec.seed, "dimension": dim}

    # Origin meme: the anchor for triplet and entity planting.
    origin_vec = _unit(rng, dim)
    origin_img, _, _ = corpus.add_post(origin_vec, _perturb(rng, origin_vec, spec.pair_noise),
                                       "origin meme thread")
    manifest["origin_id"] = origin_img

    # Planted clusters: members share a center direction; texts align with
    # their images so the fused space carries the same structure.
    cluster_entries = []
    fused_by_cluster: list[list[np.ndarray]] = []
    for ci in range(spec.clusters.count):
        center = _unit(rng, dim)
        theme = [_THEME_POOL[int(i)] for i in rng.choice(len(_THEME_POOL), 3, replace=False)]
        hate_frac = float(rng.uniform(0.0, spec.clusters.hate_fraction_max))
        hateful_count = int(round(hate_frac * spec.clusters.size))
        phrase = _HATE_PHRASES[ci % len(_HATE_PHRASES)]
        image_ids, text_ids, post_ids, hateful_ids = [], [], [], []
        fused = []
        for mi in range(spec.clusters.size):
            img_vec = _perturb(rng, center, spec.clusters.spread)
            txt_vec = _perturb(rng, img_vec, spec.pair_noise)
            text = _words(rng, theme, 10, theme_weight=0.7)
            if mi < hateful_count:
                text = f"{text} {phrase} {theme[0]}"
            img, txt, post = corpus.add_post(img_vec, txt_vec, text)
            image_ids.append(img)
            text_ids.append(txt)
            post_ids.append(post)
            if mi < hateful_count:
                hateful_ids.append(txt)
            f = img_vec + txt_vec
            fused.append(f / np.linalg.norm(f))
        fused_by_cluster.append(fused)
        cluster_entries.append({
            "theme": theme, "image_ids": image_ids, "text_ids": text_ids,
            "post_ids": post_ids, "hateful_text_ids": hateful_ids,
            "hateful_count": hateful_count, "size": spec.clusters.size,
            "hate_phrase": phrase if hateful_count else None,
        })
    manifest["clusters"] = cluster_entries

    # Variant triplets: v = normalize(alpha*o + (1-alpha)*i), then noise.
    tb = spec.triplets
    triplet_items = []
    exact_sims = []
    for _ in range(tb.count):
        infl_vec = _unit(rng, dim)
        mix = tb.alpha * origin_vec + (1.0 - tb.alpha) * infl_vec
        exact = mix / np.linalg.norm(mix)
        exact_sims.append(float(exact @ origin_vec))
        var_vec = _perturb(rng, exact, tb.noise)
        infl_img, _, _ = corpus.add_post(infl_vec, _perturb(rng, infl_vec, spec.pair_noise),
                                         _words(rng, [], 8))
        var_img, _, _ = corpus.add_post(var_vec, _perturb(rng, var_vec, spec.pair_noise),
                                        _words(rng, [], 8))
        triplet_items.append({"influencer_id": infl_img, "variant_id": var_img,
                              "sim_exact": exact_sims[-1]})
    if triplet_items:
        manifest["triplets"] = {
            "alpha": tb.alpha, "noise": tb.noise, "items": triplet_items,
            "band": [min(exact_sims) - tb.band_margin,
                     min(max(exact_sims) + tb.band_margin, 1.0)],
            "mask_hi": 0.9, "accept_lo": 0.94,
        }

    # Entity fusions: u = normalize(w_img*o + w_txt*t). For "duplicated"
    # entities a slightly-off copy group with more posts must win top-2
    # through the popularity rule.
    eb = spec.entities
    entity_items = []
    for ei in range(eb.count):
        surface = _ENTITY_SURFACES[ei]
        category = _ENTITY_CATEGORIES[ei]
        text_vec = _unit(rng, dim)
        text_id, _ = corpus.add_text_post(text_vec, surface)
        fused = eb.weights[0] * origin_vec + eb.weights[1] * text_vec
        fused /= np.linalg.norm(fused)

        base_phash = f"e{ei:015x}"
        base_ids = []
        for _ in range(eb.base_posts):
            img, _, _ = corpus.add_post(fused, _perturb(rng, fused, spec.pair_noise),
                                        _words(rng, [surface], 8, theme_weight=0.4),
                                        phash=base_phash)
            base_ids.append(img)
        entry = {"surface": surface, "category": category, "text_id": text_id,
                 "rank1_group": base_ids, "expected_group": base_ids,
                 "popular_duplicate": False}

        if ei < eb.duplicated:
            dup_vec = _perturb(rng, fused, 0.12)  # clearly rank-2, inside top-2
            dup_phash = f"d{ei:015x}"
            dup_ids = []
            for _ in range(eb.dup_group_size):
                img, _, _ = corpus.add_post(dup_vec,
                                            _perturb(rng, dup_vec, spec.pair_noise),
                                            _words(rng, [surface], 8, theme_weight=0.4),
                                            phash=dup_phash)
                dup_ids.append(img)
            entry["dup_group"] = dup_ids
            entry["expected_group"] = dup_ids
            entry["popular_duplicate"] = True
        entity_items.append(entry)
    if entity_items:
        manifest["entities"] = {"weights": list(eb.weights), "items": entity_items}

    # Background posts: isotropic noise the clustering must reject.
    for _ in range(spec.background_posts):
        img_vec = _unit(rng, dim)
        corpus.add_post(img_vec, _perturb(rng, img_vec, spec.pair_noise),
                        _words(rng, [], 9))

    # DBSCAN parameters that provably recover the blueprint: every
    # intra-cluster fused pair sits below eps, all cross pairs far above.
    if spec.clusters.count:
        max_intra = 0.0
        for fused in fused_by_cluster:
            mat = np.stack(fused)
            gram = mat @ mat.T
            d2 = np.maximum(2.0 - 2.0 * gram, 0.0)
            max_intra = max(max_intra, float(np.sqrt(d2.max())))
        manifest["dbscan"] = {"eps": round(1.1 * max_intra, 6), "min_samples": 3,
                              "source": "fused"}

    manifest["counts"] = {
        "records": len(corpus.ids),
        "posts": corpus._next_post - 1,
        "images": sum(1 for m in corpus.modalities if m == int(Modality.IMAGE)),
        "texts": sum(1 for m in corpus.modalities if m == int(Modality.TEXT)),
    }

    emb_path = out_dir / "corpus.emb1"
    meta_path = out_dir / "corpus.meta.jsonl"
    manifest_path = out_dir / "ground_truth.json"
    write_emb1(emb_path, corpus.ids, corpus.modalities, corpus.timestamps,
               np.stack(corpus.vectors))
    with meta_path.open("w", encoding="utf-8") as fh:
        for row in corpus.meta:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                             encoding="utf-8")
    return manifest
