"""Embedding arithmetic: weighted combination, fusion, and retrieval checks.

Combinations land near embeddings of semantically combined content, so a
weighted sum followed by renormalization is the workhorse for both the
within-modality (0.5/0.5) and cross-modality (0.2/0.8) operations. Only
direction matters for cosine retrieval; renormalizing keeps scores
comparable across queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .store import EmbeddingStore, Modality

IMAGE_TEXT_FUSE_WEIGHTS = (0.5, 0.5)
CROSS_MODAL_WEIGHTS = (0.2, 0.8)

_DEGENERATE_EPS = 1e-12


class DegenerateCombinationError(ValueError):
    """The weighted sum collapsed to the zero vector."""


@dataclass
class CombineSpec:
    """Weighted terms over record ids and/or raw vectors."""

    terms: list[tuple[int | np.ndarray, float]]
    renormalize: bool = True

    def validate(self) -> None:
        if not self.terms:
            raise ValueError("combine spec needs at least one term")
        weights = [w for _, w in self.terms]
        if not all(np.isfinite(weights)):
            raise ValueError("combine weights must be finite")
        if not any(w != 0.0 for w in weights):
            raise ValueError("combine spec needs a nonzero weight")


@dataclass
class PairedCorpus:
    """Image/text id pairs used by the retrieval evaluation harness."""

    pairs: list[tuple[int, int]] = field(default_factory=list)

    def validate(self, store: EmbeddingStore) -> None:
        seen = set()
        for image_id, text_id in self.pairs:
            if image_id in seen:
                raise ValueError(f"duplicate image id {image_id} in paired corpus")
            seen.add(image_id)
            if image_id not in store or text_id not in store:
                raise ValueError(f"pair ({image_id}, {text_id}) does not resolve")


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm < _DEGENERATE_EPS:
        raise DegenerateCombinationError("degenerate combination: zero vector")
    return v / norm


def combine(spec: CombineSpec, store: EmbeddingStore | None = None) -> np.ndarray:
    """Sum weight_i * vector_i over the spec terms.

    Terms given as ids are resolved through the store; raw vectors are
    used as-is. The result is unit-normalized unless disabled.
    """
    spec.validate()
    acc = None
    for term, weight in spec.terms:
        if isinstance(term, (int, np.integer)):
            if store is None:
                raise ValueError("combine spec references ids but no store given")
            vec = store.vector(int(term)).astype(np.float64)
        else:
            vec = np.asarray(term, dtype=np.float64)
        acc = weight * vec if acc is None else acc + weight * vec
    if np.linalg.norm(acc) < _DEGENERATE_EPS:
        raise DegenerateCombinationError("degenerate combination: zero vector")
    return _normalize(acc) if spec.renormalize else acc


def fuse_pair(image_id: int, text_id: int, store: EmbeddingStore) -> np.ndarray:
    """Equal-weight fusion of an image/text pair, renormalized.

    Commutative in its arguments: fuse(i, t) and fuse(t, i) have cosine 1.
    """
    if store.modality(image_id) != Modality.IMAGE:
        raise ValueError(f"record {image_id} is not an image")
    if store.modality(text_id) != Modality.TEXT:
        raise ValueError(f"record {text_id} is not a text")
    w_img, w_txt = IMAGE_TEXT_FUSE_WEIGHTS
    return combine(CombineSpec([(image_id, w_img), (text_id, w_txt)]), store)


def fuse_vectors(image_vec, text_vec) -> np.ndarray:
    """Equal-weight fusion of two raw vectors (one fused point per pair)."""
    w_img, w_txt = IMAGE_TEXT_FUSE_WEIGHTS
    return combine(CombineSpec([(np.asarray(image_vec), w_img),
                                (np.asarray(text_vec), w_txt)]))


def cross_modal_fuse(image_vec, text_vec,
                     weights: tuple[float, float] = CROSS_MODAL_WEIGHTS) -> np.ndarray:
    """Weighted image+text fusion; text dominates at the default 0.2/0.8."""
    w_img, w_txt = weights
    return combine(CombineSpec([(np.asarray(image_vec), w_img),
                                (np.asarray(text_vec), w_txt)]))


def recall_at_k(corpus: PairedCorpus, k: int, store: EmbeddingStore) -> float:
    """Fraction of images whose paired text lands in their top-k texts.

    Candidate texts are the corpus texts. Non-decreasing in k and exactly
    1.0 once k reaches the candidate count.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    corpus.validate(store)
    if not corpus.pairs:
        raise ValueError("paired corpus is empty")
    text_ids = sorted({text_id for _, text_id in corpus.pairs})
    positions = [store.position(t) for t in text_ids]
    text_matrix = store.vectors[positions].astype(np.float64)
    text_id_arr = np.asarray(text_ids, dtype=np.uint64)

    hits = 0
    for image_id, text_id in corpus.pairs:
        scores = text_matrix @ store.vector(image_id).astype(np.float64)
        order = np.lexsort((text_id_arr, -scores))[: min(k, len(text_ids))]
        if text_id in {int(text_id_arr[i]) for i in order}:
            hits += 1
    return hits / len(corpus.pairs)


def semantic_capture_check(origin_id: int, influencer_id: int, ground_truth_id: int,
                           store: EmbeddingStore, k: int = 3) -> bool:
    """True when the 0.5/0.5 summation retrieves the ground-truth image in top-k."""
    if store.modality(ground_truth_id) != Modality.IMAGE:
        raise ValueError(f"ground truth {ground_truth_id} is not an image")
    query = combine(CombineSpec([(origin_id, 0.5), (influencer_id, 0.5)]), store)
    hits = store.top_k(query, k, modality=Modality.IMAGE,
                       exclude={origin_id, influencer_id})
    return any(h.id == ground_truth_id for h in hits)
