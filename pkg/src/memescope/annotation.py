"""Cluster annotation: document assembly, keyphrase ranking, phrase selection.

Each surviving cluster is labeled with a short phrase mined from the
textual posts closest to its centroid. The shipped ranker builds a token
co-occurrence graph and scores n-grams by PageRank mass; an adjective
followed by nouns is preferred for the final label, otherwise the top
candidate wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .store import EmbeddingStore, Modality

_DATA_DIR = Path(__file__).parent / "data"

COOCCURRENCE_WINDOW = 3
PAGERANK_DAMPING = 0.85
PAGERANK_TOL = 1e-6
MAX_PHRASE_TOKENS = 3

_NON_ALPHA = re.compile(r"[^a-z]+")

ADJ_SUFFIXES = ("ous", "ful", "ish")


@dataclass
class AnnotationDoc:
    cluster_id: int
    post_ids: list[int]
    token_groups: list[list[str]]  # one cleaned token list per post, rank order

    @property
    def tokens(self) -> list[str]:
        return [t for group in self.token_groups for t in group]


@dataclass(frozen=True)
class KeyPhrase:
    tokens: tuple[str, ...]
    score: float

    @property
    def text(self) -> str:
        return "-".join(self.tokens)


@dataclass
class Annotation:
    cluster_id: int
    phrase: str
    candidates: list[KeyPhrase]
    method: str = "textrank"


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    words = (_DATA_DIR / "stopwords.txt").read_text(encoding="utf-8").split()
    return frozenset(words)


@lru_cache(maxsize=1)
def default_pos_lexicon() -> dict[str, str]:
    lexicon = {}
    for line in (_DATA_DIR / "pos_lexicon.txt").read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, tag = line.split()
        lexicon[word] = tag
    return lexicon


def clean_tokens(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Lowercase, strip non-alphabetic characters, drop stop words."""
    stopwords = default_stopwords() if stopwords is None else stopwords
    out = []
    for raw in text.split():
        token = _NON_ALPHA.sub("", raw.lower())
        if token and token not in stopwords:
            out.append(token)
    return out


def pos_tag(token: str, lexicon: dict[str, str] | None = None) -> str:
    """Lexicon lookup, then suffix heuristics, then NOUN."""
    lexicon = default_pos_lexicon() if lexicon is None else lexicon
    tag = lexicon.get(token)
    if tag is not None:
        return tag
    if token.endswith(ADJ_SUFFIXES):
        return "ADJ"
    return "NOUN"


def assemble_document(centroid_vector, store: EmbeddingStore, cluster_id: int = -1,
                      n: int = 300,
                      stopwords: frozenset[str] | None = None) -> AnnotationDoc:
    """Top-n textual posts by cosine to the centroid, cleaned per post in
    rank order. Token windows never span post boundaries."""
    if int((store.modalities == Modality.TEXT).sum()) == 0:
        raise ValueError("store has no text records to assemble a document from")
    hits = store.top_k(centroid_vector, n, modality=Modality.TEXT)
    groups = [clean_tokens(store.text(h.id) or "", stopwords) for h in hits]
    return AnnotationDoc(cluster_id=cluster_id,
                         post_ids=[h.id for h in hits], token_groups=groups)


def _pagerank(token_groups: list[list[str]]) -> dict[str, float]:
    """Weighted PageRank over the token co-occurrence graph.

    Tokens within COOCCURRENCE_WINDOW positions of the same post co-occur;
    edge weights count co-occurrences. Edges are kept sparse (real
    documents reach ~10k distinct tokens). Dangling mass is spread
    uniformly so the rank vector keeps summing to 1.
    """
    vocab = sorted({t for g in token_groups for t in g})
    index = {t: i for i, t in enumerate(vocab)}
    n = len(vocab)
    if n == 1:
        return {vocab[0]: 1.0}

    edge_weights: dict[tuple[int, int], float] = {}
    for group in token_groups:
        for pos, tok in enumerate(group):
            for other in group[pos + 1: pos + COOCCURRENCE_WINDOW]:
                if other == tok:
                    continue
                i, j = index[tok], index[other]
                key = (i, j) if i < j else (j, i)
                edge_weights[key] = edge_weights.get(key, 0.0) + 1.0

    degree = np.zeros(n)
    for (i, j), w in edge_weights.items():
        degree[i] += w
        degree[j] += w
    dangling = degree == 0.0

    if edge_weights:
        src = np.fromiter((i for i, _ in edge_weights), dtype=np.int64)
        dst = np.fromiter((j for _, j in edge_weights), dtype=np.int64)
        wgt = np.fromiter(edge_weights.values(), dtype=np.float64)

    rank = np.full(n, 1.0 / n)
    base = (1.0 - PAGERANK_DAMPING) / n
    while True:
        contrib = np.divide(rank, degree, where=~dangling, out=np.zeros(n))
        flow = np.zeros(n)
        if edge_weights:
            np.add.at(flow, dst, wgt * contrib[src])
            np.add.at(flow, src, wgt * contrib[dst])
        spread = rank[dangling].sum() / n
        nxt = base + PAGERANK_DAMPING * (flow + spread)
        done = np.abs(nxt - rank).sum() < PAGERANK_TOL
        rank = nxt
        if done:
            break
    return {t: float(rank[index[t]]) for t in vocab}


def extract_keyphrases(doc: AnnotationDoc, top: int = 3) -> list[KeyPhrase]:
    """Rank contiguous n-grams (n <= 3, within a post) by mean member-token
    PageRank."""
    if not doc.tokens:
        raise ValueError("cannot extract keyphrases from an empty document")
    rank = _pagerank(doc.token_groups)

    grams: set[tuple[str, ...]] = set()
    for group in doc.token_groups:
        for n in range(1, MAX_PHRASE_TOKENS + 1):
            for pos in range(len(group) - n + 1):
                grams.add(tuple(group[pos: pos + n]))

    scored = [KeyPhrase(g, sum(rank[t] for t in g) / len(g)) for g in grams]
    scored.sort(key=lambda p: (-p.score, p.tokens))
    return scored[:top]


def select_annotation(candidates: list[KeyPhrase], cluster_id: int = -1,
                      lexicon: dict[str, str] | None = None,
                      method: str = "textrank") -> Annotation:
    """First candidate whose tags contain ADJ followed by NOUN(s); else top-1."""
    if not candidates:
        raise ValueError("no candidates to select from")
    chosen = candidates[0]
    for cand in candidates:
        tags = [pos_tag(t, lexicon) for t in cand.tokens]
        if any(a == "ADJ" and b == "NOUN" for a, b in zip(tags, tags[1:])):
            chosen = cand
            break
    return Annotation(cluster_id=cluster_id, phrase=chosen.text,
                      candidates=candidates, method=method)


def annotate_cluster(centroid_vector, store: EmbeddingStore, cluster_id: int,
                     n: int = 300, top: int = 3,
                     lexicon: dict[str, str] | None = None) -> Annotation:
    doc = assemble_document(centroid_vector, store, cluster_id, n)
    candidates = extract_keyphrases(doc, top)
    return select_annotation(candidates, cluster_id=cluster_id, lexicon=lexicon)
