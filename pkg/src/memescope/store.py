"""Embedding corpus storage and exact cosine search.

The store is built once from an EMB1 file plus a JSON Lines metadata
sidecar, normalizes every vector to unit length, and is immutable
afterwards. All retrieval in the engine (top-k, similarity bands) goes
through the primitives here so results are deterministic: ties are always
broken by ascending record id.

EMB1 layout (little-endian): magic ``EMB1``, u32 dimension, u64 record
count, then per record u64 id, u8 modality (0=image, 1=text), i64 epoch
timestamp, dimension x f32 vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

EMB1_MAGIC = b"EMB1"
EMB1_HEADER_SIZE = 16
UNIT_NORM_TOL = 1e-5


class Modality(IntEnum):
    IMAGE = 0
    TEXT = 1


class CorpusFormatError(ValueError):
    """Raised when an EMB1 file or metadata sidecar violates the format."""


@dataclass(frozen=True)
class SearchHit:
    id: int
    score: float


class SearchHits(list):
    """List of SearchHit, sorted by (score desc, id asc).

    ``truncated`` is set when fewer eligible records existed than requested.
    """

    def __init__(self, hits=(), truncated: bool = False):
        super().__init__(hits)
        self.truncated = truncated


@dataclass(frozen=True)
class PostPair:
    image_id: int
    text_id: int
    post_id: int
    thread_id: int
    timestamp: int


@dataclass
class RecordMeta:
    post_id: int | None = None
    thread_id: int | None = None
    text: str | None = None
    media_path: str | None = None
    phash: str | None = None


@dataclass
class IngestReport:
    dimension: int
    image_count: int
    text_count: int
    pair_count: int
    rejected_zero_ids: list[int] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        return {"image": self.image_count, "text": self.text_count}

    def summary(self) -> dict:
        return {
            "dimension": self.dimension,
            "records": {"image": self.image_count, "text": self.text_count},
            "pairs": self.pair_count,
            "rejected_zero_vector_ids": sorted(self.rejected_zero_ids),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype(
        [("id", "<u8"), ("modality", "u1"), ("timestamp", "<i8"), ("vector", "<f4", (dim,))],
        align=False,
    )


def write_emb1(path: str | Path, ids, modalities, timestamps, vectors) -> None:
    """Serialize one corpus to the EMB1 binary format."""
    vectors = np.asarray(vectors, dtype=np.float32)
    n, dim = vectors.shape
    rec = np.empty(n, dtype=_record_dtype(dim))
    rec["id"] = np.asarray(ids, dtype=np.uint64)
    rec["modality"] = np.asarray(modalities, dtype=np.uint8)
    rec["timestamp"] = np.asarray(timestamps, dtype=np.int64)
    rec["vector"] = vectors
    header = EMB1_MAGIC + np.uint32(dim).tobytes() + np.uint64(n).tobytes()
    Path(path).write_bytes(header + rec.tobytes())


def _read_emb1(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    data = path.read_bytes()
    if len(data) < EMB1_HEADER_SIZE or data[:4] != EMB1_MAGIC:
        raise CorpusFormatError(f"malformed header in {path}: expected EMB1 magic")
    dim = int(np.frombuffer(data, dtype="<u4", count=1, offset=4)[0])
    count = int(np.frombuffer(data, dtype="<u8", count=1, offset=8)[0])
    if dim == 0:
        raise CorpusFormatError(f"malformed header in {path}: dimension 0")
    dtype = _record_dtype(dim)
    body = len(data) - EMB1_HEADER_SIZE
    if body != count * dtype.itemsize:
        whole = body // dtype.itemsize
        rest = body - whole * dtype.itemsize
        if rest >= 8:
            bad_id = int(np.frombuffer(data, dtype="<u8", count=1,
                                       offset=EMB1_HEADER_SIZE + whole * dtype.itemsize)[0])
            raise CorpusFormatError(f"truncated record at id {bad_id}")
        raise CorpusFormatError(f"truncated record after {whole} records")
    rec = np.frombuffer(data, dtype=dtype, count=count, offset=EMB1_HEADER_SIZE)
    return rec["id"].astype(np.uint64), rec["modality"].copy(), rec["timestamp"].copy(), \
        rec["vector"].astype(np.float32)


def cosine(a, b) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


class EmbeddingStore:
    """Immutable unit-normalized embedding corpus with exact scan search.

    Write-once at ingest; afterwards any number of readers may query
    concurrently without synchronization.
    """

    def __init__(self, ids, modalities, timestamps, vectors,
                 meta: dict[int, RecordMeta] | None = None,
                 pairs: list[PostPair] | None = None,
                 report: IngestReport | None = None):
        self.ids = np.asarray(ids, dtype=np.uint64)
        self.modalities = np.asarray(modalities, dtype=np.uint8)
        self.timestamps = np.asarray(timestamps, dtype=np.int64)
        self.vectors = np.asarray(vectors, dtype=np.float32)
        self.meta = meta or {}
        self.pairs = pairs or []
        self.report = report
        self._index = {int(i): pos for pos, i in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise CorpusFormatError("duplicate id in store")
        self._vectors64: np.ndarray | None = None  # lazy scan copy

    # -- construction -------------------------------------------------

    @classmethod
    def ingest(cls, embedding_file: str | Path,
               metadata_file: str | Path | None = None) -> "EmbeddingStore":
        """Load an EMB1 corpus, renormalize, and attach metadata.

        Zero vectors are rejected (not fatal) and their ids reported in
        ``store.report``. Duplicate ids and malformed records raise.
        """
        ids, modalities, timestamps, vectors = _read_emb1(Path(embedding_file))
        uniq, counts = np.unique(ids, return_counts=True)
        if (counts > 1).any():
            dup = int(uniq[counts > 1][0])
            raise CorpusFormatError(f"duplicate id {dup}")

        norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
        zero = norms == 0.0
        rejected = [int(i) for i in ids[zero]]
        keep = ~zero
        ids, modalities, timestamps = ids[keep], modalities[keep], timestamps[keep]
        vectors = (vectors[keep].astype(np.float64) / norms[keep, None]).astype(np.float32)

        meta: dict[int, RecordMeta] = {}
        if metadata_file is not None:
            meta = _read_metadata(Path(metadata_file), ids, modalities)
        pairs = _build_pairs(ids, modalities, timestamps, meta)

        report = IngestReport(
            dimension=vectors.shape[1],
            image_count=int((modalities == Modality.IMAGE).sum()),
            text_count=int((modalities == Modality.TEXT).sum()),
            pair_count=len(pairs),
            rejected_zero_ids=rejected,
        )
        return cls(ids, modalities, timestamps, vectors, meta, pairs, report)

    # -- record access ------------------------------------------------

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, record_id: int) -> bool:
        return int(record_id) in self._index

    def position(self, record_id: int) -> int:
        try:
            return self._index[int(record_id)]
        except KeyError:
            raise KeyError(f"unknown record id {record_id}") from None

    def vector(self, record_id: int) -> np.ndarray:
        return self.vectors[self.position(record_id)]

    def modality(self, record_id: int) -> Modality:
        return Modality(self.modalities[self.position(record_id)])

    def timestamp(self, record_id: int) -> int:
        return int(self.timestamps[self.position(record_id)])

    def metadata(self, record_id: int) -> RecordMeta:
        return self.meta.get(int(record_id), RecordMeta())

    def text(self, record_id: int) -> str | None:
        return self.metadata(record_id).text

    def ids_of(self, modality: Modality | None) -> np.ndarray:
        if modality is None:
            return self.ids
        return self.ids[self.modalities == int(modality)]

    @property
    def vectors64(self) -> np.ndarray:
        """float64 vector matrix, materialized once (the store is immutable)."""
        if self._vectors64 is None:
            self._vectors64 = self.vectors.astype(np.float64)
        return self._vectors64

    # -- search primitives ---------------------------------------------

    def _eligible(self, modality: Modality | None, exclude=None) -> np.ndarray:
        mask = np.ones(len(self.ids), dtype=bool)
        if modality is not None:
            mask &= self.modalities == int(modality)
        if exclude:
            mask &= ~np.isin(self.ids, np.fromiter((int(e) for e in exclude),
                                                   dtype=np.uint64))
        return mask

    def _scores(self, query) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: query {q.shape} vs store ({self.dim},)")
        nq = np.linalg.norm(q)
        if nq == 0.0:
            raise ValueError("cosine undefined for zero query")
        return np.clip(self.vectors64 @ (q / nq), -1.0, 1.0)

    def top_k(self, query, k: int, modality: Modality | None = None,
              exclude=None) -> SearchHits:
        """Exact k highest-cosine records, sorted (score desc, id asc).

        When fewer than k records are eligible, all of them are returned
        and the result is flagged truncated.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        mask = self._eligible(modality, exclude)
        n_eligible = int(mask.sum())
        if n_eligible == 0:
            raise ValueError("no eligible records for query")
        scores = self._scores(query)[mask]
        ids = self.ids[mask]
        order = np.lexsort((ids, -scores))[: min(k, n_eligible)]
        hits = [SearchHit(int(ids[i]), float(scores[i])) for i in order]
        return SearchHits(hits, truncated=k > n_eligible)

    def band_query(self, query, lo: float, hi: float,
                   modality: Modality | None = None, exclude=None) -> SearchHits:
        """Records with lo <= cosine < hi, sorted (score desc, id asc).

        Half-open on the upper edge so exact duplicates of the query
        direction fall outside the band whenever hi < 1.
        """
        if not (-1.0 <= lo < hi <= 1.0):
            raise ValueError(f"invalid band [{lo}, {hi})")
        mask = self._eligible(modality, exclude)
        scores = self._scores(query)
        band = mask & (scores >= lo) & (scores < hi)
        ids = self.ids[band]
        sub = scores[band]
        order = np.lexsort((ids, -sub))
        return SearchHits(SearchHit(int(ids[i]), float(sub[i])) for i in order)

    def summary(self) -> dict:
        if self.report is not None:
            return self.report.summary()
        return {
            "dimension": self.dim,
            "records": {
                "image": int((self.modalities == Modality.IMAGE).sum()),
                "text": int((self.modalities == Modality.TEXT).sum()),
            },
            "pairs": len(self.pairs),
            "rejected_zero_vector_ids": [],
        }


def _read_metadata(path: Path, ids: np.ndarray, modalities: np.ndarray) -> dict[int, RecordMeta]:
    known = {int(i): Modality(m) for i, m in zip(ids, modalities)}
    kind_names = {Modality.IMAGE: "image", Modality.TEXT: "text"}
    meta: dict[int, RecordMeta] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON") from exc
            rid = int(obj["id"])
            if rid not in known:
                raise CorpusFormatError(
                    f"{path}:{lineno}: metadata id {rid} not in embedding file")
            kind = obj.get("kind")
            if kind is not None and kind != kind_names[known[rid]]:
                raise CorpusFormatError(
                    f"{path}:{lineno}: kind {kind!r} does not match record modality")
            meta[rid] = RecordMeta(
                post_id=obj.get("post_id"),
                thread_id=obj.get("thread_id"),
                text=obj.get("text"),
                media_path=obj.get("media_path"),
                phash=obj.get("phash"),
            )
    return meta


def _build_pairs(ids, modalities, timestamps, meta: dict[int, RecordMeta]) -> list[PostPair]:
    """Pair image and text records sharing a post id.

    Posts with several records of one modality pair the lowest ids first;
    leftovers stay unpaired.
    """
    by_post: dict[int, tuple[list[int], list[int]]] = {}
    ts = {int(i): int(t) for i, t in zip(ids, timestamps)}
    mod = {int(i): int(m) for i, m in zip(ids, modalities)}
    for rid, m in sorted(meta.items()):
        if m.post_id is None:
            continue
        images, texts = by_post.setdefault(int(m.post_id), ([], []))
        (images if mod[rid] == Modality.IMAGE else texts).append(rid)
    pairs = []
    for post_id in sorted(by_post):
        images, texts = by_post[post_id]
        for img, txt in zip(sorted(images), sorted(texts)):
            thread = meta[img].thread_id if meta[img].thread_id is not None \
                else meta[txt].thread_id
            pairs.append(PostPair(
                image_id=img, text_id=txt, post_id=post_id,
                thread_id=thread if thread is not None else 0,
                timestamp=min(ts[img], ts[txt]),
            ))
    return pairs
