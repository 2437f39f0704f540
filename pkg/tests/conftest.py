import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memescope.store import EmbeddingStore, RecordMeta


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def basis(dim: int, axis: int) -> np.ndarray:
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


def build_store(vectors, modalities, ids=None, texts=None, timestamps=None,
                pairs=None, phashes=None) -> EmbeddingStore:
    """In-memory store for tests; vectors are normalized here."""
    vectors = np.asarray(vectors, dtype=np.float64)
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    n = len(vectors)
    ids = list(range(1, n + 1)) if ids is None else list(ids)
    timestamps = [0] * n if timestamps is None else list(timestamps)
    meta = {}
    for i, rid in enumerate(ids):
        m = RecordMeta()
        if texts and texts.get(rid) is not None:
            m.text = texts[rid]
        if phashes and phashes.get(rid) is not None:
            m.phash = phashes[rid]
        meta[rid] = m
    return EmbeddingStore(ids, modalities, timestamps,
                          vectors.astype(np.float32), meta=meta,
                          pairs=pairs or [])


def write_corpus(tmp_path: Path, vectors, modalities, ids=None, timestamps=None,
                 meta_rows=None, name="corpus"):
    """EMB1 + metadata files on disk for ingest-path tests."""
    from memescope.store import write_emb1

    vectors = np.asarray(vectors, dtype=np.float32)
    n = len(vectors)
    ids = list(range(1, n + 1)) if ids is None else list(ids)
    timestamps = [0] * n if timestamps is None else list(timestamps)
    emb = tmp_path / f"{name}.emb1"
    write_emb1(emb, ids, modalities, timestamps, vectors)
    meta = None
    if meta_rows is not None:
        meta = tmp_path / f"{name}.meta.jsonl"
        with meta.open("w", encoding="utf-8") as fh:
            for row in meta_rows:
                fh.write(json.dumps(row) + "\n")
    return emb, meta


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unit_vectors(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
