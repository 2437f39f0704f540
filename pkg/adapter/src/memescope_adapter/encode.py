"""Corpus conversion: posts JSONL -> EMB1 embeddings + metadata sidecar.

The output formats are the analysis engine's ingest interface and are
written here from the format definition, not by importing the engine:
EMB1 is little-endian "EMB1" magic, u32 dimension, u64 record count, then
u64 id / u8 modality (0=image, 1=text) / i64 epoch seconds / f32 x dim
per record. The metadata sidecar is one JSON object per record id.

One image record per unique media file (first post wins the linkage),
one text record per post with non-empty text. Unreadable media and empty
texts are skipped and reported. Files are written atomically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .encoders import Encoder, resolve_encoder

EMB1_MAGIC = b"EMB1"


@dataclass
class CorpusManifest:
    posts_file: Path
    out_embeddings: Path
    out_metadata: Path
    encoder: str = "hash"
    dimension: int = 512
    batch_size: int = 64


@dataclass
class EncodeReport:
    image_records: int = 0
    text_records: int = 0
    skipped_media: list[str] = field(default_factory=list)
    skipped_empty_text: list[int] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "records": {"image": self.image_records, "text": self.text_records},
            "skipped_media": self.skipped_media,
            "skipped_empty_text": self.skipped_empty_text,
        }


def parse_timestamp(value) -> int:
    if isinstance(value, (int, float)):
        return int(value)
    dt = datetime.fromisoformat(str(value))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def read_posts(path: Path) -> list[dict]:
    posts = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON") from exc
            obj["timestamp"] = parse_timestamp(obj["timestamp"])
            posts.append(obj)
    return posts


def _record_bytes(rid: int, modality: int, timestamp: int, vector: np.ndarray) -> bytes:
    return (np.uint64(rid).tobytes() + np.uint8(modality).tobytes()
            + np.int64(timestamp).tobytes()
            + np.asarray(vector, dtype="<f4").tobytes())


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    tmp.replace(path)


def _batched(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start:start + size]


def encode_corpus(manifest: CorpusManifest,
                  encoder: Encoder | None = None) -> EncodeReport:
    """Convert one posts file; returns the conversion report."""
    if encoder is None:
        encoder = resolve_encoder(manifest.encoder, manifest.dimension)
    posts = read_posts(Path(manifest.posts_file))
    report = EncodeReport()

    base = Path(manifest.posts_file).parent
    media_first_post: dict[str, dict] = {}
    media_blobs: dict[str, bytes] = {}
    for post in posts:
        media = post.get("media_path")
        if not media or media in media_first_post or media in report.skipped_media:
            continue
        full = Path(media) if Path(media).is_absolute() else base / media
        try:
            media_blobs[media] = full.read_bytes()
            media_first_post[media] = post
        except OSError:
            report.skipped_media.append(media)

    text_posts = []
    for post in posts:
        if str(post.get("text") or "").strip():
            text_posts.append(post)
        else:
            report.skipped_empty_text.append(int(post["post_id"]))

    records: list[bytes] = []
    meta_rows: list[dict] = []
    next_id = 1

    media_items = sorted(media_first_post)
    for batch in _batched(media_items, manifest.batch_size):
        vectors = encoder.encode_images([media_blobs[m] for m in batch])
        for media, vec in zip(batch, vectors):
            post = media_first_post[media]
            records.append(_record_bytes(next_id, 0, post["timestamp"], vec))
            meta_rows.append({
                "id": next_id, "kind": "image",
                "post_id": int(post["post_id"]),
                "thread_id": int(post.get("thread_id", 0)),
                "media_path": media,
            })
            next_id += 1
            report.image_records += 1

    for batch in _batched(text_posts, manifest.batch_size):
        vectors = encoder.encode_texts([str(p["text"]) for p in batch])
        for post, vec in zip(batch, vectors):
            records.append(_record_bytes(next_id, 1, post["timestamp"], vec))
            meta_rows.append({
                "id": next_id, "kind": "text",
                "post_id": int(post["post_id"]),
                "thread_id": int(post.get("thread_id", 0)),
                "text": str(post["text"]),
            })
            next_id += 1
            report.text_records += 1

    header = EMB1_MAGIC + np.uint32(encoder.dimension).tobytes() \
        + np.uint64(len(records)).tobytes()
    _atomic_write(Path(manifest.out_embeddings), header + b"".join(records))
    meta_payload = "".join(json.dumps(row, sort_keys=True) + "\n"
                           for row in meta_rows)
    _atomic_write(Path(manifest.out_metadata), meta_payload.encode("utf-8"))
    return report
