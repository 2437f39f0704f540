import json

import numpy as np
import pytest

from memescope_adapter.encode import (CorpusManifest, encode_corpus,
                                      parse_timestamp, read_posts)
from memescope_adapter.encoders import HashEncoder, resolve_encoder


def write_posts(tmp_path, posts, name="posts.jsonl"):
    path = tmp_path / name
    with path.open("w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(json.dumps(p) + "\n")
    return path


def toy_posts(tmp_path, n_posts=10, n_media=7):
    media = []
    for i in range(n_media):
        p = tmp_path / f"m{i}.bin"
        p.write_bytes(f"image payload {i}".encode() * 20)
        media.append(p.name)
    posts = []
    for i in range(n_posts):
        posts.append({
            "post_id": 100 + i, "thread_id": 5,
            "timestamp": 1467244800 + i * 3600,
            "text": f"post body number {i}",
            "media_path": media[i % n_media],
        })
    return write_posts(tmp_path, posts)


def manifest(tmp_path, posts_path, dimension=32):
    return CorpusManifest(
        posts_file=posts_path,
        out_embeddings=tmp_path / "out.emb1",
        out_metadata=tmp_path / "out.meta.jsonl",
        dimension=dimension)


def test_counts_one_image_per_unique_media(tmp_path):
    report = encode_corpus(manifest(tmp_path, toy_posts(tmp_path)))
    assert report.image_records == 7
    assert report.text_records == 10


def test_emb1_layout_matches_format(tmp_path):
    encode_corpus(manifest(tmp_path, toy_posts(tmp_path), dimension=16))
    data = (tmp_path / "out.emb1").read_bytes()
    assert data[:4] == b"EMB1"
    dim = int(np.frombuffer(data, "<u4", 1, 4)[0])
    count = int(np.frombuffer(data, "<u8", 1, 8)[0])
    assert dim == 16
    assert count == 17
    record_size = 8 + 1 + 8 + 4 * dim
    assert len(data) == 16 + count * record_size
    # every vector unit-normalized
    for i in range(count):
        off = 16 + i * record_size + 17
        vec = np.frombuffer(data, "<f4", dim, off)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-5)


def test_metadata_ids_dense_and_typed(tmp_path):
    encode_corpus(manifest(tmp_path, toy_posts(tmp_path)))
    rows = [json.loads(line) for line in
            (tmp_path / "out.meta.jsonl").read_text().splitlines()]
    assert [r["id"] for r in rows] == list(range(1, 18))
    kinds = [r["kind"] for r in rows]
    assert kinds.count("image") == 7 and kinds.count("text") == 10
    assert all("media_path" in r for r in rows if r["kind"] == "image")
    assert all("text" in r for r in rows if r["kind"] == "text")


def test_rerun_identical_vectors(tmp_path):
    posts = toy_posts(tmp_path)
    encode_corpus(manifest(tmp_path, posts))
    first = (tmp_path / "out.emb1").read_bytes()
    encode_corpus(manifest(tmp_path, posts))
    assert (tmp_path / "out.emb1").read_bytes() == first


def test_unreadable_media_skipped_with_report(tmp_path):
    posts = [
        {"post_id": 1, "thread_id": 0, "timestamp": 0, "text": "a",
         "media_path": "missing.bin"},
        {"post_id": 2, "thread_id": 0, "timestamp": 0, "text": "b",
         "media_path": "ok.bin"},
    ]
    (tmp_path / "ok.bin").write_bytes(b"data")
    report = encode_corpus(manifest(tmp_path, write_posts(tmp_path, posts)))
    assert report.skipped_media == ["missing.bin"]
    assert report.image_records == 1


def test_empty_text_skipped(tmp_path):
    posts = [
        {"post_id": 1, "thread_id": 0, "timestamp": 0, "text": "  "},
        {"post_id": 2, "thread_id": 0, "timestamp": 0, "text": "fine"},
    ]
    report = encode_corpus(manifest(tmp_path, write_posts(tmp_path, posts)))
    assert report.skipped_empty_text == [1]
    assert report.text_records == 1


def test_iso_timestamps_parsed(tmp_path):
    posts = [{"post_id": 1, "thread_id": 0,
              "timestamp": "2016-06-30T00:00:00+00:00", "text": "x"}]
    path = write_posts(tmp_path, posts)
    assert read_posts(path)[0]["timestamp"] == 1467244800
    assert parse_timestamp(1467244800) == 1467244800


def test_hash_encoder_properties():
    enc = HashEncoder(dimension=64)
    a = enc.encode_texts(["hello"])
    b = enc.encode_texts(["hello"])
    c = enc.encode_texts(["other"])
    assert np.allclose(a, b, atol=1e-12)
    assert not np.allclose(a, c, atol=1e-3)
    assert np.linalg.norm(a[0]) == pytest.approx(1.0, abs=1e-9)
    # image and text payloads with equal bytes do not collide
    img = enc.encode_images([b"hello"])
    assert not np.allclose(img[0], enc.encode_texts(["hello"])[0], atol=1e-3)


def test_resolve_encoder_specs():
    enc = resolve_encoder("hash", dimension=16)
    assert enc.dimension == 16
    with pytest.raises(ValueError, match="unknown encoder"):
        resolve_encoder("clip-vit")
