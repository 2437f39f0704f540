"""Perceptual-hash grouping and weekly time series for variant tracking.

The 64-bit hash is DCT-based: decode, grayscale, resize to 32x32, 2D
DCT-II, keep the top-left 8x8 block, threshold against the median of the
63 AC coefficients. The DC slot contributes a fixed 0 bit and coefficients
equal to the median map to 0, so a solid-color image hashes to 0. Hashes
depend only on pixel data, never on the container format.

Groups use exact hash equality (a Hamming tolerance is available behind a
flag for robustness studies). Weekly bins are ISO weeks, UTC.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping

import numpy as np
from PIL import Image

from .store import EmbeddingStore, Modality, PostPair

HASH_SIZE = 32  # DCT input side length
BLOCK = 8       # retained low-frequency block

_SECONDS_PER_WEEK = 7 * 24 * 3600


def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    mat[0] /= np.sqrt(2.0)
    return mat


_DCT = _dct_matrix(HASH_SIZE)


def phash(image_bytes: bytes) -> int:
    """64-bit perceptual hash of one raster image."""
    try:
        img = Image.open(io.BytesIO(image_bytes))
        img.load()
    except Exception as exc:
        raise ValueError(f"undecodable image: {exc}") from exc
    gray = np.asarray(
        img.convert("L").resize((HASH_SIZE, HASH_SIZE), Image.Resampling.LANCZOS),
        dtype=np.float64)
    coeffs = (_DCT @ gray @ _DCT.T)[:BLOCK, :BLOCK].ravel()
    # quantize away float residue so mathematically-zero coefficients tie at 0
    coeffs = np.round(coeffs, 6)
    median = np.median(coeffs[1:])
    value = 0
    for pos, c in enumerate(coeffs):
        bit = 0 if pos == 0 else int(c > median)
        value = (value << 1) | bit
    return value


def phash_hex(image_bytes: bytes) -> str:
    return format(phash(image_bytes), "016x")


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")


@dataclass(frozen=True)
class PhashGroup:
    representative: int  # lowest member id
    member_ids: tuple[int, ...]
    phash: str


def group_by_phash(image_ids: Iterable[int], hashes: Mapping[int, str],
                   hamming_tolerance: int = 0) -> list[PhashGroup]:
    """Partition image ids into equal-hash groups (or Hamming-linked unions
    when a tolerance is set). Groups come back sorted by representative."""
    ids = sorted(int(i) for i in image_ids)
    missing = [i for i in ids if i not in hashes]
    if missing:
        raise ValueError(f"no phash available for ids {missing[:5]}")

    by_hash: dict[str, list[int]] = {}
    for i in ids:
        by_hash.setdefault(hashes[i], []).append(i)

    buckets = sorted(by_hash.items())
    parent = list(range(len(buckets)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if hamming_tolerance > 0:
        values = [int(h, 16) for h, _ in buckets]
        for a in range(len(buckets)):
            for b in range(a + 1, len(buckets)):
                if hamming(values[a], values[b]) <= hamming_tolerance:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)

    merged: dict[int, list[int]] = {}
    for pos, (_, members) in enumerate(buckets):
        merged.setdefault(find(pos), []).extend(members)

    groups = []
    for root in sorted(merged, key=lambda r: min(merged[r])):
        members = tuple(sorted(merged[root]))
        groups.append(PhashGroup(representative=members[0], member_ids=members,
                                 phash=buckets[root][0]))
    return groups


def store_hashes(store: EmbeddingStore, compute_missing: bool = False) -> dict[int, str]:
    """Phashes from metadata; optionally computed from media files."""
    hashes: dict[int, str] = {}
    for rid in store.ids_of(Modality.IMAGE):
        rid = int(rid)
        meta = store.metadata(rid)
        if meta.phash is not None:
            hashes[rid] = meta.phash
        elif compute_missing and meta.media_path is not None:
            with open(meta.media_path, "rb") as fh:
                hashes[rid] = phash_hex(fh.read())
    return hashes


@dataclass
class TimeSeries:
    group_id: int
    bins: list[tuple[str, int]]  # (ISO week start date, post count)

    @property
    def total(self) -> int:
        return sum(count for _, count in self.bins)

    def to_csv(self) -> str:
        lines = ["week_start,count"]
        lines.extend(f"{week},{count}" for week, count in self.bins)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        import json
        return json.dumps({"group": self.group_id,
                           "bins": [{"week_start": w, "count": c}
                                    for w, c in self.bins]}, sort_keys=True)


def _week_start(ts: int) -> datetime:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    monday = dt.date() - timedelta(days=dt.weekday())
    return datetime(monday.year, monday.month, monday.day, tzinfo=timezone.utc)


def weekly_series(group: PhashGroup, pairs: list[PostPair],
                  start: int, end: int) -> TimeSeries:
    """Weekly post counts for one phash group over [start, end) epoch seconds.

    Bins cover every ISO week intersecting the range, zero-filled, so
    bin totals always equal the group's in-range post count.
    """
    if end <= start:
        raise ValueError("empty time range")
    members = set(group.member_ids)
    first = _week_start(start)
    last = _week_start(end - 1)
    n_bins = int((last - first).total_seconds()) // _SECONDS_PER_WEEK + 1
    counts = [0] * n_bins
    first_ts = int(first.timestamp())
    for pair in pairs:
        if pair.image_id in members and start <= pair.timestamp < end:
            counts[(pair.timestamp - first_ts) // _SECONDS_PER_WEEK] += 1
    bins = [
        ((first + timedelta(weeks=i)).date().isoformat(), counts[i])
        for i in range(n_bins)
    ]
    return TimeSeries(group_id=group.representative, bins=bins)


# Study window from the source dataset: June 30 2016 .. July 31 2017 UTC.
DEFAULT_STUDY_RANGE = (
    int(datetime(2016, 6, 30, tzinfo=timezone.utc).timestamp()),
    int(datetime(2017, 7, 31, tzinfo=timezone.utc).timestamp()),
)
