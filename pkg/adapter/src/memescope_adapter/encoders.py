"""Encoder backends for corpus conversion.

The engine-facing contract is tiny: an encoder exposes a dimension and
turns image bytes or text strings into vectors. The bundled "hash"
encoder derives a deterministic pseudo-embedding from the SHA-256 of the
content, which keeps the whole conversion pipeline testable with no model
on disk. Real encoders (e.g. a CLIP checkpoint wrapper) plug in through a
"module:factory" spec.
"""

from __future__ import annotations

import hashlib
import importlib
from typing import Iterable, Protocol

import numpy as np


class Encoder(Protocol):
    dimension: int

    def encode_images(self, blobs: Iterable[bytes]) -> np.ndarray: ...

    def encode_texts(self, texts: Iterable[str]) -> np.ndarray: ...


class HashEncoder:
    """Content-addressed pseudo-embeddings: same bytes, same vector."""

    def __init__(self, dimension: int = 512):
        self.dimension = dimension

    def _vector(self, payload: bytes) -> np.ndarray:
        digest = hashlib.sha256(payload).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.dimension)
        return v / np.linalg.norm(v)

    def encode_images(self, blobs: Iterable[bytes]) -> np.ndarray:
        return np.stack([self._vector(b"img\x00" + b) for b in blobs])

    def encode_texts(self, texts: Iterable[str]) -> np.ndarray:
        return np.stack([self._vector(b"txt\x00" + t.encode("utf-8"))
                         for t in texts])


def resolve_encoder(spec: str, dimension: int = 512) -> Encoder:
    """"hash" for the builtin, or "package.module:factory" for a real one.

    The factory is called with the requested dimension and must return an
    object satisfying the Encoder protocol.
    """
    if spec == "hash":
        return HashEncoder(dimension)
    if ":" not in spec:
        raise ValueError(f"unknown encoder {spec!r} (use 'hash' or 'module:factory')")
    module_name, attr = spec.split(":", 1)
    factory = getattr(importlib.import_module(module_name), attr)
    return factory(dimension=dimension)
