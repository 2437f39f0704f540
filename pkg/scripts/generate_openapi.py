#!/usr/bin/env python3
"""Regenerate the committed OpenAPI description of the review service."""

import json
from pathlib import Path

import numpy as np

from memescope.service import Engine, create_app
from memescope.store import EmbeddingStore

REPO = Path(__file__).resolve().parents[1]


def main() -> None:
    vecs = np.eye(2, 4, dtype=np.float32)
    store = EmbeddingStore([1, 2], [0, 1], [0, 0], vecs)
    app = create_app(Engine(store, REPO / "scripts" / ".openapi-tmp"))
    schema = app.openapi()
    out = REPO / "openapi.json"
    out.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"wrote {out} ({len(schema['paths'])} paths)")


if __name__ == "__main__":
    main()
