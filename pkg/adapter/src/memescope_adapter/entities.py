"""Entity extraction from a posts file, one ranked list per category.

A bundled gazetteer stands in for a full NER model so the adapter runs
offline; the recognizer is swappable at the call site. Frequencies are
counted per post (an entity mentioned five times in one post counts
once). Output files are plain text, one lowercased surface per line.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from pathlib import Path

CATEGORIES = ("People", "GPE", "NORP", "ORG")
_GAZETTEER_DIR = Path(__file__).parent / "gazetteer"
_FILES = {"People": "people.txt", "GPE": "gpe.txt", "NORP": "norp.txt",
          "ORG": "org.txt"}


@lru_cache(maxsize=1)
def gazetteer() -> dict[str, tuple[str, ...]]:
    out = {}
    for category, name in _FILES.items():
        lines = (_GAZETTEER_DIR / name).read_text(encoding="utf-8").splitlines()
        out[category] = tuple(s.strip().lower() for s in lines if s.strip())
    return out


@lru_cache(maxsize=1)
def _patterns() -> dict[str, list[tuple[str, re.Pattern]]]:
    return {
        category: [(surface, re.compile(rf"\b{re.escape(surface)}\b"))
                   for surface in surfaces]
        for category, surfaces in gazetteer().items()
    }


def recognize(text: str) -> dict[str, set[str]]:
    """Gazetteer surfaces present in one text, grouped by category."""
    lowered = text.lower()
    found: dict[str, set[str]] = {c: set() for c in CATEGORIES}
    for category, patterns in _patterns().items():
        for surface, pattern in patterns:
            if pattern.search(lowered):
                found[category].add(surface)
    return found


def extract_entities(posts_file: str | Path, top_n: int = 30,
                     recognizer=recognize) -> dict[str, list[tuple[str, int]]]:
    """Top-n most frequent entities per category, counted per post."""
    counts: dict[str, dict[str, int]] = {c: {} for c in CATEGORIES}
    with Path(posts_file).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            text = str(json.loads(line).get("text") or "")
            if not text:
                continue
            for category, surfaces in recognizer(text).items():
                for surface in surfaces:
                    bucket = counts[category]
                    bucket[surface] = bucket.get(surface, 0) + 1
    ranked = {}
    for category in CATEGORIES:
        ordered = sorted(counts[category].items(), key=lambda kv: (-kv[1], kv[0]))
        ranked[category] = ordered[:top_n]
    return ranked


def write_entity_lists(ranked: dict[str, list[tuple[str, int]]],
                       out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for category, rows in ranked.items():
        path = out_dir / f"entities_{category.lower()}.txt"
        path.write_text("".join(surface + "\n" for surface, _ in rows),
                        encoding="utf-8")
        paths[category] = path
    return paths
