"""Append-only verdict log for the human review loop.

Moderator decisions are newline-delimited JSON records, fsynced on every
append so the log survives crashes. The materialized view replays the log
with last-write-wins per item; all records stay in the log for audit.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class VerdictRecord:
    item_key: str                  # "triplet:o:v:i" or "variant:o:v"
    verdict: str                   # accept | reject
    annotator: str
    timestamp: float
    context: dict = field(default_factory=dict)  # thresholds active at review time

    def __post_init__(self):
        if self.verdict not in ("accept", "reject"):
            raise ValueError(f"verdict must be accept or reject, got {self.verdict!r}")


def triplet_key(origin_id: int, variant_id: int, influencer_id: int | None = None) -> str:
    if influencer_id is None:
        return f"variant:{origin_id}:{variant_id}"
    return f"triplet:{origin_id}:{variant_id}:{influencer_id}"


class VerdictLog:
    """Single-writer append-only log with an in-memory materialized view."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[VerdictRecord] = []
        self._latest: dict[str, VerdictRecord] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._absorb(_parse(line))

    def _absorb(self, record: VerdictRecord) -> None:
        self._records.append(record)
        self._latest[record.item_key] = record

    def append(self, record: VerdictRecord) -> int:
        """Persist one verdict (write + fsync); returns its log position."""
        line = json.dumps({
            "item_key": record.item_key, "verdict": record.verdict,
            "annotator": record.annotator, "timestamp": record.timestamp,
            "context": record.context,
        }, sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._absorb(record)
            return len(self._records) - 1

    def record(self, item_key: str, verdict: str, annotator: str,
               context: dict | None = None) -> int:
        return self.append(VerdictRecord(item_key=item_key, verdict=verdict,
                                         annotator=annotator, timestamp=time.time(),
                                         context=context or {}))

    @property
    def records(self) -> list[VerdictRecord]:
        return list(self._records)

    def latest(self) -> dict[str, VerdictRecord]:
        """Materialized last-write-wins view."""
        return dict(self._latest)

    def status(self, item_key: str) -> str | None:
        rec = self._latest.get(item_key)
        return rec.verdict if rec else None

    def confirmed(self) -> set[str]:
        return {k for k, r in self._latest.items() if r.verdict == "accept"}


def _parse(line: str) -> VerdictRecord:
    obj = json.loads(line)
    return VerdictRecord(item_key=obj["item_key"], verdict=obj["verdict"],
                         annotator=obj["annotator"], timestamp=obj["timestamp"],
                         context=obj.get("context", {}))


def replay(path: str | Path) -> dict[str, VerdictRecord]:
    """Reconstruct the materialized view purely from the log file."""
    return VerdictLog(path).latest()
