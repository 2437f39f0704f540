"""Review service: one engine behind both the CLI and the HTTP API.

The engine serves analysis artifacts from an immutable run directory,
executes live searches against the store, and appends moderator verdicts
to the run's verdict log. CLI commands and HTTP endpoints call the same
engine methods, so identical parameters give identical results.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import evolution, temporal
from .store import EmbeddingStore
from .verdicts import VerdictLog, triplet_key


class Engine:
    def __init__(self, store: EmbeddingStore, run_dir: str | Path):
        self.store = store
        self.run_dir = Path(run_dir)
        self.verdicts = VerdictLog(self.run_dir / "verdicts.jsonl")
        self._clusters = self._load_jsonl("clusters.jsonl")
        self._annotations = {a["cluster_id"]: a
                             for a in self._load_jsonl("annotations.jsonl")}
        self._scores = {s["cluster_id"]: s
                        for s in self._load_jsonl("cluster_scores.jsonl")}
        self._triplets = self._load_jsonl("triplets.jsonl")
        communities_path = self.run_dir / "communities.json"
        self._communities = json.loads(communities_path.read_text(encoding="utf-8")) \
            if communities_path.exists() else {"communities": [], "modularity": 0.0}
        self._hashes: dict[int, str] | None = None

    def _load_jsonl(self, name: str) -> list[dict]:
        path = self.run_dir / name
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()]

    # -- read views ----------------------------------------------------

    def clusters(self, min_size: int = 30) -> list[dict]:
        out = []
        for c in self._clusters:
            if c["size"] < min_size:
                continue
            view = dict(c)
            if c["id"] in self._annotations:
                view["phrase"] = self._annotations[c["id"]]["phrase"]
            if c["id"] in self._scores:
                view["hate_score"] = self._scores[c["id"]]["hate_score"]
            out.append(view)
        return out

    def cluster(self, cluster_id: int) -> dict:
        for c in self.clusters(min_size=0):
            if c["id"] == cluster_id:
                return c
        raise KeyError(f"unknown cluster {cluster_id}")

    def communities(self) -> dict:
        return self._communities

    # -- live searches ---------------------------------------------------

    def search_variants(self, origin: int, lo: float, hi: float) -> list[dict]:
        if origin not in self.store:
            raise KeyError(f"unknown record id {origin}")
        thresholds = evolution.EvolutionThresholds(variant_lo=lo, variant_hi=hi)
        hits = evolution.find_variants(origin, thresholds, self.store)
        return [{"id": h.id, "score": h.score} for h in hits]

    def search_influencers(self, origin: int, variant: int, lo: float, hi: float,
                           mask_hi: float | None, accept_lo: float,
                           k: int) -> list[dict]:
        for rid in (origin, variant):
            if rid not in self.store:
                raise KeyError(f"unknown record id {rid}")
        thresholds = evolution.EvolutionThresholds(
            variant_lo=lo, variant_hi=hi, influencer_mask_hi=mask_hi,
            triplet_accept_lo=accept_lo, k=k)
        found = evolution.find_influencers(origin, variant, thresholds, self.store)
        return [{
            "origin_id": t.origin_id, "variant_id": t.variant_id,
            "influencer_id": t.influencer_id,
            "sim_origin_variant": t.sim_origin_variant,
            "sim_sum_variant": t.sim_sum_variant, "rank": t.influencer_rank,
        } for t in found.triplets]

    # -- verdicts ----------------------------------------------------------

    def triplets_for(self, origin: int) -> list[dict]:
        out = []
        for t in self._triplets:
            if t["origin_id"] != origin:
                continue
            key = triplet_key(t["origin_id"], t["variant_id"], t["influencer_id"])
            view = dict(t)
            view["verdict"] = self.verdicts.status(key)
            out.append(view)
        return out

    def record_verdict(self, origin: int, variant: int, influencer: int | None,
                       verdict: str, annotator: str, context: dict | None = None) -> dict:
        refs = [origin, variant] + ([influencer] if influencer is not None else [])
        for rid in refs:
            if rid not in self.store:
                raise KeyError(f"dangling reference: record {rid} not in store")
        key = triplet_key(origin, variant, influencer)
        position = self.verdicts.record(key, verdict, annotator, context)
        return {"item_key": key, "position": position, "verdict": verdict}

    def confirmed(self) -> list[dict]:
        """Accepted triplets/variants from the materialized verdict view."""
        accepted = self.verdicts.confirmed()
        out = []
        for t in self._triplets:
            key = triplet_key(t["origin_id"], t["variant_id"], t["influencer_id"])
            if key in accepted:
                out.append(dict(t, item_key=key))
        known = {triplet_key(t["origin_id"], t["variant_id"], t["influencer_id"])
                 for t in self._triplets}
        for key in sorted(accepted - known):
            kind, *ids = key.split(":")
            row = {"item_key": key, "origin_id": int(ids[0]),
                   "variant_id": int(ids[1])}
            if kind == "triplet":
                row["influencer_id"] = int(ids[2])
            out.append(row)
        return out

    # -- temporal -----------------------------------------------------------

    def timeline(self, group_id: int,
                 time_range: tuple[int, int] | None = None) -> temporal.TimeSeries:
        if self._hashes is None:
            self._hashes = temporal.store_hashes(self.store)
        if group_id not in self._hashes:
            raise KeyError(f"unknown image id {group_id}")
        groups = temporal.group_by_phash(self._hashes.keys(), self._hashes)
        group = next((g for g in groups if group_id in g.member_ids), None)
        if group is None:
            raise KeyError(f"no phash group for image {group_id}")
        if time_range is None:
            stamps = [p.timestamp for p in self.store.pairs]
            if not stamps:
                raise ValueError("store has no post pairs for a timeline")
            time_range = (min(stamps), max(stamps) + 1)
        return temporal.weekly_series(group, self.store.pairs, *time_range)

    def sweep_sheet(self, sweep_id: str, threshold: str) -> dict:
        path = self.run_dir / "sweeps" / sweep_id / f"sheet_{threshold}.json"
        if not path.exists():
            raise KeyError(f"no sheet for sweep {sweep_id!r} at threshold {threshold}")
        return json.loads(path.read_text(encoding="utf-8"))


class VariantSearchRequest(BaseModel):
    origin: int
    lo: float
    hi: float


class InfluencerSearchRequest(BaseModel):
    origin: int
    variant: int
    lo: float = -1.0
    hi: float = 1.0
    mask_hi: float | None = None
    accept_lo: float = 0.94
    k: int = 10


class VerdictRequest(BaseModel):
    origin: int
    variant: int
    influencer: int | None = None
    verdict: str
    annotator: str
    context: dict = {}


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="memescope review service", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok", "records": len(engine.store)}

    @app.get("/clusters")
    def clusters(min_size: int = 30):
        return engine.clusters(min_size=min_size)

    @app.get("/clusters/{cluster_id}")
    def cluster(cluster_id: int):
        try:
            return engine.cluster(cluster_id)
        except KeyError as exc:
            raise HTTPException(404, str(exc))

    @app.get("/communities")
    def communities():
        return engine.communities()

    @app.post("/variants/search")
    def variants_search(req: VariantSearchRequest):
        try:
            return engine.search_variants(req.origin, req.lo, req.hi)
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        except ValueError as exc:
            raise HTTPException(422, str(exc))

    @app.post("/influencers/search")
    def influencers_search(req: InfluencerSearchRequest):
        try:
            return engine.search_influencers(req.origin, req.variant, req.lo, req.hi,
                                             req.mask_hi, req.accept_lo, req.k)
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        except ValueError as exc:
            raise HTTPException(422, str(exc))

    @app.get("/variants/{origin}/triplets")
    def triplets(origin: int):
        return engine.triplets_for(origin)

    @app.post("/verdicts")
    def verdicts(req: VerdictRequest):
        try:
            return engine.record_verdict(req.origin, req.variant, req.influencer,
                                         req.verdict, req.annotator, req.context)
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        except ValueError as exc:
            raise HTTPException(422, str(exc))

    @app.get("/timeline")
    def timeline(group: int):
        try:
            series = engine.timeline(group)
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        return {"group": series.group_id,
                "bins": [{"week_start": w, "count": c} for w, c in series.bins]}

    @app.get("/sweep/{sweep_id}/sheet/{threshold}")
    def sweep_sheet(sweep_id: str, threshold: str):
        try:
            return engine.sweep_sheet(sweep_id, threshold)
        except KeyError as exc:
            raise HTTPException(404, str(exc))

    return app
