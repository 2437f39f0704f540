"""Cluster-similarity graph, pruning, and Louvain community detection.

Clusters are nodes; edge weights are cosine similarities of centroid
embeddings. The complete graph is pruned to the top (100-P)% of edges by
nearest-rank count, then Louvain maximizes weighted modularity with an
ascending-id sweep so runs are bit-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .clustering import Centroid
from .hate import ClusterScore
from .store import cosine

LOUVAIN_MIN_GAIN = 1e-9


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    weight: float


@dataclass
class ClusterGraph:
    nodes: list[int]
    edges: list[Edge]
    percentile: float
    threshold: float | None  # min kept weight; None when nothing was pruned away


@dataclass
class CommunitySummary:
    id: int
    cluster_ids: list[int]
    posts: int = 0
    hateful: int = 0

    @property
    def hate_score(self) -> float:
        return self.hateful / self.posts if self.posts else 0.0


@dataclass
class CommunityPartition:
    assignment: dict[int, int]
    modularity: float
    pass_modularity: list[float] = field(default_factory=list)
    communities: list[CommunitySummary] = field(default_factory=list)


def build_graph(centroids: list[Centroid], percentile: float = 98.0) -> ClusterGraph:
    """Complete centroid-cosine graph pruned to the strongest edges.

    Exactly ceil((100 - percentile)% of candidates) edges survive, chosen
    by weight with (a, b) id tie-breaks, so the count is deterministic
    even with tied weights.
    """
    if len(centroids) < 2:
        raise ValueError("need at least two clusters to build a graph")
    if not 0.0 <= percentile < 100.0:
        raise ValueError("percentile must be in [0, 100)")
    ordered = sorted(centroids, key=lambda c: c.cluster_id)
    candidates = []
    for i, ca in enumerate(ordered):
        for cb in ordered[i + 1:]:
            candidates.append(Edge(ca.cluster_id, cb.cluster_id,
                                   cosine(ca.vector, cb.vector)))
    keep = math.ceil((100.0 - percentile) / 100.0 * len(candidates))
    candidates.sort(key=lambda e: (-e.weight, e.a, e.b))
    kept = candidates[:keep]
    threshold = kept[-1].weight if 0 < keep < len(candidates) else None
    return ClusterGraph(nodes=[c.cluster_id for c in ordered], edges=kept,
                        percentile=percentile, threshold=threshold)


class _LevelGraph:
    """Weighted graph state for one Louvain level."""

    def __init__(self, nodes, edges, self_weight=None):
        self.nodes = sorted(nodes)
        self.adj: dict[int, dict[int, float]] = {n: {} for n in self.nodes}
        self.self_weight: dict[int, float] = dict(self_weight or {})
        for a, b, w in edges:
            if a == b:
                self.self_weight[a] = self.self_weight.get(a, 0.0) + w
                continue
            self.adj[a][b] = self.adj[a].get(b, 0.0) + w
            self.adj[b][a] = self.adj[b].get(a, 0.0) + w
        self.degree = {
            n: sum(self.adj[n].values()) + 2.0 * self.self_weight.get(n, 0.0)
            for n in self.nodes
        }
        self.total_degree = sum(self.degree.values())


def modularity(graph: ClusterGraph, assignment: dict[int, int]) -> float:
    """Weighted modularity of a partition over the pruned graph."""
    level = _LevelGraph(graph.nodes, [(e.a, e.b, e.weight) for e in graph.edges])
    return _modularity(level, {n: assignment[n] for n in level.nodes})


def _modularity(level: _LevelGraph, comm: dict[int, int]) -> float:
    m2 = level.total_degree
    if m2 == 0.0:
        return 0.0
    in2: dict[int, float] = {}
    tot: dict[int, float] = {}
    for n in level.nodes:
        c = comm[n]
        tot[c] = tot.get(c, 0.0) + level.degree[n]
        in2[c] = in2.get(c, 0.0) + 2.0 * level.self_weight.get(n, 0.0)
        for other, w in level.adj[n].items():
            if comm[other] == c:
                in2[c] = in2.get(c, 0.0) + w  # both endpoints add w once
    return sum(in2.get(c, 0.0) / m2 - (tot[c] / m2) ** 2 for c in tot)


def _local_move(level: _LevelGraph, comm: dict[int, int]) -> bool:
    """Sweep nodes ascending, greedily moving each to the neighbor community
    with the highest modularity gain until a full sweep makes no move."""
    m2 = level.total_degree
    if m2 == 0.0:
        return False
    tot: dict[int, float] = {}
    for n in level.nodes:
        tot[comm[n]] = tot.get(comm[n], 0.0) + level.degree[n]

    any_moved = False
    while True:
        moved = False
        for n in level.nodes:
            current = comm[n]
            k = level.degree[n]
            tot[current] -= k

            link: dict[int, float] = {}
            for other, w in level.adj[n].items():
                c = link.setdefault(comm[other], 0.0)
                link[comm[other]] = c + w
            link.setdefault(current, 0.0)

            # score(c) scales to modularity gain as 2*score/m2
            best_c, best_gain = current, link[current] - tot.get(current, 0.0) * k / m2
            for c in sorted(link):
                gain = link[c] - tot.get(c, 0.0) * k / m2
                if 2.0 * (gain - best_gain) / m2 > LOUVAIN_MIN_GAIN:
                    best_c, best_gain = c, gain
            tot[best_c] = tot.get(best_c, 0.0) + k
            if best_c != current:
                comm[n] = best_c
                moved = True
                any_moved = True
        if not moved:
            return any_moved


def _aggregate(level: _LevelGraph, comm: dict[int, int]) -> tuple[_LevelGraph, dict[int, int]]:
    new_ids = {c: i for i, c in enumerate(sorted(set(comm.values())))}
    mapping = {n: new_ids[comm[n]] for n in level.nodes}
    self_w: dict[int, float] = {}
    edge_w: dict[tuple[int, int], float] = {}
    for n in level.nodes:
        cn = mapping[n]
        self_w[cn] = self_w.get(cn, 0.0) + level.self_weight.get(n, 0.0)
        for other, w in level.adj[n].items():
            if other <= n:
                continue
            co = mapping[other]
            if cn == co:
                self_w[cn] += w
            else:
                key = (min(cn, co), max(cn, co))
                edge_w[key] = edge_w.get(key, 0.0) + w
    agg = _LevelGraph(sorted(new_ids.values()),
                      [(a, b, w) for (a, b), w in edge_w.items()],
                      self_weight=self_w)
    return agg, mapping


def louvain(graph: ClusterGraph) -> CommunityPartition:
    """Standard Louvain: local moving then aggregation, repeated to a fixed
    point. Deterministic; records modularity after every pass."""
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    level = _LevelGraph(graph.nodes, [(e.a, e.b, e.weight) for e in graph.edges])
    node_to_top = {n: n for n in graph.nodes}

    history: list[float] = []
    while True:
        comm = {n: n for n in level.nodes}
        moved = _local_move(level, comm)
        history.append(_modularity(level, comm))
        if not moved:
            break
        level, mapping = _aggregate(level, comm)
        node_to_top = {n: mapping[c] for n, c in node_to_top.items()}

    dense: dict[int, int] = {}
    assignment: dict[int, int] = {}
    for n in sorted(node_to_top):
        c = node_to_top[n]
        if c not in dense:
            dense[c] = len(dense)
        assignment[n] = dense[c]

    communities = [
        CommunitySummary(cid, [n for n in sorted(assignment) if assignment[n] == cid])
        for cid in sorted(set(assignment.values()))
    ]
    return CommunityPartition(assignment=assignment,
                              modularity=history[-1] if history else 0.0,
                              pass_modularity=history,
                              communities=communities)


def score_communities(partition: CommunityPartition,
                      cluster_scores: dict[int, ClusterScore]) -> list[CommunitySummary]:
    """Post-weighted hate score per community: sum(hateful)/sum(posts) over
    member clusters, not a mean of cluster scores."""
    for summary in partition.communities:
        missing = [c for c in summary.cluster_ids if c not in cluster_scores]
        if missing:
            raise ValueError(f"clusters without scores: {missing}")
        summary.posts = sum(cluster_scores[c].total for c in summary.cluster_ids)
        summary.hateful = sum(cluster_scores[c].hateful for c in summary.cluster_ids)
    return partition.communities


def graph_to_json(graph: ClusterGraph) -> str:
    return json.dumps({
        "nodes": graph.nodes,
        "edges": [{"a": e.a, "b": e.b, "w": e.weight} for e in graph.edges],
        "percentile": graph.percentile,
        "threshold": graph.threshold,
    }, sort_keys=True)


def partition_to_json(partition: CommunityPartition) -> str:
    return json.dumps({
        "modularity": partition.modularity,
        "pass_modularity": partition.pass_modularity,
        "communities": [
            {"id": c.id, "clusters": c.cluster_ids, "posts": c.posts,
             "hateful": c.hateful, "hate_score": c.hate_score}
            for c in partition.communities
        ],
    }, sort_keys=True)


def graph_to_dot(graph: ClusterGraph,
                 assignment: dict[int, int] | None = None) -> str:
    lines = ["graph clusters {"]
    for n in graph.nodes:
        attrs = f' [community={assignment[n]}]' if assignment else ""
        lines.append(f"  n{n}{attrs};")
    for e in graph.edges:
        lines.append(f'  n{e.a} -- n{e.b} [weight="{e.weight:.6f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
