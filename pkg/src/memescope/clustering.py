"""Density-based clustering over embedding matrices.

DBSCAN with Euclidean distance; over unit vectors this orders pairs the
same way cosine does (d^2 = 2 - 2cos), which keeps eps values
interpretable. Determinism: points are scanned in input order, expansion
queues are ascending by position, and border points reachable from
several clusters go to the lowest-id claiming cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

NOISE = -1
_UNVISITED = -2

_BLOCK_ROWS = 512


class ClusterSource(str, Enum):
    IMAGE = "image"
    TEXT = "text"
    FUSED = "fused"


@dataclass
class DbscanParams:
    eps: float
    min_samples: int
    source: ClusterSource = ClusterSource.FUSED

    def validate(self) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")


@dataclass(frozen=True)
class Cluster:
    id: int
    member_ids: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.member_ids)


@dataclass
class ClusterResult:
    labels: np.ndarray
    clusters: list[Cluster]
    core_positions: np.ndarray

    @property
    def noise_count(self) -> int:
        return int((self.labels == NOISE).sum())

    @property
    def noise_fraction(self) -> float:
        return self.noise_count / len(self.labels)

    @property
    def clustered_fraction(self) -> float:
        return 1.0 - self.noise_fraction


@dataclass(frozen=True)
class Centroid:
    cluster_id: int
    vector: np.ndarray
    count: int


def _neighbor_lists(points: np.ndarray, eps: float) -> list[np.ndarray]:
    """Positions within Euclidean eps of each point, self included.

    Computed blockwise through the Gram matrix so the full pairwise
    distance matrix never materializes.
    """
    x = points.astype(np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    eps2 = eps * eps
    neighbors: list[np.ndarray] = []
    for start in range(0, len(x), _BLOCK_ROWS):
        block = x[start:start + _BLOCK_ROWS]
        d2 = sq[start:start + _BLOCK_ROWS, None] + sq[None, :] - 2.0 * (block @ x.T)
        np.maximum(d2, 0.0, out=d2)
        for row in d2 <= eps2:
            neighbors.append(np.flatnonzero(row))
    return neighbors


def dbscan(points, params: DbscanParams, ids=None) -> ClusterResult:
    """Standard DBSCAN; a point is core iff its eps-ball holds >= min_samples
    points counting itself. All-noise output is valid."""
    params.validate()
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("dbscan needs a non-empty 2-d point matrix")
    n = len(points)
    ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)

    neighbors = _neighbor_lists(points, params.eps)
    core = np.fromiter((len(nb) >= params.min_samples for nb in neighbors),
                       dtype=bool, count=n)

    labels = np.full(n, _UNVISITED, dtype=np.int64)
    cluster_id = 0
    for start in range(n):
        if labels[start] != _UNVISITED:
            continue
        if not core[start]:
            labels[start] = NOISE
            continue
        labels[start] = cluster_id
        queue = list(neighbors[start])
        head = 0
        while head < len(queue):
            q = queue[head]
            head += 1
            if labels[q] == NOISE:
                labels[q] = cluster_id  # border claim
            elif labels[q] == _UNVISITED:
                labels[q] = cluster_id
                if core[q]:
                    queue.extend(neighbors[q])
        cluster_id += 1

    clusters = []
    for cid in range(cluster_id):
        members = ids[labels == cid]
        clusters.append(Cluster(cid, tuple(int(m) for m in members)))
    return ClusterResult(labels=labels, clusters=clusters,
                         core_positions=np.flatnonzero(core))


def filter_clusters(result: ClusterResult, min_size: int = 30) -> list[Cluster]:
    """Drop clusters below min_size (original ids preserved)."""
    return [c for c in result.clusters if c.size >= min_size]


def centroid(members, cluster_id: int = -1) -> Centroid:
    """Arithmetic mean of member embeddings, deliberately not renormalized."""
    members = np.asarray(members, dtype=np.float64)
    if members.ndim != 2 or len(members) == 0:
        raise ValueError("centroid needs at least one member vector")
    return Centroid(cluster_id, members.mean(axis=0), len(members))


def compute_centroids(clusters: list[Cluster], vectors_by_id) -> list[Centroid]:
    """Centroid per cluster, resolving member ids through a vector lookup."""
    out = []
    for c in clusters:
        mat = np.stack([vectors_by_id(m) for m in c.member_ids])
        out.append(centroid(mat, cluster_id=c.id))
    return out
