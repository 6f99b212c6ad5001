"""Density-based cleaning of binary attention maps.

DBSCAN over pixel coordinates with Euclidean distance; a point's
epsilon-neighborhood includes the point itself. Points are scanned in
row-major order and a border point joins the first cluster that reaches
it, so labeling is fully deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .bundle import BinaryAttentionMap

DEFAULT_EPS = 2.0
DEFAULT_MIN_NEIGHBORS = 5
DEFAULT_MIN_CLUSTER_SIZE = 30

_UNVISITED = -2
_NOISE = -1


@dataclass
class AttentionCluster:
    points: set[tuple[int, int]]
    is_noise: bool = False


@dataclass
class CleanSegment:
    word_index: int
    pixels: set[tuple[int, int]]


def _row_major(points) -> list[tuple[int, int]]:
    return sorted({(int(x), int(y)) for x, y in points}, key=lambda p: (p[1], p[0]))


def dbscan_labels(points, eps: float = DEFAULT_EPS,
                  min_neighbors: int = DEFAULT_MIN_NEIGHBORS) -> tuple[list[tuple[int, int]], list[int]]:
    """Label points with cluster ids (row-major scan order); -1 marks noise.

    Neighbor queries use a fixed-radius grid index with cell size eps, so
    each query touches at most a 3x3 cell patch.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_neighbors < 1:
        raise ValueError("min_neighbors must be >= 1")
    pts = _row_major(points)
    n = len(pts)
    buckets: dict[tuple[int, int], list[int]] = {}
    for i, (x, y) in enumerate(pts):
        buckets.setdefault((int(x // eps), int(y // eps)), []).append(i)

    eps2 = eps * eps

    def neighbors(i: int) -> list[int]:
        x, y = pts[i]
        cx, cy = int(x // eps), int(y // eps)
        out = []
        for bx in range(cx - 1, cx + 2):
            for by in range(cy - 1, cy + 2):
                for j in buckets.get((bx, by), ()):
                    dx = pts[j][0] - x
                    dy = pts[j][1] - y
                    if dx * dx + dy * dy <= eps2:
                        out.append(j)
        return out

    labels = [_UNVISITED] * n
    cluster_id = -1
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        seed_neighbors = neighbors(i)
        if len(seed_neighbors) < min_neighbors:
            labels[i] = _NOISE
            continue
        cluster_id += 1
        labels[i] = cluster_id
        queue = deque(sorted(seed_neighbors))
        while queue:
            j = queue.popleft()
            if labels[j] == _NOISE:
                labels[j] = cluster_id  # border point reached from this cluster
                continue
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cluster_id
            j_neighbors = neighbors(j)
            if len(j_neighbors) >= min_neighbors:
                queue.extend(sorted(j_neighbors))
    return pts, labels


def dbscan(points, eps: float = DEFAULT_EPS,
           min_neighbors: int = DEFAULT_MIN_NEIGHBORS) -> list[AttentionCluster]:
    """Cluster pixel coordinates; returns clusters in discovery order plus a
    trailing noise cluster when any point is unclustered."""
    pts, labels = dbscan_labels(points, eps, min_neighbors)
    by_label: dict[int, set[tuple[int, int]]] = {}
    for p, lab in zip(pts, labels):
        by_label.setdefault(lab, set()).add(p)
    clusters = [AttentionCluster(points=by_label[k])
                for k in sorted(by_label) if k >= 0]
    if _NOISE in by_label:
        clusters.append(AttentionCluster(points=by_label[_NOISE], is_noise=True))
    return clusters


def clean_segment(bmap: BinaryAttentionMap, eps: float = DEFAULT_EPS,
                  min_neighbors: int = DEFAULT_MIN_NEIGHBORS,
                  min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE) -> CleanSegment:
    """Drop noise points and clusters below ``min_cluster_size``."""
    clusters = dbscan(bmap.pixels(), eps, min_neighbors)
    pixels: set[tuple[int, int]] = set()
    for c in clusters:
        if not c.is_noise and len(c.points) >= min_cluster_size:
            pixels |= c.points
    return CleanSegment(word_index=bmap.word_index, pixels=pixels)
