"""Independent brute-force references used to freeze expected values.

Each oracle deliberately takes a different computational path from the
library code it checks.
"""

import numpy as np


def cubic_weight(x, a=-0.5):
    x = abs(x)
    if x <= 1:
        return (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1
    if x < 2:
        return a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a
    return 0.0


def bicubic_reference(grid, out_h, out_w):
    """Per-pixel 4x4 tap evaluation with half-pixel centers and clamped
    borders (no separable matrix tricks)."""
    grid = np.asarray(grid, dtype=float)
    in_h, in_w = grid.shape
    out = np.zeros((out_h, out_w))
    for oy in range(out_h):
        sy = (oy + 0.5) * in_h / out_h - 0.5
        by = int(np.floor(sy))
        for ox in range(out_w):
            sx = (ox + 0.5) * in_w / out_w - 0.5
            bx = int(np.floor(sx))
            acc = 0.0
            for ty in range(by - 1, by + 3):
                wy = cubic_weight(sy - ty)
                cy = min(max(ty, 0), in_h - 1)
                for tx in range(bx - 1, bx + 3):
                    wx = cubic_weight(sx - tx)
                    cx = min(max(tx, 0), in_w - 1)
                    acc += wy * wx * grid[cy, cx]
            out[oy, ox] = acc
    return out


def dbscan_reference(points, eps, min_neighbors):
    """Density-reachability closure: core components from transitive closure
    over pairwise core adjacency, border points pinned to the smallest
    reachable cluster id (clusters ordered by their earliest row-major core
    point)."""
    pts = sorted({(int(x), int(y)) for x, y in points}, key=lambda p: (p[1], p[0]))
    n = len(pts)
    eps2 = eps * eps
    if n:
        arr = np.array(pts, dtype=float)
        d2 = ((arr[:, None, :] - arr[None, :, :]) ** 2).sum(axis=-1)
        adj = d2 <= eps2
        neigh = [np.nonzero(adj[i])[0].tolist() for i in range(n)]
    else:
        neigh = []
    core = [len(neigh[i]) >= min_neighbors for i in range(n)]

    # union-find over mutually eps-close core points
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        if not core[i]:
            continue
        for j in neigh[i]:
            if core[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    roots = sorted({find(i) for i in range(n) if core[i]},
                   key=lambda r: min(k for k in range(n) if core[k] and find(k) == r))
    cluster_of_root = {r: cid for cid, r in enumerate(roots)}

    labels = [-1] * n
    for i in range(n):
        if core[i]:
            labels[i] = cluster_of_root[find(i)]
    for i in range(n):
        if core[i]:
            continue
        reachable = sorted({cluster_of_root[find(j)] for j in neigh[i] if core[j]})
        if reachable:
            labels[i] = reachable[0]
    return pts, labels


def pack_reference(segments, ranked_words):
    """Assign each grid pixel to the highest-ranked segment containing it,
    then order each block row-major."""
    blocks = {w: [] for w in ranked_words}
    all_pixels = sorted(set().union(*[segments[w] for w in ranked_words]) or set(),
                        key=lambda p: (p[1], p[0]))
    for p in all_pixels:
        for w in ranked_words:
            if p in segments[w]:
                blocks[w].append(p)
                break
    return [(w, blocks[w]) for w in ranked_words]
