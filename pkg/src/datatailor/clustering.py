"""Per-task domain clustering.

Pairwise distances come from the Gram identity
D[x, y] = sqrt(S[x, x] + S[y, y] - 2 S[x, y]) with S = X X^T, negative
radicands (numerical noise) clamped to zero. Agglomeration follows the
Ward criterion: merge the pair with the minimum increase in the sum of
squared errors,

    delta(A, B) = n_A * n_B / (n_A + n_B) * ||mu_A - mu_B||^2,

run with the nearest-neighbor-chain algorithm and Lance-Williams updates
(O(n^2)). The "paper_literal" variant uses the unsquared centroid distance
instead; that form has no reducibility guarantee, so it runs as a plain
greedy agglomeration and its merge heights may be non-monotone.

The partition is obtained by applying merges in order while their height
stays within lambda times the largest merge height.

Cluster labels follow the usual dendrogram convention: leaves are
0..n-1 and the cluster created by merge k gets label n+k. Ties are broken
by the lowest cluster index (then lowest partner index) everywhere, so
dendrograms are bit-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

WARD_VARIANTS = ("classical", "paper_literal")


def _check_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError(f"expected a non-empty 2-D point array, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("points contain non-finite entries")
    return pts


def pairwise_sq_distances(points) -> np.ndarray:
    """Squared Euclidean distances via the Gram identity, exactly symmetric."""
    pts = _check_points(points)
    gram = pts @ pts.T
    norms = np.diag(gram).copy()
    sq = norms[:, None] + norms[None, :] - 2.0 * gram
    np.maximum(sq, 0.0, out=sq)
    upper = np.triu(sq, 1)
    return upper + upper.T


def pairwise_distances(points) -> np.ndarray:
    """Euclidean distance matrix (zero diagonal, symmetric)."""
    return np.sqrt(pairwise_sq_distances(points))


def _direct_sq_distances(pts: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Squared distances by direct differencing, chunked to bound memory.

    Costlier than the Gram identity but free of its cancellation noise;
    the agglomeration uses this so tiny merge heights stay accurate at
    relative precision.
    """
    n = pts.shape[0]
    out = np.empty((n, n))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = pts[start:stop, None, :] - pts[None, :, :]
        out[start:stop] = (diff**2).sum(axis=2)
    return out


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float  # delta-SSE of this merge
    size: int      # cardinality of the merged cluster


@dataclass
class Dendrogram:
    n_leaves: int
    merges: list[Merge]
    points: np.ndarray  # leaf coordinates, kept so cuts can produce centroids

    def heights(self) -> np.ndarray:
        return np.asarray([m.height for m in self.merges], dtype=np.float64)


@dataclass
class ClusterSet:
    assignment: np.ndarray  # per-sample cluster index, 0..K-1
    n_clusters: int
    centroids: np.ndarray   # (K, d) means of member points

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)


class _SlotLabels:
    """Union-find over chain slots, mapping each live cluster to its label."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.intp)
        self.label = np.arange(n, dtype=np.intp)
        self.size = np.ones(n, dtype=np.intp)

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def merge(self, x: int, y: int, new_label: int) -> tuple[int, int, int]:
        rx, ry = self.find(x), self.find(y)
        la, lb = int(self.label[rx]), int(self.label[ry])
        total = int(self.size[rx] + self.size[ry])
        self.parent[ry] = rx
        self.label[rx] = new_label
        self.size[rx] = total
        return la, lb, total


def _relabel(raw, n: int) -> list[Merge]:
    """Order raw (slot_a, slot_b, height) merges by height and assign labels."""
    heights = np.asarray([h for _, _, h in raw])
    order = np.argsort(heights, kind="stable")
    slots = _SlotLabels(n)
    merges = []
    for k, idx in enumerate(order):
        a, b, h = raw[idx]
        la, lb, total = slots.merge(a, b, n + k)
        left, right = (la, lb) if la < lb else (lb, la)
        merges.append(Merge(left=left, right=right, height=float(h), size=total))
    return merges


def _nn_chain_ward(points: np.ndarray) -> list[Merge]:
    """Classical Ward by nearest-neighbor chain with Lance-Williams updates."""
    n = points.shape[0]
    delta = _direct_sq_distances(points) / 2.0  # singleton merge cost
    np.fill_diagonal(delta, np.inf)
    size = np.ones(n)
    alive = np.ones(n, dtype=bool)
    chain: list[int] = []
    raw: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        if not chain:
            chain.append(int(np.flatnonzero(alive)[0]))
        while True:
            x = chain[-1]
            row = np.where(alive, delta[x], np.inf)
            row[x] = np.inf
            j = int(np.argmin(row))
            if len(chain) > 1 and not row[j] < delta[x, chain[-2]]:
                j = chain[-2]  # reciprocal pair found (ties stay with the chain)
            if len(chain) > 1 and j == chain[-2]:
                chain.pop()
                chain.pop()
                a, b = (x, j) if x < j else (j, x)
                height = float(delta[a, b])
                raw.append((a, b, height))
                na, nb = size[a], size[b]
                others = alive.copy()
                others[a] = others[b] = False
                nc = size[others]
                merged = (
                    (na + nc) * delta[a, others]
                    + (nb + nc) * delta[b, others]
                    - nc * height
                ) / (na + nb + nc)
                delta[a, others] = merged
                delta[others, a] = merged
                alive[b] = False
                delta[b, :] = np.inf
                delta[:, b] = np.inf
                size[a] = na + nb
                break
            chain.append(j)
    return _relabel(raw, n)


def _greedy_ward_literal(points: np.ndarray) -> list[Merge]:
    """Greedy agglomeration under the unsquared centroid-distance criterion."""
    n = points.shape[0]
    sums = points.copy()
    size = np.ones(n)
    label = np.arange(n)
    alive = np.ones(n, dtype=bool)
    delta = np.sqrt(_direct_sq_distances(points)) * 0.5  # singleton factor is 1/2
    np.fill_diagonal(delta, np.inf)
    merges = []
    for k in range(n - 1):
        flat = int(np.argmin(delta))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        h = float(delta[i, j])
        la, lb = int(label[i]), int(label[j])
        left, right = (la, lb) if la < lb else (lb, la)
        total = int(size[i] + size[j])
        merges.append(Merge(left=left, right=right, height=h, size=total))
        sums[i] += sums[j]
        size[i] += size[j]
        label[i] = n + k
        alive[j] = False
        delta[j, :] = np.inf
        delta[:, j] = np.inf
        others = alive.copy()
        others[i] = False
        if others.any():
            mu_i = sums[i] / size[i]
            mu_o = sums[others] / size[others][:, None]
            gap = np.sqrt(((mu_o - mu_i) ** 2).sum(axis=1))
            f = size[i] * size[others] / (size[i] + size[others])
            delta[i, others] = f * gap
            delta[others, i] = delta[i, others]
    return merges


def ward_dendrogram(points, variant: str = "classical") -> Dendrogram:
    """Full Ward merge sequence for n >= 2 points."""
    pts = _check_points(points)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("ward_dendrogram needs at least 2 points")
    if variant == "classical":
        merges = _nn_chain_ward(pts)
    elif variant == "paper_literal":
        merges = _greedy_ward_literal(pts)
    else:
        raise ConfigError(f"unknown ward variant: {variant!r}")
    return Dendrogram(n_leaves=n, merges=merges, points=pts)


def cut_dendrogram(dendrogram: Dendrogram, lam: float) -> ClusterSet:
    """Apply merges in order while height <= lam * max height.

    Stops at the first merge exceeding the threshold. All-identical points
    (every height zero) collapse to a single cluster.
    """
    if not (0.0 < lam <= 1.0):
        raise ConfigError(f"lambda must be in (0, 1], got {lam}")
    n = dendrogram.n_leaves
    parent = np.arange(n, dtype=np.intp)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    if dendrogram.merges:
        threshold = lam * max(m.height for m in dendrogram.merges)
        rep = {i: i for i in range(n)}
        for k, m in enumerate(dendrogram.merges):
            if m.height > threshold:
                break
            ra, rb = find(rep[m.left]), find(rep[m.right])
            parent[rb] = ra
            rep[n + k] = ra

    labels = np.empty(n, dtype=np.intp)
    seen: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        if root not in seen:
            seen[root] = len(seen)
        labels[i] = seen[root]
    n_clusters = len(seen)
    centroids = np.empty((n_clusters, dendrogram.points.shape[1]))
    for c in range(n_clusters):
        centroids[c] = dendrogram.points[labels == c].mean(axis=0)
    return ClusterSet(assignment=labels, n_clusters=n_clusters, centroids=centroids)


def cluster_task(points, lam: float, variant: str = "classical") -> ClusterSet:
    """Ward dendrogram plus threshold cut; a single point is its own cluster."""
    pts = _check_points(points)
    if pts.shape[0] == 1:
        if not (0.0 < lam <= 1.0):
            raise ConfigError(f"lambda must be in (0, 1], got {lam}")
        return ClusterSet(
            assignment=np.zeros(1, dtype=np.intp),
            n_clusters=1,
            centroids=pts.copy(),
        )
    return cut_dendrogram(ward_dendrogram(pts, variant=variant), lam)
