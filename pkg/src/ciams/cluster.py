"""The four partitioning methods used to derive index features.

All methods are deterministic for a fixed seed and side-effect free; a call
never mutates its input subsample. Degenerate inputs (all rows identical)
collapse to a single cluster rather than raising.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import ALL_CLUSTERING_METHODS
from .errors import ClusteringFailure, ValidationError
from .util import rng_for


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray  # final cluster ids in [0, k)
    k: int  # effective number of clusters
    method: str
    noise_mask: np.ndarray = None  # pre-resolution noise flags (hdbscan only)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        if self.noise_mask is not None:
            mask = np.asarray(self.noise_mask, dtype=bool)
            mask.flags.writeable = False
            object.__setattr__(self, "noise_mask", mask)


def _pairwise_sq_dists(x, y=None):
    y = x if y is None else y
    xx = np.sum(x * x, axis=1)[:, None]
    yy = np.sum(y * y, axis=1)[None, :]
    d2 = xx + yy - 2.0 * (x @ y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _compact_labels(labels):
    """Relabel cluster ids to [0, k) by order of first appearance."""
    labels = np.asarray(labels)
    out = np.empty_like(labels)
    mapping = {}
    for i, lab in enumerate(labels):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out, len(mapping)


# ---------------------------------------------------------------------------
# k-means


def _kmeanspp_init(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total))
            idx = min(idx, n - 1)
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def lloyd_iterations(x, centers, max_iter=300):
    """Run Lloyd updates; returns (labels, centers, per-iteration WCSS history)."""
    n = x.shape[0]
    k = centers.shape[0]
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _pairwise_sq_dists(x, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        for j in range(k):
            if not np.any(new_labels == j):
                # reseed an empty cluster at the worst-fit point
                worst = int(np.argmax(d2[np.arange(n), new_labels]))
                new_labels[worst] = j
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            centers[j] = x[labels == j].mean(axis=0)
    return labels, centers, history


def kmeans_fit(x, k, seed, n_init=10):
    """k-means++ seeding with `n_init` restarts, keeping the lowest-WCSS run."""
    best = None
    for restart in range(n_init):
        rng = rng_for(seed, "kmeans", restart)
        centers = _kmeanspp_init(x, k, rng)
        labels, centers, history = lloyd_iterations(x, centers.copy())
        wcss = history[-1]
        if best is None or wcss < best[0]:
            best = (wcss, labels)
    return best[1]


# ---------------------------------------------------------------------------
# Ward agglomerative


def _ward_cost_row(centroids, sizes, j, active):
    diff = centroids[active] - centroids[j]
    d2 = np.sum(diff * diff, axis=1)
    return (sizes[active] * sizes[j] / (sizes[active] + sizes[j])) * d2


def ward_merge_sequence(x, stop_at_k=1):
    """Greedy merges minimizing the within-cluster scatter increase.

    Returns (merges, labels) where merges is a list of
    (cost, members_a, members_b) with members as sorted point-index tuples,
    and labels is the partition after stopping at `stop_at_k` clusters.
    """
    n = x.shape[0]
    centroids = x.astype(float).copy()
    sizes = np.ones(n)
    members = [(i,) for i in range(n)]
    active = np.ones(n, dtype=bool)
    cost = np.full((n, n), np.inf)
    for i in range(n):
        idx = np.arange(i + 1, n)
        if idx.size:
            cost[i, idx] = _ward_cost_row(centroids, sizes, i, idx)
    merges = []
    owner = np.arange(n)  # point -> active cluster slot
    clusters = n
    while clusters > stop_at_k:
        flat = int(np.argmin(cost))
        i, j = divmod(flat, n)
        if not math.isfinite(cost[i, j]):
            break
        merges.append((float(cost[i, j]), members[i], members[j]))
        # cluster j folds into slot i
        new_centroid = (sizes[i] * centroids[i] + sizes[j] * centroids[j]) / (sizes[i] + sizes[j])
        centroids[i] = new_centroid
        sizes[i] += sizes[j]
        members[i] = tuple(sorted(members[i] + members[j]))
        active[j] = False
        owner[np.array(members[j], dtype=int)] = i
        cost[j, :] = np.inf
        cost[:, j] = np.inf
        others = np.flatnonzero(active)
        others = others[others != i]
        if others.size:
            fresh = _ward_cost_row(centroids, sizes, i, others)
            lo = others < i
            cost[others[lo], i] = fresh[lo]
            cost[i, others[~lo]] = fresh[~lo]
        clusters -= 1
    slot_labels = owner[np.arange(n)]
    labels, _ = _compact_labels(slot_labels)
    return merges, labels


def ward_fit(x, k):
    _, labels = ward_merge_sequence(x, stop_at_k=k)
    return labels


# ---------------------------------------------------------------------------
# spectral


def spectral_embedding(affinity, k):
    """Bottom-k eigenvectors of the symmetric normalized Laplacian, row-normalized."""
    w = np.asarray(affinity, dtype=float)
    n = w.shape[0]
    deg = w.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = -(inv_sqrt[:, None] * w * inv_sqrt[None, :])
    lap[np.arange(n), np.arange(n)] += 1.0
    lap = 0.5 * (lap + lap.T)
    try:
        _, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, k - 1])
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError) as exc:
        raise ClusteringFailure(f"spectral eigensolver failed: {exc}") from exc
    norms = np.linalg.norm(vecs, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return vecs / safe[:, None]


def rbf_affinity(x):
    """RBF affinity with the median pairwise squared distance as bandwidth."""
    d2 = _pairwise_sq_dists(x)
    off_diag = d2[~np.eye(d2.shape[0], dtype=bool)]
    bandwidth = float(np.median(off_diag)) if off_diag.size else 0.0
    if bandwidth <= 0:
        bandwidth = 1.0
    return np.exp(-d2 / bandwidth)


def spectral_fit(x, k, seed):
    embedding = spectral_embedding(rbf_affinity(x), k)
    return kmeans_fit(embedding, k, rng_for(seed, "spectral-seed").integers(1 << 31))


# ---------------------------------------------------------------------------
# density-based hierarchy (HDBSCAN-style)


def _mst_edges(weights):
    """Prim's algorithm on a dense symmetric weight matrix; edges sorted ascending."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    best[0] = 0.0
    edges = []
    for _ in range(n):
        masked = np.where(in_tree, np.inf, best)
        u = int(np.argmin(masked))
        in_tree[u] = True
        if parent[u] >= 0:
            edges.append((best[u], parent[u], u))
        row = weights[u]
        better = ~in_tree & (row < best)
        best[better] = row[better]
        parent[better] = u
    edges.sort(key=lambda e: e[0])
    return edges


def _single_linkage(edges, n):
    """Union-find merge of sorted MST edges into a dendrogram.

    Returns (children, dists, sizes): internal node i (id n+i) merges
    children[i] at distance dists[i] producing a cluster of sizes[i] points.
    """
    parent = list(range(2 * n - 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    children = np.empty((n - 1, 2), dtype=np.int64)
    dists = np.empty(n - 1)
    sizes = np.empty(n - 1, dtype=np.int64)
    size = {i: 1 for i in range(n)}
    nxt = n
    for dist, u, v in edges:
        ru, rv = find(u), find(v)
        children[nxt - n] = (ru, rv)
        dists[nxt - n] = dist
        sizes[nxt - n] = size[ru] + size[rv]
        size[nxt] = size[ru] + size[rv]
        parent[ru] = nxt
        parent[rv] = nxt
        nxt += 1
    return children, dists, sizes


def _leaves_of(node, children, n):
    out = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur < n:
            out.append(cur)
        else:
            stack.extend(children[cur - n])
    return out


def _hdbscan_labels(x, min_cluster_size, min_samples):
    """Density-based clusters via mutual reachability; -1 marks noise."""
    n = x.shape[0]
    if n < 2 * min_cluster_size or n <= min_samples:
        return np.full(n, -1, dtype=np.int64)
    d = np.sqrt(_pairwise_sq_dists(x))
    sorted_d = np.sort(d, axis=1)
    core = sorted_d[:, min_samples - 1]
    mutual = np.maximum(np.maximum.outer(core, core), d)
    np.fill_diagonal(mutual, 0.0)
    edges = _mst_edges(mutual)
    children, dists, sizes = _single_linkage(edges, n)

    def node_size(node):
        return 1 if node < n else int(sizes[node - n])

    positive = dists[dists > 0]
    floor = max(1e-12, 1e-9 * float(positive.max())) if positive.size else 1e-12
    lam = 1.0 / np.maximum(dists, floor)

    # condense the dendrogram: a split only counts when both sides are big enough
    point_parent = np.full(n, -1, dtype=np.int64)
    point_lambda = np.zeros(n)
    cluster_parent = {0: -1}
    cluster_birth = {0: 0.0}
    cluster_children = {0: []}
    next_cid = 1
    root = 2 * n - 2
    stack = [(root, 0)]
    while stack:
        node, cid = stack.pop()
        if node < n:
            point_parent[node] = cid
            point_lambda[node] = np.inf
            continue
        left, right = children[node - n]
        lam_here = lam[node - n]
        big_left = node_size(left) >= min_cluster_size
        big_right = node_size(right) >= min_cluster_size
        if big_left and big_right:
            for child in (left, right):
                cluster_parent[next_cid] = cid
                cluster_birth[next_cid] = lam_here
                cluster_children.setdefault(cid, []).append(next_cid)
                cluster_children[next_cid] = []
                stack.append((child, next_cid))
                next_cid += 1
        elif big_left or big_right:
            big, small = (left, right) if big_left else (right, left)
            for pt in _leaves_of(small, children, n):
                point_parent[pt] = cid
                point_lambda[pt] = lam_here
            stack.append((big, cid))
        else:
            for pt in _leaves_of(node, children, n):
                point_parent[pt] = cid
                point_lambda[pt] = lam_here

    return _select_clusters(
        n, point_parent, point_lambda, cluster_parent, cluster_birth, cluster_children
    )


def _select_clusters(n, point_parent, point_lambda, parent, birth, kids):
    cids = sorted(birth)
    stability = {c: 0.0 for c in cids}
    for p in range(n):
        c = point_parent[p]
        contrib = point_lambda[p] - birth[c]
        stability[c] += min(contrib, 1e12)  # cap duplicate-point infinities
    for c in cids:
        if parent[c] >= 0:
            gap = birth[c] - birth[parent[c]]
            size = _cluster_size(c, kids, point_parent)
            stability[parent[c]] += min(gap, 1e12) * size

    chosen = {}
    subtree = {}
    for c in sorted(cids, reverse=True):
        child_total = sum(subtree[k] for k in kids.get(c, []))
        if c == 0:
            chosen[c] = False  # the root (all points) is never a cluster
            subtree[c] = child_total
        elif not kids.get(c) or stability[c] >= child_total:
            chosen[c] = True
            subtree[c] = stability[c]
        else:
            chosen[c] = False
            subtree[c] = child_total

    def selected_ancestor(c):
        # the topmost chosen cluster on the path wins (it absorbed descendants)
        top = -1
        while c >= 0:
            if chosen.get(c):
                top = c
            c = parent[c]
        return top

    labels = np.full(n, -1, dtype=np.int64)
    cache = {}
    for p in range(n):
        c = point_parent[p]
        if c not in cache:
            cache[c] = selected_ancestor(c)
        labels[p] = cache[c]
    found = sorted(set(labels[labels >= 0]))
    remap = {old: new for new, old in enumerate(found)}
    return np.array([remap.get(l, -1) for l in labels], dtype=np.int64)


def _cluster_size(c, kids, point_parent):
    size = int(np.sum(point_parent == c))
    for k in kids.get(c, []):
        size += _cluster_size(k, kids, point_parent)
    return size


def resolve_noise(assignment, s):
    """Attach each noise point to the cluster of its nearest non-noise point."""
    if assignment.method != "hdbscan":
        raise ValidationError("resolve_noise applies to hdbscan assignments only")
    labels = np.asarray(assignment.labels).copy()
    noise = labels < 0
    if not noise.any():
        return assignment
    if noise.all():
        return ClusterAssignment(
            labels=np.zeros(labels.size, dtype=np.int64),
            k=1,
            method="hdbscan",
            noise_mask=noise,
        )
    x = s.features
    d2 = _pairwise_sq_dists(x[noise], x[~noise])
    nearest = np.argmin(d2, axis=1)
    labels[noise] = labels[~noise][nearest]
    labels, k = _compact_labels(labels)
    return ClusterAssignment(labels=labels, k=k, method="hdbscan", noise_mask=noise)


# ---------------------------------------------------------------------------
# dispatcher


def hdbscan_min_cluster_size(h, fraction=0.01):
    return max(5, int(math.ceil(fraction * h)))


def cluster(s, method, k=2, seed=0, min_cluster_size_fraction=0.01):
    """Partition a subsample with the requested method.

    Deterministic for a fixed seed. All-identical inputs produce a single
    cluster with k_effective = 1 for every method.
    """
    if method not in ALL_CLUSTERING_METHODS:
        raise ValidationError(f"unknown clustering method: {method!r}")
    x = np.asarray(s.features, dtype=float)
    h = x.shape[0]
    if h < k:
        raise ValidationError("subsample smaller than requested cluster count")
    if not np.isfinite(x).all():
        raise ValidationError("features must be finite")

    if np.ptp(x, axis=0).max(initial=0.0) == 0.0:
        labels = np.zeros(h, dtype=np.int64)
        mask = np.zeros(h, dtype=bool) if method == "hdbscan" else None
        return ClusterAssignment(labels=labels, k=1, method=method, noise_mask=mask)

    if method == "kmeans":
        labels = kmeans_fit(x, k, seed)
    elif method == "agglomerative":
        labels = ward_fit(x, k)
    elif method == "spectral":
        labels = spectral_fit(x, k, seed)
    else:
        mcs = hdbscan_min_cluster_size(h, min_cluster_size_fraction)
        raw = _hdbscan_labels(x, mcs, mcs)
        noise_mask = raw < 0
        if noise_mask.all():
            prelim = ClusterAssignment(labels=raw, k=0, method="hdbscan", noise_mask=noise_mask)
        else:
            compact = raw.copy()
            prelim = ClusterAssignment(
                labels=compact, k=int(compact.max()) + 1, method="hdbscan", noise_mask=noise_mask
            )
        return resolve_noise(prelim, s)

    labels, k_eff = _compact_labels(labels)
    return ClusterAssignment(labels=labels, k=k_eff, method=method)
