"""Histogram-based tree growing shared by the tree, forest, and boosting models.

Features are binned once per fit; when a column has at most `max_bins`
distinct values the binning is exact (thresholds are midpoints between
consecutive distinct values), so small-sample fits match exhaustive split
search.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class Binner:
    def __init__(self, max_bins=256):
        self.max_bins = max_bins
        self.thresholds = None  # per-feature ascending cut points

    def fit(self, x):
        self.thresholds = []
        for c in range(x.shape[1]):
            uniq = np.unique(x[:, c])
            if uniq.size <= 1:
                cuts = np.empty(0)
            elif uniq.size <= self.max_bins:
                cuts = (uniq[:-1] + uniq[1:]) / 2.0
            else:
                qs = np.quantile(x[:, c], np.linspace(0, 1, self.max_bins + 1)[1:-1])
                cuts = np.unique(qs)
            self.thresholds.append(cuts)
        return self

    def transform(self, x):
        codes = np.empty(x.shape, dtype=np.int32)
        for c, cuts in enumerate(self.thresholds):
            codes[:, c] = np.searchsorted(cuts, x[:, c], side="left")
        return codes


@dataclass
class Tree:
    """Flat-array binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # node value (leaf prediction; interior majority for caps)
    depth: np.ndarray

    def predict(self, x, depth_cap=None):
        x = np.asarray(x, dtype=float)
        node = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            interior = self.feature[node] >= 0
            if depth_cap is not None:
                interior &= self.depth[node] < depth_cap
            idx = np.flatnonzero(interior)
            if idx.size == 0:
                break
            feats = self.feature[node[idx]]
            go_left = x[idx, feats] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
        return self.value[node]

    @property
    def max_depth(self):
        return int(self.depth.max())


def grow_tree(codes, thresholds, grad, hess, *, criterion="sse", max_depth=64,
              reg_lambda=0.0, min_samples_leaf=1, min_child_weight=0.0,
              mtry=None, rng=None, gain_out=None):
    """Grow one tree on binned features.

    criterion "sse": second-order gain with leaf value -G/(H+lambda).
    criterion "gini": grad holds positive-class indicators, hess all ones;
    leaf value is the majority label in {-1, +1}.
    Returns (tree, leaf_assignment_of_training_rows).
    """
    n, n_features = codes.shape
    n_bins = max((t.size + 1 for t in thresholds), default=1)
    offsets = (np.arange(n_features) * n_bins).astype(np.int32)
    flat_codes = codes + offsets[None, :]
    valid_cut = np.zeros((n_features, n_bins - 1), dtype=bool) if n_bins > 1 else None
    for f, t in enumerate(thresholds):
        if t.size:
            valid_cut[f, : t.size] = True

    feature, threshold, left, right, value, depth = [], [], [], [], [], []
    leaf_of = np.zeros(n, dtype=np.int64)

    def node_value(g_sum, h_sum):
        if criterion == "gini":
            return 1.0 if 2.0 * g_sum > h_sum else -1.0
        return -g_sum / (h_sum + reg_lambda) if (h_sum + reg_lambda) > 0 else 0.0

    def impurity_score(g_sum, h_sum):
        # larger is better; gini path uses negative weighted impurity
        if criterion == "gini":
            if h_sum <= 0:
                return 0.0
            p = g_sum / h_sum
            return -h_sum * 2.0 * p * (1.0 - p)
        return g_sum * g_sum / (h_sum + reg_lambda) if (h_sum + reg_lambda) > 0 else 0.0

    stack = deque([(np.arange(n, dtype=np.int64), 0, -1, False)])  # members, depth, parent, side
    while stack:
        members, d, parent, is_right = stack.popleft()
        g_sum = float(grad[members].sum())
        h_sum = float(hess[members].sum())
        node_id = len(feature)
        if parent >= 0:
            if is_right:
                right[parent] = node_id
            else:
                left[parent] = node_id
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(node_value(g_sum, h_sum))
        depth.append(d)

        if d >= max_depth or members.size < 2 * min_samples_leaf:
            leaf_of[members] = node_id
            continue

        m = members.size
        counts = np.bincount(flat_codes[members].ravel(), minlength=n_features * n_bins)
        gs = np.bincount(
            flat_codes[members].ravel(),
            weights=np.repeat(grad[members], n_features),
            minlength=n_features * n_bins,
        )
        hs = np.bincount(
            flat_codes[members].ravel(),
            weights=np.repeat(hess[members], n_features),
            minlength=n_features * n_bins,
        )
        counts = counts.reshape(n_features, n_bins)
        gs = gs.reshape(n_features, n_bins)
        hs = hs.reshape(n_features, n_bins)
        if n_bins <= 1:
            leaf_of[members] = node_id
            continue
        cl = np.cumsum(counts, axis=1)[:, :-1]
        gl = np.cumsum(gs, axis=1)[:, :-1]
        hl = np.cumsum(hs, axis=1)[:, :-1]
        cr = m - cl
        gr = g_sum - gl
        hr = h_sum - hl

        with np.errstate(divide="ignore", invalid="ignore"):
            if criterion == "gini":
                pl = np.where(hl > 0, gl / np.where(hl > 0, hl, 1), 0.0)
                pr = np.where(hr > 0, gr / np.where(hr > 0, hr, 1), 0.0)
                child_score = -(hl * 2 * pl * (1 - pl)) - (hr * 2 * pr * (1 - pr))
            else:
                child_score = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
        gain = child_score - impurity_score(g_sum, h_sum)
        ok = valid_cut & (cl >= min_samples_leaf) & (cr >= min_samples_leaf)
        if min_child_weight > 0:
            ok &= (hl >= min_child_weight) & (hr >= min_child_weight)
        if mtry is not None and mtry < n_features:
            chosen = rng.choice(n_features, size=mtry, replace=False)
            mask = np.zeros(n_features, dtype=bool)
            mask[chosen] = True
            ok &= mask[:, None]
        gain = np.where(ok, gain, -np.inf)
        best = int(np.argmax(gain))
        best_gain = gain.ravel()[best]
        if not np.isfinite(best_gain) or best_gain <= 1e-12:
            leaf_of[members] = node_id
            continue
        f, b = divmod(best, n_bins - 1)
        feature[node_id] = f
        threshold[node_id] = float(self_threshold(thresholds, f, b))
        if gain_out is not None:
            gain_out[f] += float(best_gain)
        go_left = codes[members, f] <= b
        stack.append((members[go_left], d + 1, node_id, False))
        stack.append((members[~go_left], d + 1, node_id, True))

    tree = Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=float),
        depth=np.asarray(depth, dtype=np.int32),
    )
    return tree, leaf_of


def self_threshold(thresholds, f, b):
    return thresholds[f][b]


@dataclass
class DecisionTreeClassifier:
    """Gini tree grown to purity, depth backward-pruned by cross-validation."""

    max_depth: int = None
    tree: Tree = None
    binner: Binner = None

    def fit(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        self.binner = Binner().fit(x)
        codes = self.binner.transform(x)
        grad = (y == 1).astype(float)
        hess = np.ones(y.size)
        cap = self.max_depth if self.max_depth is not None else 64
        self.tree, _ = grow_tree(codes, self.binner.thresholds, grad, hess,
                                 criterion="gini", max_depth=cap)
        return self

    def predict(self, x, depth_cap=None):
        return self.tree.predict(np.asarray(x, dtype=float), depth_cap=depth_cap).astype(np.int64)


@dataclass
class RandomForestClassifier:
    """Bagged Gini trees with sqrt(p) features per split and majority vote."""

    n_trees: int = 100
    max_depth: int = None
    seed: int = 0
    trees: list = field(default_factory=list)

    def fit(self, x, y):
        from ..util import rng_for

        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        binner = Binner().fit(x)
        codes = binner.transform(x)
        grad_all = (y == 1).astype(float)
        n = y.size
        mtry = max(1, int(round(np.sqrt(x.shape[1]))))
        cap = self.max_depth if self.max_depth is not None else 64
        self.trees = []
        for t in range(self.n_trees):
            rng = rng_for(self.seed, "rf-tree", t)
            rows = rng.integers(0, n, size=n)
            tree, _ = grow_tree(codes[rows], binner.thresholds, grad_all[rows],
                                np.ones(n), criterion="gini", max_depth=cap,
                                mtry=mtry, rng=rng)
            self.trees.append(tree)
        return self

    def predict(self, x, depth_cap=None):
        x = np.asarray(x, dtype=float)
        votes = np.zeros(x.shape[0])
        for tree in self.trees:
            votes += tree.predict(x, depth_cap=depth_cap)
        return np.where(votes > 0, 1, -1).astype(np.int64)

    @property
    def max_grown_depth(self):
        return max((t.max_depth for t in self.trees), default=0)
