"""Partition quality indices and the per-subsample meta-feature vector.

For one subsample, each clustering method contributes 17 internal (geometry
only) and 23 external (against the binary class labeling) indices, in a fixed
schema order. Degenerate values are sanitized, never raised: NaN -> 0,
+inf -> 1e6, -inf -> -1e6.

Variant notes (several indices exist in more than one form in the wild):
  - hubert_gamma is the normalized (correlation) form, bounded in [-1, 1];
    phi is the raw cross-product ratio without the square root.
  - mcnemar is the signed form (nn - ny) / sqrt(nn + ny).
  - precision/recall/f1/weighted_f1 are pair-counting partition measures with
    the class labeling as the reference partition, not per-class scores;
    weighted_f1 weights precision and recall by the marginal pair counts.
  - norm_mutual_info and adj_mutual_info normalize by sqrt(H(U) * H(V)).
  - score is the bounded score-function composite of between/within dispersion.
Entropies use natural logarithms.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .cluster import ClusterAssignment, _pairwise_sq_dists, cluster
from .config import ALL_CLUSTERING_METHODS
from .errors import ClusteringFailure, ValidationError

log = logging.getLogger(__name__)

INTERNAL_INDEX_NAMES = (
    "between_cluster_scatter",
    "banfeld_raftery",
    "ball_hall",
    "pbm",
    "det_ratio",
    "log_det_ratio",
    "ksq_detw",
    "score",
    "silhouette",
    "log_ss_ratio",
    "c_index",
    "dunn",
    "ray_turi",
    "calinski_harabasz",
    "trace_wib",
    "davies_bouldin",
    "within_cluster_scatter",
)

EXTERNAL_INDEX_NAMES = (
    "entropy",
    "purity",
    "recall",
    "folkes_mallows",
    "rogers_tanimoto",
    "f1",
    "kulczynski",
    "norm_mutual_info",
    "sokal_sneath_1",
    "rand",
    "hubert_gamma",
    "homogeneity",
    "completeness",
    "v_measure",
    "jaccard",
    "adj_rand",
    "phi",
    "mcnemar",
    "russel_rao",
    "precision",
    "weighted_f1",
    "sokal_sneath_2",
    "adj_mutual_info",
)

INDEX_NAMES = INTERNAL_INDEX_NAMES + EXTERNAL_INDEX_NAMES


@dataclass(frozen=True)
class IndexVector:
    values: np.ndarray
    schema: tuple  # parallel (method, index_name) pairs
    subsample_ref: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "schema", tuple((m, i) for m, i in self.schema))
        if self.values.shape != (len(self.schema),):
            raise ValidationError("index values and schema lengths differ")


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # clusters x 2
    pair_counts: tuple  # (yy, yn, ny, nn)


def sanitize(x):
    """NaN -> 0, +inf -> 1e6, -inf -> -1e6; finite values pass through."""
    x = float(x)
    if np.isnan(x):
        return 0.0
    if np.isposinf(x):
        return 1e6
    if np.isneginf(x):
        return -1e6
    return x


def _sanitize_array(values):
    return np.array([sanitize(v) for v in values], dtype=float)


def schema_for(methods):
    return tuple((m, name) for m in methods for name in INDEX_NAMES)


def feature_names_for(methods):
    return tuple(f"{m}.{name}" for m, name in schema_for(methods))


# ---------------------------------------------------------------------------
# internal indices


def internal_indices(s, assignment):
    """The 17 geometry-only indices, in schema order, sanitized."""
    x = np.asarray(s.features, dtype=float)
    labels = np.asarray(assignment.labels)
    return _sanitize_array(_internal_raw(x, labels))


def _internal_raw(x, labels):
    n, p = x.shape
    ks = np.unique(labels)
    k = ks.size
    overall = x.mean(axis=0)
    centroids = np.stack([x[labels == c].mean(axis=0) for c in ks])
    sizes = np.array([np.sum(labels == c) for c in ks], dtype=float)

    centered = x - overall
    total_scatter = centered.T @ centered
    tss = float(np.trace(total_scatter))

    within_scatter = np.zeros((p, p))
    wgss_per = np.empty(k)
    mean_dist_to_centroid = np.empty(k)
    sum_dist_to_centroid = np.empty(k)
    for i, c in enumerate(ks):
        member = x[labels == c] - centroids[i]
        within_scatter += member.T @ member
        sq = np.sum(member * member, axis=1)
        wgss_per[i] = sq.sum()
        dists = np.sqrt(sq)
        sum_dist_to_centroid[i] = dists.sum()
        mean_dist_to_centroid[i] = dists.mean()
    wgss = float(wgss_per.sum())
    bgss = float(np.sum(sizes * np.sum((centroids - overall) ** 2, axis=1)))

    d2 = _pairwise_sq_dists(x)
    d = np.sqrt(d2)
    same = labels[:, None] == labels[None, :]
    triu = np.triu(np.ones((n, n), dtype=bool), 1)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = {}
        out["between_cluster_scatter"] = bgss
        ratio = np.where(sizes > 0, wgss_per / sizes, np.nan)
        out["banfeld_raftery"] = float(
            np.sum(np.where(ratio > 0, sizes * np.log(np.where(ratio > 0, ratio, 1.0)), -np.inf))
        )
        out["ball_hall"] = float(np.mean(ratio))

        if k >= 2:
            cen_d2 = _pairwise_sq_dists(centroids)
            iu = np.triu_indices(k, 1)
            max_cen_dist = float(np.sqrt(cen_d2[iu].max()))
            min_cen_d2 = float(cen_d2[iu].min())
        else:
            max_cen_dist = np.nan
            min_cen_d2 = np.nan

        e_t = float(np.sqrt(np.sum(centered**2, axis=1)).sum())
        e_w = float(sum_dist_to_centroid.sum())
        out["pbm"] = ((e_t * max_cen_dist) / (e_w * k)) ** 2 if k >= 2 else np.nan

        sign_t, logdet_t = np.linalg.slogdet(total_scatter)
        sign_w, logdet_w = np.linalg.slogdet(within_scatter)
        if sign_t > 0 and sign_w > 0:
            out["det_ratio"] = float(np.exp(logdet_t - logdet_w))
            out["log_det_ratio"] = float(n * (logdet_t - logdet_w))
            out["ksq_detw"] = float(k * k * np.exp(logdet_w))
        else:
            out["det_ratio"] = np.nan
            out["log_det_ratio"] = np.nan
            out["ksq_detw"] = 0.0 if sign_w == 0 else np.nan

        bcd = float(np.sum(sizes * np.sqrt(np.sum((centroids - overall) ** 2, axis=1)))) / (n * k)
        wcd = float(np.sum(sum_dist_to_centroid / sizes))
        out["score"] = 1.0 - 1.0 / np.exp(np.exp(bcd - wcd))

        out["silhouette"] = _silhouette(d, labels, ks) if k >= 2 else np.nan
        out["log_ss_ratio"] = np.log(bgss / wgss) if k >= 2 else np.nan
        out["c_index"] = _c_index(d, same, triu) if k >= 2 else np.nan
        out["dunn"] = _dunn(d, same, triu) if k >= 2 else np.nan
        out["ray_turi"] = wgss / (n * min_cen_d2) if k >= 2 else np.nan
        out["calinski_harabasz"] = (
            (bgss / (k - 1)) / (wgss / (n - k)) if k >= 2 and n > k else np.nan
        )
        try:
            out["trace_wib"] = (
                float(np.trace(np.linalg.solve(within_scatter, total_scatter - within_scatter)))
                if k >= 2
                else np.nan
            )
        except np.linalg.LinAlgError:
            out["trace_wib"] = np.nan
        out["davies_bouldin"] = (
            _davies_bouldin(centroids, mean_dist_to_centroid) if k >= 2 else np.nan
        )
        out["within_cluster_scatter"] = wgss

    return [out[name] for name in INTERNAL_INDEX_NAMES]


def _silhouette(d, labels, ks):
    n = d.shape[0]
    scores = np.empty(n)
    masks = {c: labels == c for c in ks}
    counts = {c: int(m.sum()) for c, m in masks.items()}
    for i in range(n):
        own = labels[i]
        if counts[own] <= 1:
            scores[i] = 0.0
            continue
        a = d[i][masks[own]].sum() / (counts[own] - 1)
        b = np.inf
        for c in ks:
            if c == own:
                continue
            b = min(b, d[i][masks[c]].mean())
        top = max(a, b)
        scores[i] = 0.0 if top == 0 else (b - a) / top
    return float(scores.mean())


def _c_index(d, same, triu):
    within = d[same & triu]
    if within.size == 0:
        return np.nan
    n_w = within.size
    all_pairs = np.sort(d[triu])
    s_w = within.sum()
    s_min = all_pairs[:n_w].sum()
    s_max = all_pairs[-n_w:].sum()
    if s_max == s_min:
        return np.nan
    return float((s_w - s_min) / (s_max - s_min))


def _dunn(d, same, triu):
    between = d[~same & triu]
    within = d[same & triu]
    max_diam = within.max() if within.size else 0.0
    if between.size == 0:
        return np.nan
    return float(between.min() / max_diam) if max_diam > 0 else np.inf


def _davies_bouldin(centroids, delta):
    k = centroids.shape[0]
    cen_d = np.sqrt(_pairwise_sq_dists(centroids))
    worst = np.empty(k)
    for i in range(k):
        ratios = [
            (delta[i] + delta[j]) / cen_d[i, j] if cen_d[i, j] > 0 else np.inf
            for j in range(k)
            if j != i
        ]
        worst[i] = max(ratios)
    return float(worst.mean())


# ---------------------------------------------------------------------------
# external indices


def contingency(class_labels, assignment):
    """Cross-tabulation of cluster ids against the binary class labels."""
    y = np.asarray(class_labels)
    labels = np.asarray(assignment.labels)
    if y.shape != labels.shape:
        raise ValidationError("class labels and cluster labels differ in length")
    ks = np.unique(labels)
    counts = np.zeros((ks.size, 2), dtype=np.int64)
    for i, c in enumerate(ks):
        counts[i, 0] = np.sum((labels == c) & (y == -1))
        counts[i, 1] = np.sum((labels == c) & (y == 1))
    return ContingencyTable(counts=counts, pair_counts=pair_counts_from_contingency(counts))


def pair_counts_from_contingency(counts):
    """(yy, yn, ny, nn) over point pairs: same-cluster/same-class agreement cells."""
    counts = np.asarray(counts, dtype=np.int64)
    n = int(counts.sum())
    total = n * (n - 1) // 2

    def choose2(v):
        return int(np.sum(v.astype(np.int64) * (v.astype(np.int64) - 1) // 2))

    yy = choose2(counts.ravel())
    same_cluster = choose2(counts.sum(axis=1))
    same_class = choose2(counts.sum(axis=0))
    yn = same_cluster - yy
    ny = same_class - yy
    nn = total - yy - yn - ny
    return (yy, yn, ny, nn)


def _entropy(freq):
    freq = freq[freq > 0]
    if freq.size == 0:
        return 0.0
    prob = freq / freq.sum()
    return float(-np.sum(prob * np.log(prob)))


def _mutual_info(counts):
    counts = counts.astype(float)
    n = counts.sum()
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    mi = 0.0
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            if counts[i, j] > 0:
                mi += (counts[i, j] / n) * np.log(n * counts[i, j] / (rows[i] * cols[j]))
    return max(float(mi), 0.0)


def _expected_mutual_info(counts):
    """Expected MI of the margins under the hypergeometric permutation model."""
    counts = np.asarray(counts, dtype=np.int64)
    n = int(counts.sum())
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    log_fact_n = gammaln(n + 1)
    emi = 0.0
    for a in rows:
        for b in cols:
            lo = max(1, a + b - n)
            hi = min(a, b)
            for nij in range(lo, hi + 1):
                log_term = (
                    gammaln(a + 1)
                    + gammaln(b + 1)
                    + gammaln(n - a + 1)
                    + gammaln(n - b + 1)
                    - log_fact_n
                    - gammaln(nij + 1)
                    - gammaln(a - nij + 1)
                    - gammaln(b - nij + 1)
                    - gammaln(n - a - b + nij + 1)
                )
                emi += (nij / n) * np.log(n * nij / (a * b)) * np.exp(log_term)
    return float(emi)


def external_indices(class_labels, assignment):
    """The 23 label-based indices, in schema order, sanitized.

    The class labeling is the reference partition for the asymmetric
    pair-counting measures (precision counts same-cluster pairs that are
    truly same-class).
    """
    table = contingency(class_labels, assignment)
    return _sanitize_array(_external_raw(table))


def _external_raw(table):
    counts = table.counts.astype(float)
    n = counts.sum()
    yy, yn, ny, nn = (float(v) for v in table.pair_counts)
    total = yy + yn + ny + nn
    m1 = yy + yn  # same-cluster pairs
    m2 = yy + ny  # same-class pairs

    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    h_clusters = _entropy(rows)
    h_classes = _entropy(cols)
    mi = _mutual_info(counts)

    # conditional entropies for homogeneity / completeness
    h_class_given_cluster = 0.0
    h_cluster_given_class = 0.0
    for i in range(counts.shape[0]):
        if rows[i] > 0:
            h_class_given_cluster += (rows[i] / n) * _entropy(counts[i, :])
    for j in range(counts.shape[1]):
        if cols[j] > 0:
            h_cluster_given_class += (cols[j] / n) * _entropy(counts[:, j])

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = {}
        out["entropy"] = h_class_given_cluster
        out["purity"] = float(counts.max(axis=1).sum() / n)
        out["recall"] = yy / m2 if m2 > 0 else np.nan
        out["folkes_mallows"] = yy / np.sqrt(m1 * m2) if m1 > 0 and m2 > 0 else np.nan
        out["rogers_tanimoto"] = (yy + nn) / (yy + nn + 2 * (yn + ny)) if total > 0 else np.nan
        precision = yy / m1 if m1 > 0 else np.nan
        recall = out["recall"]
        out["f1"] = (
            2 * precision * recall / (precision + recall)
            if np.isfinite(precision) and np.isfinite(recall) and precision + recall > 0
            else np.nan
        )
        out["kulczynski"] = (
            0.5 * (precision + recall)
            if np.isfinite(precision) and np.isfinite(recall)
            else np.nan
        )
        denom = np.sqrt(h_clusters * h_classes)
        out["norm_mutual_info"] = mi / denom if denom > 0 else np.nan
        out["sokal_sneath_1"] = yy / (yy + 2 * (yn + ny)) if yy + yn + ny > 0 else np.nan
        out["rand"] = (yy + nn) / total if total > 0 else np.nan
        gamma_den = m1 * m2 * (total - m1) * (total - m2)
        out["hubert_gamma"] = (
            (total * yy - m1 * m2) / np.sqrt(gamma_den) if gamma_den > 0 else np.nan
        )
        out["homogeneity"] = 1.0 - h_class_given_cluster / h_classes if h_classes > 0 else 1.0
        out["completeness"] = 1.0 - h_cluster_given_class / h_clusters if h_clusters > 0 else 1.0
        h, c = out["homogeneity"], out["completeness"]
        out["v_measure"] = 2 * h * c / (h + c) if h + c > 0 else 0.0
        out["jaccard"] = yy / (yy + yn + ny) if yy + yn + ny > 0 else np.nan
        expected = m1 * m2 / total if total > 0 else np.nan
        max_index = 0.5 * (m1 + m2)
        out["adj_rand"] = (yy - expected) / (max_index - expected) if max_index != expected else np.nan
        phi_den = m1 * m2 * (yn + nn) * (ny + nn)
        out["phi"] = (yy * nn - yn * ny) / phi_den if phi_den > 0 else np.nan
        out["mcnemar"] = (nn - ny) / np.sqrt(nn + ny) if nn + ny > 0 else np.nan
        out["russel_rao"] = yy / total if total > 0 else np.nan
        out["precision"] = precision
        out["weighted_f1"] = (m1 + m2) * yy / (m1**2 + m2**2) if m1**2 + m2**2 > 0 else np.nan
        out["sokal_sneath_2"] = (
            (yy + nn) / (yy + nn + 0.5 * (yn + ny)) if total > 0 else np.nan
        )
        emi = _expected_mutual_info(table.counts)
        ami_den = denom - emi
        out["adj_mutual_info"] = (mi - emi) / ami_den if abs(ami_den) > 1e-15 else np.nan

    return [out[name] for name in EXTERNAL_INDEX_NAMES]


# ---------------------------------------------------------------------------
# assembly


def index_vector(s, methods=ALL_CLUSTERING_METHODS, seed=0, k=2,
                 min_cluster_size_fraction=0.01, ref=None):
    """Cluster a subsample with each method and concatenate all 40 indices.

    A method failure contributes an all-zero block with a logged warning
    instead of aborting; the schema always records the active method set.
    """
    methods = tuple(methods)
    if not methods:
        raise ValidationError("at least one clustering method is required")
    for m in methods:
        if m not in ALL_CLUSTERING_METHODS:
            raise ValidationError(f"unknown clustering method: {m!r}")
    ordered = tuple(m for m in ALL_CLUSTERING_METHODS if m in methods)

    blocks = []
    for method in ordered:
        try:
            assignment = cluster(
                s, method, k=k, seed=seed,
                min_cluster_size_fraction=min_cluster_size_fraction,
            )
            internal = internal_indices(s, assignment)
            external = external_indices(s.labels, assignment)
            blocks.append(np.concatenate([internal, external]))
        except ClusteringFailure as exc:
            log.warning("method %s failed on %s: %s; emitting a zero block",
                        method, s.parent_name, exc)
            blocks.append(np.zeros(len(INDEX_NAMES)))
    values = np.concatenate(blocks)
    if ref is None:
        ref = s.parent_name
    return IndexVector(values=values, schema=schema_for(ordered), subsample_ref=ref)
