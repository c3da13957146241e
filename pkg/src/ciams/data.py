"""Dataset ingestion, standardization, splitting, and bootstrap subsampling."""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .util import rng_for

_MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


@dataclass(frozen=True)
class Dataset:
    """Labeled tabular matrix with binary labels in {-1, +1}."""

    features: np.ndarray  # n x p float64
    labels: np.ndarray  # length n, values in {-1, +1}
    feature_names: tuple
    name: str

    def __post_init__(self):
        object.__setattr__(self, "features", _freeze(np.asarray(self.features, dtype=float)))
        object.__setattr__(self, "labels", _freeze(np.asarray(self.labels, dtype=np.int64)))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.features.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        n, p = self.features.shape
        if n < 2 or p < 1:
            raise ValidationError("dataset needs at least 2 rows and 1 feature")
        if self.labels.shape != (n,):
            raise ValidationError("labels length must match row count")
        if not np.isin(self.labels, (-1, 1)).all():
            raise ValidationError("labels must be in {-1, +1}")
        if len(self.feature_names) != p:
            raise ValidationError("feature_names length must match column count")
        if not np.isfinite(self.features).all():
            raise ValidationError("features contain non-finite values")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class Subsample:
    """Bootstrap draw from a parent dataset, standardized on its own rows."""

    parent_name: str
    row_indices: np.ndarray
    features: np.ndarray  # h x p, standardized per subsample
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_indices", _freeze(np.asarray(self.row_indices, dtype=np.int64)))
        object.__setattr__(self, "features", _freeze(np.asarray(self.features, dtype=float)))
        object.__setattr__(self, "labels", _freeze(np.asarray(self.labels, dtype=np.int64)))

    @property
    def h(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie in (0, 1)")


def _freeze(arr):
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


def _parse_cell(token, column, lineno):
    text = token.strip()
    if text.lower() in _MISSING_TOKENS:
        return None
    try:
        return float(text)
    except ValueError:
        raise ValidationError(
            f"non-numeric cell in column {column!r} at data row {lineno}: {token!r}"
        ) from None


def load_csv(path, label_column="last", impute=False, name=None):
    """Load a UTF-8, comma-separated, headered CSV into a Dataset.

    The label column is selected by name, or the last column when
    `label_column` is "last". Label symbols are remapped so the minority class
    becomes +1 (ties broken toward the lexicographically smaller symbol).
    Missing feature cells are rejected unless `impute` is set, in which case
    they are filled with the column mean.
    """
    if not os.path.exists(path):
        raise ValidationError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise ValidationError(f"{path}: empty file (need a header and data rows)")

    header = [h.strip() for h in rows[0]]
    if label_column == "last":
        label_idx = len(header) - 1
    else:
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ValidationError(f"{path}: no column named {label_column!r}") from None

    feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)
    raw_features = []
    raw_labels = []
    for lineno, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
        raw_labels.append(row[label_idx].strip())
        cells = []
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            cells.append(_parse_cell(cell, header[i], lineno))
        raw_features.append(cells)

    symbols = sorted(set(raw_labels))
    if len(symbols) < 2:
        raise ValidationError(f"{path}: not binary (found {len(symbols)} label value)")
    if len(symbols) > 2:
        raise ValidationError(f"{path}: not binary (found {len(symbols)} label values)")
    counts = {s: raw_labels.count(s) for s in symbols}
    # minority class becomes +1; exact tie -> lexicographically smaller symbol
    if counts[symbols[0]] == counts[symbols[1]]:
        positive = symbols[0]
    else:
        positive = min(counts, key=lambda s: counts[s])
    labels = np.array([1 if s == positive else -1 for s in raw_labels], dtype=np.int64)

    matrix = np.empty((len(raw_features), len(feature_names)), dtype=float)
    missing = np.zeros_like(matrix, dtype=bool)
    for r, cells in enumerate(raw_features):
        for c, value in enumerate(cells):
            if value is None:
                missing[r, c] = True
                matrix[r, c] = np.nan
            else:
                matrix[r, c] = value
    if missing.any():
        if not impute:
            r, c = np.argwhere(missing)[0]
            raise ValidationError(
                f"{path}: non-numeric cell (missing value) in column "
                f"{feature_names[c]!r} at data row {r + 1}; pass impute to fill with column means"
            )
        col_means = np.nanmean(matrix, axis=0)
        col_means = np.where(np.isfinite(col_means), col_means, 0.0)
        matrix[missing] = np.take(col_means, np.argwhere(missing)[:, 1])

    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(features=matrix, labels=labels, feature_names=feature_names, name=name)


def standardize_matrix(x):
    """Column-wise zero mean / unit population-sigma; zero-variance columns -> 0."""
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # population sigma
    safe = np.where(std > 0, std, 1.0)
    out = (x - mean) / safe
    out[:, std == 0] = 0.0
    return out, mean, std


def apply_standardization(x, mean, std):
    """Transform new rows with previously computed statistics."""
    x = np.asarray(x, dtype=float)
    safe = np.where(std > 0, std, 1.0)
    out = (x - mean) / safe
    out[:, std == 0] = 0.0
    return out


def standardize(d):
    """Return a Dataset whose columns have mean 0 and population sigma 1."""
    out, _, _ = standardize_matrix(d.features)
    return Dataset(features=out, labels=d.labels, feature_names=d.feature_names, name=d.name)


def subsample_size(n):
    """Piecewise subsample-size policy: 100 / 300 / 500 by dataset size."""
    if n < 2:
        raise ValidationError("n must be at least 2")
    if n <= 500:
        return 100
    if n <= 2000:
        return 300
    return 500


def subsample_count(n, h, alpha=5):
    """Number of bootstrap subsamples: alpha * ceil(n / (0.63 * h))."""
    if n < 2 or h < 1 or alpha < 1:
        raise ValidationError("n >= 2, h >= 1 and alpha >= 1 required")
    return int(alpha * math.ceil(n / (0.63 * h)))


def stratified_bootstrap_indices(labels, h, rng):
    """Draw h row indices with replacement, class counts proportional to parent."""
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("both classes must be present to draw a stratified subsample")
    n_pos = int(round(h * pos.size / labels.size))
    n_pos = min(max(n_pos, 1), h - 1)
    take_pos = pos[rng.integers(0, pos.size, size=n_pos)]
    take_neg = neg[rng.integers(0, neg.size, size=h - n_pos)]
    return np.concatenate([take_pos, take_neg])


def draw_subsamples(d, seed, alpha=5):
    """Draw the policy number of stratified bootstrap subsamples from `d`.

    Each subsample is standardized on its own rows; the parent's statistics
    are not reused. Deterministic for a fixed seed.
    """
    h = subsample_size(d.n)
    b = subsample_count(d.n, h, alpha)
    subsamples = []
    for j in range(b):
        rng = rng_for(seed, "subsample", d.name, j)
        idx = stratified_bootstrap_indices(d.labels, h, rng)
        feats, _, _ = standardize_matrix(d.features[idx])
        subsamples.append(
            Subsample(parent_name=d.name, row_indices=idx, features=feats, labels=d.labels[idx])
        )
    return subsamples


def _canonical_order(features, indices):
    """Order row indices by feature content so splits ignore input row order."""
    cols = [features[indices, c] for c in range(features.shape[1] - 1, -1, -1)]
    return indices[np.lexsort(cols)]


def stratified_split(d, spec):
    """Split into disjoint train/eval parts with per-class proportional counts.

    The assignment is a function of the row *contents* and the seed, so
    shuffling the input rows yields the same multiset of rows on each side.
    """
    labels = d.labels
    classes = [1, -1]
    per_class = {c: np.flatnonzero(labels == c) for c in classes}
    if not spec.stratified:
        order = _canonical_order(d.features, np.arange(d.n))
        order = rng_for(spec.seed, "split", d.name).permutation(order)
        n_train = int(round(spec.train_fraction * d.n))
        n_train = min(max(n_train, 1), d.n - 1)
        return _take_split(d, order[:n_train], order[n_train:])

    for c in classes:
        if per_class[c].size < 2:
            raise ValidationError("each class needs at least 2 members to stratify")

    target_total = int(round(spec.train_fraction * d.n))
    exact = {c: spec.train_fraction * per_class[c].size for c in classes}
    base = {c: int(math.floor(exact[c])) for c in classes}
    leftover = target_total - sum(base.values())
    remainders = sorted(classes, key=lambda c: (-(exact[c] - base[c]), c))
    takes = dict(base)
    for c in remainders:
        if leftover <= 0:
            break
        takes[c] += 1
        leftover -= 1
    train_idx = []
    test_idx = []
    for c in classes:
        count = min(max(takes[c], 1), per_class[c].size - 1)
        ordered = _canonical_order(d.features, per_class[c])
        shuffled = rng_for(spec.seed, "split", d.name, c).permutation(ordered)
        train_idx.append(shuffled[:count])
        test_idx.append(shuffled[count:])
    return _take_split(d, np.concatenate(train_idx), np.concatenate(test_idx))


def _take_split(d, train_idx, test_idx):
    train_idx = np.sort(train_idx)
    test_idx = np.sort(test_idx)
    train = Dataset(
        features=d.features[train_idx],
        labels=d.labels[train_idx],
        feature_names=d.feature_names,
        name=f"{d.name}:train",
    )
    test = Dataset(
        features=d.features[test_idx],
        labels=d.labels[test_idx],
        feature_names=d.feature_names,
        name=f"{d.name}:eval",
    )
    return train, test


def dataset_as_subsample(d):
    """View a whole dataset as one standardized subsample (single-shot mode)."""
    feats, _, _ = standardize_matrix(d.features)
    return Subsample(
        parent_name=d.name,
        row_indices=np.arange(d.n),
        features=feats,
        labels=d.labels,
    )
