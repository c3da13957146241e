"""K-nearest-neighbor classifier; K follows the class-imbalance ratio."""

import numpy as np

from ..errors import ValidationError


def imbalance_k(labels, h=None):
    """K = round(majority/minority ratio), clamped to [1, h-1]."""
    labels = np.asarray(labels)
    pos = int(np.sum(labels == 1))
    neg = int(np.sum(labels == -1))
    if pos == 0 or neg == 0:
        raise ValidationError("both classes required to derive K")
    ratio = max(pos, neg) / min(pos, neg)
    k = int(np.floor(ratio + 0.5))
    upper = (h if h is not None else labels.size) - 1
    return min(max(k, 1), max(upper, 1))


class KNNClassifier:
    def __init__(self, k):
        self.k = k
        self.x = None
        self.y = None

    def fit(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=np.int64)
        return self

    def predict(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.x.shape[1]:
            raise ValidationError("dimension mismatch")
        k = min(self.k, self.y.size)
        xx = np.sum(x * x, axis=1)[:, None]
        tt = np.sum(self.x * self.x, axis=1)[None, :]
        d2 = np.maximum(xx + tt - 2.0 * (x @ self.x.T), 0.0)
        order = np.argsort(d2, axis=1, kind="stable")
        nearest = order[:, :k]
        votes = self.y[nearest].sum(axis=1)
        out = np.where(votes > 0, 1, np.where(votes < 0, -1, 0))
        ties = out == 0
        if np.any(ties):
            out[ties] = self.y[order[ties, 0]]  # tie -> label of the single nearest
        return out.astype(np.int64)
