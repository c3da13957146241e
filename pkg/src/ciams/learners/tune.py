"""Grid tuning of the six model classes by cross-validated F1."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..stats import f1_score, weighted_f1_score
from ..util import rng_for
from .boosting import fit_gbt
from .linear import LogisticElasticNet
from .neighbors import KNNClassifier, imbalance_k
from .svm import SVC
from .trees import DecisionTreeClassifier, RandomForestClassifier

MODEL_CLASSES = (
    "decision_tree",
    "random_forest",
    "logistic_regression",
    "knn",
    "xgboost",
    "svm",
)

LR_MIX_GRID = (0.25, 0.5, 0.75)
LR_STRENGTH_GRID = (0.01, 0.1, 1.0)
SVM_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
XGB_DEPTH_GRID = (1, 2, 4, 8, 16, 32, 64)


@dataclass
class TunedClassifier:
    model_class: str
    model: object
    chosen_hyperparameters: dict
    cv_f1: float

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if not np.isfinite(x).all():
            raise ValidationError("inputs must be finite")
        expected = _expected_dim(self.model)
        if expected is not None and x.shape[1] != expected:
            raise ValidationError(
                f"dimension mismatch: model expects {expected} features, got {x.shape[1]}"
            )
        out = self.model.predict(x)
        out = np.asarray(out, dtype=np.int64)
        return int(out[0]) if single else out


def _expected_dim(model):
    if isinstance(model, LogisticElasticNet):
        return model.w.size
    if isinstance(model, SVC):
        return model.support_x.shape[1] if model.support_x is not None else None
    if isinstance(model, KNNClassifier):
        return model.x.shape[1]
    if isinstance(model, _BoostedClassifier):
        return model.model.n_features
    return None


class _BoostedClassifier:
    def __init__(self, max_depth, seed):
        self.max_depth = max_depth
        self.seed = seed
        self.model = None

    def fit(self, x, y):
        self.model = fit_gbt(
            x, y, loss="logistic", max_depth=self.max_depth, rounds=200,
            learning_rate=0.1, reg_lambda=1.0, early_stopping_rounds=20,
            seed=self.seed,
        )
        return self

    def predict(self, x):
        raw = self.model.predict(np.atleast_2d(np.asarray(x, dtype=float)))
        return np.where(raw >= 0, 1, -1).astype(np.int64)


def stratified_folds(labels, folds, seed):
    """Per-class round-robin deal after a seeded shuffle.

    Every fold contains both classes; the fold count is reduced to the
    minority size when needed (minimum 2).
    """
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    minority = min(pos.size, neg.size)
    if minority < 2:
        raise ValidationError("minority class needs at least 2 members for cross-validation")
    folds = max(2, min(folds, minority))
    rng = rng_for(seed, "cv-folds")
    buckets = [[] for _ in range(folds)]
    for cls_idx in (pos, neg):
        order = rng.permutation(cls_idx)
        for i, row in enumerate(order):
            buckets[i % folds].append(int(row))
    out = []
    everything = np.arange(labels.size)
    for bucket in buckets:
        val = np.sort(np.array(bucket, dtype=np.int64))
        out.append((np.setdiff1d(everything, val), val))
    return out


def _score(metric, y_true, y_pred):
    if metric == "weighted_f1":
        return weighted_f1_score(y_true, y_pred)
    return f1_score(y_true, y_pred)


def _cv_score(make_model, x, y, fold_sets, metric):
    scores = []
    for train, val in fold_sets:
        model = make_model().fit(x[train], y[train])
        scores.append(_score(metric, y[val], model.predict(x[val])))
    return float(np.mean(scores))


def _depth_pruned_cv(make_model, x, y, fold_sets, metric):
    """Grow-to-purity models per fold, then score every depth cap on them."""
    grown = [(make_model().fit(x[train], y[train]), train, val) for train, val in fold_sets]
    max_depth = max(
        (m.tree.max_depth if isinstance(m, DecisionTreeClassifier) else m.max_grown_depth)
        for m, _, _ in grown
    )
    max_depth = max(max_depth, 1)
    best_depth, best_score = None, -np.inf
    for cap in range(1, max_depth + 1):
        scores = [
            _score(metric, y[val], m.predict(x[val], depth_cap=cap)) for m, _, val in grown
        ]
        mean_score = float(np.mean(scores))
        if mean_score > best_score:
            best_score = mean_score
            best_depth = cap
    return best_depth, best_score


def fit_tuned(model_class, x, y, folds=5, seed=0, metric="f1"):
    """Tune one model class on (x, y) and refit the winner on all rows.

    Grids: elastic-net mix/strength for the linear model; grow-then-prune
    depth for the single tree and the forest; C for the SVM; imbalance-ratio K
    for KNN; max depth for boosting. Ties prefer the smaller-capacity
    configuration. cv_f1 records the winning mean cross-validated score.
    """
    if model_class not in MODEL_CLASSES:
        raise ValidationError(f"unknown model class: {model_class!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[1] < 1:
        raise ValidationError("no features")
    fold_sets = stratified_folds(y, folds, seed)

    if model_class == "logistic_regression":
        best = (-np.inf, None)
        for lam in sorted(LR_STRENGTH_GRID, reverse=True):  # strongest penalty first
            for mix in LR_MIX_GRID:
                score = _cv_score(lambda: LogisticElasticNet(mix, lam), x, y, fold_sets, metric)
                if score > best[0]:
                    best = (score, {"mix": mix, "strength": lam})
        params = best[1]
        model = LogisticElasticNet(params["mix"], params["strength"]).fit(x, y)
        return TunedClassifier("logistic_regression", model, params, best[0])

    if model_class == "decision_tree":
        depth, score = _depth_pruned_cv(lambda: DecisionTreeClassifier(), x, y, fold_sets, metric)
        model = DecisionTreeClassifier(max_depth=depth).fit(x, y)
        return TunedClassifier("decision_tree", model, {"max_depth": depth}, score)

    if model_class == "random_forest":
        depth, score = _depth_pruned_cv(
            lambda: RandomForestClassifier(n_trees=100, seed=seed), x, y, fold_sets, metric
        )
        model = RandomForestClassifier(n_trees=100, max_depth=depth, seed=seed).fit(x, y)
        return TunedClassifier("random_forest", model, {"max_depth": depth, "n_trees": 100}, score)

    if model_class == "svm":
        best = (-np.inf, None)
        for c in SVM_C_GRID:
            score = _cv_score(lambda: SVC(c=c, seed=seed), x, y, fold_sets, metric)
            if score > best[0]:
                best = (score, {"c": c})
        model = SVC(c=best[1]["c"], seed=seed).fit(x, y)
        params = dict(best[1], gamma=model._gamma_used)
        return TunedClassifier("svm", model, params, best[0])

    if model_class == "knn":
        k = imbalance_k(y, h=y.size)
        score = _cv_score(lambda: KNNClassifier(k), x, y, fold_sets, metric)
        model = KNNClassifier(k).fit(x, y)
        return TunedClassifier("knn", model, {"k": k}, score)

    # xgboost-style boosting
    best = (-np.inf, None)
    for depth in XGB_DEPTH_GRID:
        score = _cv_score(lambda: _BoostedClassifier(depth, seed), x, y, fold_sets, metric)
        if score > best[0]:
            best = (score, {"max_depth": depth})
    model = _BoostedClassifier(best[1]["max_depth"], seed).fit(x, y)
    return TunedClassifier("xgboost", model, best[1], best[0])


def predict(tuned, x):
    """Label in {-1, +1} for a feature vector (or one per row of a matrix)."""
    return tuned.predict(x)
