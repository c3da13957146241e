"""Gradient-boosted trees: squared-error regression and logistic classification.

The regression path is plain first-order boosting (leaf = mean residual when
reg_lambda is 0); the classification path is second-order with logistic loss.
Both share the histogram tree grower and support early stopping on an
internal validation split.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..util import rng_for
from .trees import Binner, Tree, grow_tree


@dataclass
class GBTRegressor:
    trees: list = field(default_factory=list)
    learning_rate: float = 0.1
    base_score: float = 0.0
    feature_gain: np.ndarray = None
    n_features: int = 0
    meta: dict = field(default_factory=dict)

    def predict(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_features:
            raise ValidationError(
                f"dimension mismatch: model expects {self.n_features} features, got {x.shape[1]}"
            )
        if not np.isfinite(x).all():
            raise ValidationError("inputs must be finite")
        out = np.full(x.shape[0], self.base_score, dtype=float)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(x)
        return out


def _train_losses(kind, y, raw):
    if kind == "sse":
        return float(np.mean((raw - y) ** 2))
    margins = y * raw
    return float(np.mean(np.logaddexp(0.0, -2.0 * margins)))


def fit_gbt(x, y, *, loss="sse", max_depth=3, rounds=200, learning_rate=0.1,
            reg_lambda=0.0, min_samples_leaf=1, early_stopping_rounds=20,
            validation_fraction=0.2, seed=0, track_train_loss=False):
    """Boost trees on (x, y); returns a GBTRegressor holding raw scores.

    For loss="logistic" y must be in {-1, +1} and the raw score's sign is the
    label prediction. With early_stopping_rounds set, a validation split is
    carved out and boosting stops after that many rounds without improvement,
    keeping the best round count. Constant targets yield a tree-free constant
    model.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValidationError("x must be 2-D with one row per target")
    n = y.size

    if loss == "sse":
        base = float(y.mean())
    else:
        pos = float(np.mean(y == 1))
        pos = min(max(pos, 1e-12), 1 - 1e-12)
        base = 0.5 * float(np.log(pos / (1 - pos)))

    model = GBTRegressor(
        trees=[], learning_rate=learning_rate, base_score=base,
        feature_gain=np.zeros(x.shape[1]), n_features=x.shape[1],
        meta={"loss": loss, "max_depth": max_depth},
    )
    if np.ptp(y) == 0:
        model.base_score = float(y[0]) if loss == "sse" else base
        return model

    val_idx = None
    train_idx = np.arange(n)
    if early_stopping_rounds and n >= 10 and validation_fraction > 0:
        rng = rng_for(seed, "gbt-val")
        if loss == "logistic":
            val_parts = []
            for cls in (-1, 1):
                members = np.flatnonzero(y == cls)
                if members.size >= 2:
                    take = max(1, int(round(validation_fraction * members.size)))
                    take = min(take, members.size - 1)
                    val_parts.append(rng.permutation(members)[:take])
            val_idx = np.sort(np.concatenate(val_parts)) if val_parts else None
        else:
            take = max(1, int(round(validation_fraction * n)))
            take = min(take, n - 2)
            val_idx = np.sort(rng.permutation(n)[:take])
        if val_idx is not None:
            train_idx = np.setdiff1d(np.arange(n), val_idx)

    xt, yt = x[train_idx], y[train_idx]
    binner = Binner().fit(xt)
    codes = binner.transform(xt)
    raw_t = np.full(xt.shape[0], base)
    raw_v = np.full(val_idx.size, base) if val_idx is not None else None

    best_rounds = 0
    best_val = np.inf
    stall = 0
    train_history = []
    for _ in range(rounds):
        if loss == "sse":
            grad = raw_t - yt
            hess = np.ones_like(yt)
        else:
            margins = np.clip(2.0 * yt * raw_t, -60, 60)
            grad = -2.0 * yt / (1.0 + np.exp(margins))
            hess = np.abs(grad) * (2.0 - np.abs(grad)) + 1e-12
        tree, leaf_of = grow_tree(
            codes, binner.thresholds, grad, hess, criterion="sse",
            max_depth=max_depth, reg_lambda=reg_lambda,
            min_samples_leaf=min_samples_leaf, gain_out=model.feature_gain,
        )
        if tree.feature[0] < 0 and abs(tree.value[0]) < 1e-15:
            break  # no useful split and a zero root: boosting has converged
        model.trees.append(tree)
        raw_t += learning_rate * tree.value[leaf_of]
        if track_train_loss:
            train_history.append(_train_losses(loss, yt, raw_t))
        if val_idx is not None:
            raw_v += learning_rate * tree.predict(x[val_idx])
            val_loss = _train_losses(loss, y[val_idx], raw_v)
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                best_rounds = len(model.trees)
                stall = 0
            else:
                stall += 1
                if stall >= early_stopping_rounds:
                    break

    if val_idx is not None and best_rounds:
        model.trees = model.trees[:best_rounds]
    model.meta["n_rounds"] = len(model.trees)
    if track_train_loss:
        model.meta["train_loss_history"] = train_history
    return model


def fit_gbt_regressor(x, y, depth_grid=(2, 3, 4), folds=5, seed=0, groups=None):
    """Squared-error boosting with the tree depth chosen by cross-validated R2.

    With `groups` given, folds never split a group (leakage guard); otherwise
    plain row folds are used. Ties prefer the smaller depth. Constant targets
    return a constant predictor equal to mean(y) with a degeneracy flag.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 2 * folds:
        raise ValidationError("need at least 2 rows per fold")
    if np.ptp(y) == 0:
        model = fit_gbt(x, y, loss="sse", seed=seed)
        model.meta.update({"cv_r2": 0.0, "degenerate": True, "chosen_depth": None})
        return model

    fold_sets = _fold_indices(y.size, folds, seed, groups)
    best_depth = None
    best_score = -np.inf
    for depth in sorted(depth_grid):
        scores = []
        for val in fold_sets:
            train = np.setdiff1d(np.arange(y.size), val)
            model = fit_gbt(x[train], y[train], loss="sse", max_depth=depth, seed=seed)
            pred = model.predict(x[val])
            denom = np.sum((y[val] - y[val].mean()) ** 2)
            if denom == 0:
                scores.append(0.0)
            else:
                scores.append(1.0 - np.sum((y[val] - pred) ** 2) / denom)
        mean_score = float(np.mean(scores))
        if mean_score > best_score:
            best_score = mean_score
            best_depth = depth
    model = fit_gbt(x, y, loss="sse", max_depth=best_depth, seed=seed)
    model.meta.update({"cv_r2": best_score, "degenerate": False, "chosen_depth": best_depth})
    return model


def _fold_indices(n, folds, seed, groups=None):
    rng = rng_for(seed, "gbt-folds")
    if groups is None:
        order = rng.permutation(n)
        return [np.sort(order[i::folds]) for i in range(folds)]
    groups = np.asarray(groups)
    uniq = sorted(set(groups.tolist()))
    if len(uniq) < 2:
        raise ValidationError("grouped folding needs at least 2 groups")
    folds = min(folds, len(uniq))
    order = rng.permutation(len(uniq))
    assignment = {uniq[g]: i % folds for i, g in enumerate(order)}
    return [
        np.flatnonzero([assignment[g] == f for g in groups.tolist()]) for f in range(folds)
    ]


def predict_regressor(model, x):
    """Predict raw regressor output for one vector or a matrix of rows."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    out = model.predict(np.atleast_2d(arr))
    return float(out[0]) if single else out
