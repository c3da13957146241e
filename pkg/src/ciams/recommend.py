"""Recommendation pipeline: rank model classes by predicted fitness.

Two modes: single-shot computes one index vector on the whole dataset;
subsampled draws the policy number of bootstrap subsamples, drops those whose
mean vector significantly deviates from the dataset (Hotelling filter), and
averages the per-subsample predictions.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .data import (
    apply_standardization,
    dataset_as_subsample,
    draw_subsamples,
    standardize,
    standardize_matrix,
)
from .errors import ValidationError
from .indices import index_vector
from .learners import MODEL_CLASSES, fit_tuned
from .mapper import predict_fitness
from .stats import hotelling_t2
from .util import parallel_map, rng_for

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Recommendation:
    ranked: tuple  # ((model_class, predicted_f1), ...) descending
    mode: str
    n_subsamples_used: int
    n_subsamples_rejected: int


@dataclass(frozen=True)
class AutoMLResult:
    chosen: str
    top3: tuple
    cv_f1_of_chosen: float
    predictions: np.ndarray


def _rank(scores):
    order = np.argsort(-np.asarray(scores), kind="stable")  # ties keep class order
    return tuple((MODEL_CLASSES[i], float(scores[i])) for i in order)


def recommend_single_shot(bundle, d, seed=0, config=None):
    """One index vector on the full dataset, one prediction, ranked."""
    cfg = config if config is not None else PipelineConfig()
    if d.n < cfg.clustering_k:
        raise ValidationError("dataset smaller than the cluster count")
    sub = dataset_as_subsample(d)
    iv = index_vector(
        sub, methods=cfg.clustering_methods, seed=seed, k=cfg.clustering_k,
        min_cluster_size_fraction=cfg.hdbscan_min_cluster_size_fraction,
        ref=f"{d.name}:single-shot",
    )
    fv = predict_fitness(bundle, iv)
    return Recommendation(ranked=_rank(fv.scores), mode="single_shot",
                          n_subsamples_used=0, n_subsamples_rejected=0)


def recommend_subsampled(bundle, d, seed=0, config=None, alpha=0.05, threads=None):
    """Draw, filter, predict per subsample, and average (then rank).

    Subsamples whose Hotelling test against the dataset rejects at `alpha`
    are dropped; if every subsample is rejected the filter is skipped with a
    warning so a recommendation is always produced.
    """
    cfg = config if config is not None else PipelineConfig()
    threads = cfg.threads if threads is None else threads
    if d.n < 100:
        raise ValidationError(
            "subsampled mode needs at least 100 rows (the smallest policy size); "
            "use single-shot mode for smaller datasets"
        )
    parent = standardize(d)
    subs = draw_subsamples(parent, seed=seed, alpha=cfg.alpha)

    keep = []
    rejected = 0
    for sub in subs:
        drawn_rows = parent.features[sub.row_indices]
        result = hotelling_t2(drawn_rows, parent.features, alpha=alpha)
        if result.reject:
            rejected += 1
        else:
            keep.append(sub)
    if not keep:
        log.warning(
            "every subsample failed the representativeness filter on %s; keeping all",
            d.name,
        )
        keep = list(subs)
        rejected = len(subs)

    def predict_one(sub):
        iv = index_vector(
            sub, methods=cfg.clustering_methods, seed=seed, k=cfg.clustering_k,
            min_cluster_size_fraction=cfg.hdbscan_min_cluster_size_fraction,
        )
        return predict_fitness(bundle, iv).scores

    predictions = parallel_map(predict_one, keep, threads=threads)
    averaged = np.mean(np.stack(predictions), axis=0)
    return Recommendation(ranked=_rank(averaged), mode="subsampled",
                          n_subsamples_used=len(keep), n_subsamples_rejected=rejected)


def top_k(rec, k):
    """First k model classes of the ranking."""
    if not 1 <= k <= len(MODEL_CLASSES):
        raise ValidationError(f"k must be in [1, {len(MODEL_CLASSES)}]")
    return tuple(name for name, _ in rec.ranked[:k])


def automl_fit_predict(bundle, labeled, unlabeled, seed=0, config=None, folds=5, threads=None):
    """Recommend, cross-validate the top3 on the labeled part, predict labels.

    Only the three recommended classes are ever fitted. Unlabeled rows are
    standardized with the labeled partition's statistics.
    """
    cfg = config if config is not None else PipelineConfig()
    threads = cfg.threads if threads is None else threads
    unlabeled = np.asarray(unlabeled, dtype=float)
    if unlabeled.ndim != 2 or unlabeled.shape[1] != labeled.p:
        raise ValidationError("unlabeled matrix must match the labeled feature count")
    if not np.isfinite(unlabeled).all():
        raise ValidationError("unlabeled rows must be finite")

    if labeled.n >= 100:
        rec = recommend_subsampled(bundle, labeled, seed=seed, config=cfg, threads=threads)
    else:
        log.warning("labeled part too small for subsampled mode; using single-shot")
        rec = recommend_single_shot(bundle, labeled, seed=seed, config=cfg)
    top3 = top_k(rec, 3)

    x_std, mean, std = standardize_matrix(labeled.features)
    y = labeled.labels

    def tune_one(model_class):
        return fit_tuned(
            model_class, x_std, y, folds=folds,
            seed=rng_for(seed, "automl", model_class).integers(1 << 31),
            metric=cfg.fitness_metric,
        )

    tuned = parallel_map(tune_one, top3, threads=threads)
    best = max(range(3), key=lambda i: (tuned[i].cv_f1, -i))  # tie -> earlier rank
    chosen = tuned[best]
    if unlabeled.shape[0] == 0:
        predictions = np.empty(0, dtype=np.int64)
    else:
        predictions = chosen.predict(apply_standardization(unlabeled, mean, std))
    return AutoMLResult(
        chosen=chosen.model_class,
        top3=top3,
        cv_f1_of_chosen=float(chosen.cv_f1),
        predictions=np.asarray(predictions, dtype=np.int64),
    )
