"""Model-fitness scoring of subsamples and assembly of the regression table.

The fitness of a model class on a subsample is the best mean cross-validated
F1 its tuning grid reaches; one row of the training table pairs a subsample's
index vector with its six fitness scores.
"""

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .data import SplitSpec, draw_subsamples, stratified_split
from .errors import ValidationError
from .indices import feature_names_for, index_vector
from .learners import MODEL_CLASSES, fit_tuned
from .util import format_float, parallel_map, rng_for

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitnessVector:
    scores: np.ndarray  # six CV F1 values, MODEL_CLASSES order

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        if self.scores.shape != (len(MODEL_CLASSES),):
            raise ValidationError("fitness vector must have one score per model class")
        if not np.isfinite(self.scores).all():
            raise ValidationError("fitness scores must be finite")


@dataclass(frozen=True)
class TrainingTable:
    features: np.ndarray  # rows x schema-length
    targets: np.ndarray  # rows x 6
    schema: tuple  # feature names (method.index)
    parent_names: tuple
    partitions: tuple  # "train" / "eval" tag per row
    refs: tuple

    def __post_init__(self):
        for attr in ("features", "targets"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, attr, arr)
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "parent_names", tuple(self.parent_names))
        object.__setattr__(self, "partitions", tuple(self.partitions))
        object.__setattr__(self, "refs", tuple(self.refs))

    @property
    def n_rows(self):
        return self.features.shape[0]

    def subset(self, row_mask):
        idx = np.flatnonzero(row_mask)
        return TrainingTable(
            features=self.features[idx],
            targets=self.targets[idx],
            schema=self.schema,
            parent_names=tuple(self.parent_names[i] for i in idx),
            partitions=tuple(self.partitions[i] for i in idx),
            refs=tuple(self.refs[i] for i in idx),
        )


def model_fitness(s, seed, folds=5, metric="f1"):
    """Tune each of the six model classes on the subsample; record CV F1.

    The fold count drops to the minority-class size when the subsample is too
    imbalanced for the requested folds (never below 2).
    """
    labels = np.asarray(s.labels)
    if not ((labels == 1).any() and (labels == -1).any()):
        raise ValidationError("subsample must contain both classes")
    scores = np.empty(len(MODEL_CLASSES))
    for i, model_class in enumerate(MODEL_CLASSES):
        tuned = fit_tuned(
            model_class, s.features, labels, folds=folds,
            seed=rng_for(seed, "fitness", model_class).integers(1 << 31), metric=metric,
        )
        scores[i] = tuned.cv_f1
    return FitnessVector(scores=scores)


def _rows_for_dataset(d, cfg, seed):
    spec = SplitSpec(train_fraction=0.7, seed=rng_for(seed, "table-split", d.name).integers(1 << 31))
    parts = stratified_split(d, spec)
    jobs = []
    for part, tag in zip(parts, ("train", "eval")):
        subs = draw_subsamples(part, seed=seed, alpha=cfg.alpha)
        for j, sub in enumerate(subs):
            jobs.append((sub, tag, f"{d.name}:{tag}:{j}"))
    return jobs


def build_training_table(corpus, seed, config=None, threads=None):
    """Index-vector + fitness rows over 70:30 partitions of every dataset.

    Rows are tagged with the parent dataset so later folding can keep all of
    one dataset's subsamples on a single side.
    """
    cfg = config if config is not None else PipelineConfig()
    threads = cfg.threads if threads is None else threads
    corpus = list(corpus)
    if not corpus:
        raise ValidationError("empty corpus")
    names = [d.name for d in corpus]
    if len(set(names)) != len(names):
        raise ValidationError("dataset names must be unique")

    jobs = []
    for d in corpus:
        for sub, tag, ref in _rows_for_dataset(d, cfg, seed):
            jobs.append((d.name, sub, tag, ref))

    def run(job):
        parent, sub, tag, ref = job
        iv = index_vector(
            sub, methods=cfg.clustering_methods, seed=seed, k=cfg.clustering_k,
            min_cluster_size_fraction=cfg.hdbscan_min_cluster_size_fraction, ref=ref,
        )
        fv = model_fitness(sub, seed=seed, folds=cfg.folds, metric=cfg.fitness_metric)
        return iv, fv

    results = parallel_map(run, jobs, threads=threads)
    features = np.stack([iv.values for iv, _ in results])
    targets = np.stack([fv.scores for _, fv in results])
    return TrainingTable(
        features=features,
        targets=targets,
        schema=feature_names_for(cfg.clustering_methods),
        parent_names=tuple(job[0] for job in jobs),
        partitions=tuple(job[2] for job in jobs),
        refs=tuple(job[3] for job in jobs),
    )


def table_to_csv(table):
    """Serialize the table with full float64 round-trip precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (
        ["parent", "partition", "subsample_ref"]
        + list(table.schema)
        + [f"fitness_{m}" for m in MODEL_CLASSES]
    )
    writer.writerow(header)
    for i in range(table.n_rows):
        row = [table.parent_names[i], table.partitions[i], table.refs[i]]
        row += [format_float(v) for v in table.features[i]]
        row += [format_float(v) for v in table.targets[i]]
        writer.writerow(row)
    return buf.getvalue()


def save_table(table, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_to_csv(table))


def load_table(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ValidationError(f"{path}: empty table")
    header = rows[0]
    n_targets = len(MODEL_CLASSES)
    schema = tuple(header[3 : len(header) - n_targets])
    features, targets, parents, partitions, refs = [], [], [], [], []
    for row in rows[1:]:
        parents.append(row[0])
        partitions.append(row[1])
        refs.append(row[2])
        values = [float(v) for v in row[3:]]
        features.append(values[: len(schema)])
        targets.append(values[len(schema) :])
    return TrainingTable(
        features=np.array(features), targets=np.array(targets), schema=schema,
        parent_names=tuple(parents), partitions=tuple(partitions), refs=tuple(refs),
    )
