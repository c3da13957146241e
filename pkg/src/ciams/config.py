"""Pipeline configuration: defaults, key=value config files, env overrides."""

import os
from dataclasses import dataclass, field, replace

from .errors import ValidationError

ALL_CLUSTERING_METHODS = ("kmeans", "agglomerative", "spectral", "hdbscan")

DEFAULT_SEED = 7


@dataclass(frozen=True)
class PipelineConfig:
    alpha: int = 5
    impute: bool = False
    seed: int = DEFAULT_SEED
    clustering_methods: tuple = ALL_CLUSTERING_METHODS
    clustering_k: int = 2
    hdbscan_min_cluster_size_fraction: float = 0.01
    fitness_metric: str = "f1"  # or "weighted_f1"
    folds: int = 5
    threads: int = 1


def default_config():
    seed = os.environ.get("CIAMS_SEED")
    cfg = PipelineConfig()
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return cfg


def _parse_bool(value):
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {value!r}")


def _parse_methods(value):
    methods = tuple(m.strip().lower() for m in value.split(",") if m.strip())
    for m in methods:
        if m not in ALL_CLUSTERING_METHODS:
            raise ValidationError(f"unknown clustering method: {m!r}")
    if not methods:
        raise ValidationError("clustering.methods must not be empty")
    # keep canonical order so the feature schema stays stable
    return tuple(m for m in ALL_CLUSTERING_METHODS if m in methods)


_PARSERS = {
    "alpha": ("alpha", int),
    "impute": ("impute", _parse_bool),
    "seed": ("seed", int),
    "clustering.methods": ("clustering_methods", _parse_methods),
    "clustering.k": ("clustering_k", int),
    "hdbscan.min_cluster_size_fraction": ("hdbscan_min_cluster_size_fraction", float),
    "fitness.metric": ("fitness_metric", str),
    "folds": ("folds", int),
    "threads": ("threads", int),
}


def load_config(path, base=None):
    """Parse a key=value config file on top of `base` (default config if None)."""
    cfg = base if base is not None else default_config()
    updates = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in _PARSERS:
                raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
            attr, parser = _PARSERS[key]
            try:
                updates[attr] = parser(value.strip())
            except ValidationError:
                raise
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    if updates.get("fitness_metric") not in (None, "f1", "weighted_f1"):
        raise ValidationError(f"fitness.metric must be 'f1' or 'weighted_f1'")
    return replace(cfg, **updates)
