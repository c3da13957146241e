"""Per-model-class regressors from index vectors to expected F1, persisted
as a self-describing binary bundle (text header + checksummed array payload).
"""

import datetime
import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BundleFormatError, SchemaMismatchError, ValidationError
from .learners import GBTRegressor, Tree, fit_gbt_regressor
from .util import parallel_map, rng_for

BUNDLE_MAGIC = b"CIAMSMAP"
BUNDLE_VERSION = 1

MAPPER_DEPTH_GRID = (2, 3, 4)


@dataclass
class MapperBundle:
    regressors: dict  # model class -> GBTRegressor
    schema: tuple
    version: int = BUNDLE_VERSION
    training_meta: dict = field(default_factory=dict)

    @property
    def model_classes(self):
        return tuple(self.regressors)


def fit_mappers(table, folds=5, seed=0, depth_grid=MAPPER_DEPTH_GRID, threads=1):
    """Fit one boosted regressor per model class on the training table.

    Hyperparameters are chosen by parent-grouped cross-validation so sibling
    subsamples of one dataset never straddle a fold boundary. Reports the
    held-out R2 per class in training_meta["cv_r2"].
    """
    from .learners import MODEL_CLASSES

    if table.n_rows == 0:
        raise ValidationError("empty training table")
    parents = list(set(table.parent_names))
    if len(parents) < 2:
        raise ValidationError("need at least 2 parent datasets for grouped folding")

    groups = np.asarray(table.parent_names)

    def fit_one(i):
        target = table.targets[:, i]
        return fit_gbt_regressor(
            table.features, target, depth_grid=depth_grid, folds=folds,
            seed=rng_for(seed, "mapper", MODEL_CLASSES[i]).integers(1 << 31),
            groups=groups,
        )
    fitted = parallel_map(fit_one, range(len(MODEL_CLASSES)), threads=threads)

    regressors = dict(zip(MODEL_CLASSES, fitted))
    meta = {
        "corpus": sorted(set(table.parent_names)),
        "seed": int(seed),
        "date": datetime.date.today().isoformat(),
        "folds": int(folds),
        "cv_r2": {m: float(r.meta.get("cv_r2", 0.0)) for m, r in regressors.items()},
        "degenerate": {m: bool(r.meta.get("degenerate", False)) for m, r in regressors.items()},
        "n_rows": int(table.n_rows),
    }
    return MapperBundle(regressors=regressors, schema=tuple(table.schema), training_meta=meta)


def predict_fitness(bundle, iv):
    """Six expected-F1 predictions for one index vector, clamped to [0, 1]."""
    from .fitness import FitnessVector
    from .indices import IndexVector

    if isinstance(iv, IndexVector):
        names = tuple(f"{m}.{name}" for m, name in iv.schema)
        values = iv.values
    else:
        raise ValidationError("predict_fitness expects an IndexVector")
    if names != tuple(bundle.schema):
        raise SchemaMismatchError(
            "schema mismatch: the index vector does not match the bundle's training schema"
        )
    from .learners import MODEL_CLASSES

    missing = [m for m in MODEL_CLASSES if m not in bundle.regressors]
    if missing:
        raise BundleFormatError(f"bundle lacks regressors for: {missing}")
    scores = np.array([
        float(np.clip(bundle.regressors[m].predict(values[None, :])[0], 0.0, 1.0))
        for m in MODEL_CLASSES
    ])
    return FitnessVector(scores=scores)


# ---------------------------------------------------------------------------
# persistence


def _tree_arrays(prefix, tree):
    return {
        f"{prefix}.feature": tree.feature,
        f"{prefix}.threshold": tree.threshold,
        f"{prefix}.left": tree.left,
        f"{prefix}.right": tree.right,
        f"{prefix}.value": tree.value,
        f"{prefix}.depth": tree.depth,
    }


def save_bundle(bundle, path):
    arrays = {}
    reg_entries = {}
    for name, reg in bundle.regressors.items():
        arrays[f"{name}.feature_gain"] = np.asarray(reg.feature_gain, dtype=float)
        for t, tree in enumerate(reg.trees):
            arrays.update(_tree_arrays(f"{name}.tree{t}", tree))
        reg_entries[name] = {
            "base_score": float(reg.base_score),
            "learning_rate": float(reg.learning_rate),
            "n_trees": len(reg.trees),
            "n_features": int(reg.n_features),
            "meta": _jsonable(reg.meta),
        }

    payload = bytearray()
    manifest = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype == np.int32:
            dtype = "<i4"
        elif arr.dtype == np.int64:
            dtype = "<i8"
        else:
            arr = arr.astype(float)
            dtype = "<f8"
        blob = arr.astype(dtype).tobytes()
        manifest.append({
            "name": name, "dtype": dtype, "shape": list(arr.shape),
            "offset": len(payload), "nbytes": len(blob),
        })
        payload.extend(blob)
    payload = bytes(payload)

    header = {
        "version": bundle.version,
        "schema": list(bundle.schema),
        "training_meta": _jsonable(bundle.training_meta),
        "regressors": reg_entries,
        "arrays": manifest,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(BUNDLE_MAGIC)
        fh.write(struct.pack("<I", BUNDLE_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def load_bundle(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:8] != BUNDLE_MAGIC:
        raise BundleFormatError("not a mapper bundle (bad magic)")
    (version,) = struct.unpack("<I", blob[8:12])
    if version != BUNDLE_VERSION:
        raise BundleFormatError(f"unsupported version: {version}")
    (header_len,) = struct.unpack("<I", blob[12:16])
    if len(blob) < 16 + header_len:
        raise BundleFormatError("truncated file: header incomplete")
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleFormatError(f"corrupt header: {exc}") from exc
    if header.get("version") != BUNDLE_VERSION:
        raise BundleFormatError(f"unsupported version: {header.get('version')}")
    payload = blob[16 + header_len :]
    if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
        raise BundleFormatError("checksum failure: payload corrupted")

    arrays = {}
    for entry in header["arrays"]:
        start, nb = entry["offset"], entry["nbytes"]
        if start + nb > len(payload):
            raise BundleFormatError("truncated file: payload incomplete")
        arr = np.frombuffer(payload[start : start + nb], dtype=entry["dtype"])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()

    regressors = {}
    for name, entry in header["regressors"].items():
        trees = []
        for t in range(entry["n_trees"]):
            prefix = f"{name}.tree{t}"
            trees.append(Tree(
                feature=arrays[f"{prefix}.feature"].astype(np.int32),
                threshold=arrays[f"{prefix}.threshold"],
                left=arrays[f"{prefix}.left"].astype(np.int32),
                right=arrays[f"{prefix}.right"].astype(np.int32),
                value=arrays[f"{prefix}.value"],
                depth=arrays[f"{prefix}.depth"].astype(np.int32),
            ))
        regressors[name] = GBTRegressor(
            trees=trees,
            learning_rate=entry["learning_rate"],
            base_score=entry["base_score"],
            feature_gain=arrays[f"{name}.feature_gain"],
            n_features=entry["n_features"],
            meta=entry.get("meta", {}),
        )
    return MapperBundle(
        regressors=regressors,
        schema=tuple(header["schema"]),
        version=header["version"],
        training_meta=header.get("training_meta", {}),
    )
