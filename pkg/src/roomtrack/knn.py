"""k-nearest-neighbour room classification on RSSI fingerprints.

Neighbour ordering is by (squared Euclidean distance, feature vector
lexicographically, label), so the selected neighbourhood never depends on the
order of the training rows. Majority ties go to the tied class whose closest
member is nearest; equal distances there fall back to the smallest label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .dataset import SENTINEL, DenseDataset, load_dense, write_dataset

DEFAULT_K = 7
METRICS = ("euclidean",)


class KnnError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KnnModel:
    columns: tuple[str, ...]
    training_vectors: np.ndarray
    labels: np.ndarray
    k: int = DEFAULT_K
    metric: str = "euclidean"
    # derived at fit time
    classes: tuple[str, ...] = field(default=(), repr=False)
    codes: np.ndarray = field(default=None, repr=False)
    rank: np.ndarray = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    correct: int
    total: int
    confusion: dict[tuple[str, str], int]  # (true, predicted) -> count


def fit(train: DenseDataset, k: int = DEFAULT_K, metric: str = "euclidean") -> KnnModel:
    """Store the training table; the classifier is lazy."""
    if metric not in METRICS:
        raise KnnError(f"unsupported metric {metric!r}")
    n = len(train)
    if n == 0:
        raise KnnError("empty training set")
    if not 1 <= k <= n:
        raise KnnError(f"k must lie in [1, {n}], got {k}")
    vectors = np.ascontiguousarray(train.values, dtype=float)
    labels = np.asarray(train.rooms, dtype=object)
    classes = tuple(sorted(set(labels.tolist())))
    lookup = {c: i for i, c in enumerate(classes)}
    codes = np.array([lookup[l] for l in labels], dtype=np.int64)
    # tie-break rank: lexicographic feature vector, then label
    order = np.lexsort((codes,) + tuple(vectors[:, j] for j in range(vectors.shape[1] - 1, -1, -1)))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    return KnnModel(tuple(train.beacon_columns), vectors, labels, k, metric, classes, codes, rank)


def _as_matrix(model: KnnModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != len(model.columns):
        raise KnnError(f"query has {q.shape[-1]} features, model expects {len(model.columns)}")
    return q


def _sq_distances(model: KnnModel, q: np.ndarray, chunk: int = 64) -> np.ndarray:
    out = np.empty((len(q), model.n_rows))
    for s in range(0, len(q), chunk):
        diff = q[s:s + chunk, None, :] - model.training_vectors[None, :, :]
        out[s:s + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def neighbours(model: KnnModel, q) -> np.ndarray:
    """Indices of the k nearest training rows per query, nearest first."""
    q = _as_matrix(model, q)
    return _select(model, _sq_distances(model, q))


def _select(model: KnnModel, d: np.ndarray) -> np.ndarray:
    k, n = model.k, len(d)
    if k == model.n_rows:
        part = np.tile(np.arange(k), (n, 1))
    else:
        part = np.argpartition(d, k - 1, axis=1)[:, :k]
    kth = np.take_along_axis(d, part, axis=1).max(axis=1)
    result = np.empty((n, k), dtype=np.int64)
    n_le = (d <= kth[:, None]).sum(axis=1)
    for i in range(n):
        cand = part[i] if n_le[i] == k else np.flatnonzero(d[i] <= kth[i])
        order = np.lexsort((model.rank[cand], d[i, cand]))
        result[i] = cand[order[:k]]
    return result


def _vote(model: KnnModel, q: np.ndarray) -> np.ndarray:
    d = _sq_distances(model, q)
    nb = _select(model, d)
    nb_codes = model.codes[nb]
    nb_dist = np.take_along_axis(d, nb, axis=1)
    n_cls = len(model.classes)
    rows = np.repeat(np.arange(len(q)), model.k)
    counts = np.zeros((len(q), n_cls), dtype=np.int64)
    np.add.at(counts, (rows, nb_codes.ravel()), 1)
    nearest = np.full((len(q), n_cls), np.inf)
    np.minimum.at(nearest, (rows, nb_codes.ravel()), nb_dist.ravel())
    tied = counts == counts.max(axis=1, keepdims=True)
    # argmin returns the first (smallest label) among equal distances
    return np.argmin(np.where(tied, nearest, np.inf), axis=1)


def predict(model: KnnModel, q) -> str:
    """Room label for one RSSI vector over ``model.columns``."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1:
        raise KnnError("predict expects a single vector; use predict_many")
    return model.classes[int(_vote(model, _as_matrix(model, q))[0])]


def predict_many(model: KnnModel, queries) -> np.ndarray:
    q = _as_matrix(model, queries)
    if len(q) == 0:
        return np.array([], dtype=object)
    return np.array(model.classes, dtype=object)[_vote(model, q)]


def vector_from_scan(model: KnnModel, scan: Mapping[str, float]) -> np.ndarray:
    """RSSI vector over the model columns; beacons absent from ``scan`` get the sentinel."""
    return np.array([float(scan.get(c, SENTINEL)) for c in model.columns])


def accuracy(model: KnnModel, test: DenseDataset) -> AccuracyReport:
    if tuple(test.beacon_columns) != model.columns:
        raise KnnError("test columns do not match the model columns")
    pred = predict_many(model, test.values)
    truth = np.asarray(test.rooms, dtype=object)
    confusion: dict[tuple[str, str], int] = {}
    for t, p in zip(truth, pred):
        confusion[(t, p)] = confusion.get((t, p), 0) + 1
    correct = int(np.sum(pred == truth))
    total = len(truth)
    return AccuracyReport(correct / total if total else 0.0, correct, total, confusion)


def export_model(model: KnnModel, path: str | Path) -> None:
    """Write ``<path>.json`` (columns, k, metric) and ``<path>.csv`` (training matrix)."""
    path = Path(path)
    header = {"columns": list(model.columns), "k": model.k, "metric": model.metric, "rows": model.n_rows}
    path.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    prov = np.zeros(model.training_vectors.shape, dtype=np.int8)
    write_dataset(DenseDataset(model.columns, model.training_vectors, model.labels, prov), path.with_suffix(".csv"))


def load_model(path: str | Path) -> KnnModel:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    train = load_dense(path.with_suffix(".csv"))
    if list(train.beacon_columns) != header["columns"]:
        raise KnnError("model header and training matrix disagree on columns")
    return fit(train, header["k"], header["metric"])
