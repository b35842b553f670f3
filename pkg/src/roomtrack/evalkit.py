"""Evaluation studies: accuracy per beacon subset, beacon placement frequency,
and accuracy against training-set size.

Both localizers are scored on identical splits. Every split, subset sample and
training subsample comes from its own seeded stream, so results do not depend
on evaluation order or on the number of worker processes.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import knn, multilat
from .dataset import DenseDataset, SplitConfig, split_indices, subset_columns
from .geometry import FloorPlan
from .rng import make_rng

EVAL_RESOLUTION = 0.25


@dataclass(frozen=True)
class CvConfig:
    """``folds == 1``: ``repeats`` stratified holdouts; ``folds >= 2``: repeated stratified k-fold."""

    folds: int = 1
    repeats: int = 5
    seed: int = 0
    test_fraction: float = 0.2

    def __post_init__(self):
        if self.folds < 1 or self.repeats < 1:
            raise ValueError("folds and repeats must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SweepLimits:
    max_size: int | None = None
    per_size: int | None = None  # cap on subsets evaluated per size (seeded uniform sample)
    min_size: int = 1


@dataclass(frozen=True)
class KnnMethod:
    k: int = knn.DEFAULT_K
    name: str = "knn"


@dataclass(frozen=True)
class MultilatMethod:
    plan: FloorPlan
    params: multilat.PathLossParams = field(default_factory=multilat.PathLossParams)
    resolution: float = EVAL_RESOLUTION
    name: str = "multilat"


@dataclass(frozen=True)
class SubsetResult:
    subset: tuple[str, ...]
    size: int
    mean_accuracy: float
    std_accuracy: float
    fold_accuracies: tuple[float, ...]


def count_combinations(d: int) -> int:
    """Number of non-empty beacon subsets, ``sum_i C(d, i) == 2**d - 1``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d > 63:
        raise OverflowError("d must be <= 63")
    return sum(math.comb(d, i) for i in range(1, d + 1))


def cv_splits(rooms: np.ndarray, cv: CvConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    rooms = np.asarray(rooms, dtype=object)
    if cv.folds == 1:
        return [split_indices(rooms, SplitConfig(cv.test_fraction, cv.seed), stream=r) for r in range(cv.repeats)]
    out = []
    labels = sorted(set(rooms.tolist()))
    for r in range(cv.repeats):
        chunks: list[list[np.ndarray]] = [[] for _ in range(cv.folds)]
        for i, room in enumerate(labels):
            rows = make_rng(cv.seed, "kfold", r, i).permutation(np.flatnonzero(rooms == room))
            for f, part in enumerate(np.array_split(rows, cv.folds)):
                chunks[f].append(part)
        for f in range(cv.folds):
            test = np.sort(np.concatenate(chunks[f]))
            out.append((np.setdiff1d(np.arange(len(rooms)), test), test))
    return out


def _stats(folds: Sequence[float]) -> tuple[float, float]:
    mean = sum(folds) / len(folds)
    return mean, float(np.std(folds))


def score_subset(dense: DenseDataset, subset: Sequence[str], method,
                 splits: Sequence[tuple[np.ndarray, np.ndarray]]) -> SubsetResult:
    """Accuracy of one beacon subset on each split."""
    sub = tuple(sorted(subset))
    proj = subset_columns(dense, sub)
    folds = []
    if isinstance(method, KnnMethod):
        for train, test in splits:
            model = knn.fit(proj.take(train), method.k)
            pred = knn.predict_many(model, proj.values[test])
            folds.append(float(np.mean(pred == proj.rooms[test])))
    elif isinstance(method, MultilatMethod):
        # predictions do not depend on the training rows: resolve each test row once
        rows = np.unique(np.concatenate([t for _, t in splits]))
        loc = multilat.MultilatLocalizer(method.plan, method.params, method.resolution)
        report = multilat.score(loc, proj.take(rows))
        correct = np.zeros(len(dense), dtype=bool)
        correct[rows] = report.predictions == proj.rooms[rows]
        folds = [float(np.mean(correct[test])) for _, test in splits]
    else:
        raise TypeError(f"unknown method {method!r}")
    mean, std = _stats(folds)
    return SubsetResult(sub, len(sub), mean, std, tuple(folds))


def enumerate_subsets(columns: Sequence[str], limits: SweepLimits = SweepLimits(),
                      seed: int = 0) -> list[tuple[str, ...]]:
    """Subsets per size, exhaustive unless a size holds more than ``per_size`` combinations."""
    cols = sorted(columns)
    d = len(cols)
    hi = d if limits.max_size is None else min(limits.max_size, d)
    out = []
    for size in range(max(1, limits.min_size), hi + 1):
        total = math.comb(d, size)
        if limits.per_size is None or total <= limits.per_size:
            out.extend(itertools.combinations(cols, size))
            continue
        rng = make_rng(seed, "subsets", size)
        picked: set[tuple[int, ...]] = set()
        while len(picked) < limits.per_size:
            picked.add(tuple(sorted(rng.choice(d, size, replace=False).tolist())))
        out.extend(tuple(cols[i] for i in idx) for idx in sorted(picked))
    return out


_WORKER: dict = {}


def _init_worker(dense, method, splits):
    _WORKER.update(dense=dense, method=method, splits=splits)


def _work(subset):
    return score_subset(_WORKER["dense"], subset, _WORKER["method"], _WORKER["splits"])


def sweep_subsets(dense: DenseDataset, method, cv: CvConfig = CvConfig(),
                  limits: SweepLimits = SweepLimits(), jobs: int = 1) -> list[SubsetResult]:
    """Score every admitted beacon subset; results ordered by (size, subset)."""
    splits = cv_splits(dense.rooms, cv)
    subsets = enumerate_subsets(dense.beacon_columns, limits, cv.seed)
    if jobs <= 1 or len(subsets) < 2:
        return [score_subset(dense, s, method, splits) for s in subsets]
    with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(dense, method, splits)) as ex:
        return list(ex.map(_work, subsets, chunksize=max(1, len(subsets) // (4 * jobs))))


@dataclass(frozen=True)
class SizeStats:
    size: int
    count: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def group_stats(results: Sequence[SubsetResult]) -> list[SizeStats]:
    """Five-number summary (linear-interpolation quartiles) of mean accuracy per subset size."""
    if not results:
        raise ValueError("no results")
    out = []
    for size in sorted({r.size for r in results}):
        acc = np.array([r.mean_accuracy for r in results if r.size == size])
        q = np.percentile(acc, [0, 25, 50, 75, 100], method="linear")
        out.append(SizeStats(size, len(acc), *map(float, q), float(acc.mean())))
    return out


def top_subsets(results: Sequence[SubsetResult]) -> dict[int, SubsetResult]:
    """Best subset per size; ties go to the lexicographically smallest subset."""
    best: dict[int, SubsetResult] = {}
    for r in results:
        cur = best.get(r.size)
        if (cur is None or r.mean_accuracy > cur.mean_accuracy
                or (r.mean_accuracy == cur.mean_accuracy and r.subset < cur.subset)):
            best[r.size] = r
    return dict(sorted(best.items()))


@dataclass(frozen=True)
class BeaconFrequency:
    label: str
    count: int
    x: float | None = None
    y: float | None = None


def beacon_frequency(results: Sequence[SubsetResult], plan: FloorPlan | None = None) -> list[BeaconFrequency]:
    """How often each beacon appears in the best subset of each size."""
    if not results:
        raise ValueError("no results")
    counts: dict[str, int] = {}
    for r in results:
        for b in r.subset:
            counts.setdefault(b, 0)
    for r in top_subsets(results).values():
        for b in r.subset:
            counts[b] += 1
    pos = plan.beacons if plan is not None else {}
    return [BeaconFrequency(b, c, pos[b].x if b in pos else None, pos[b].y if b in pos else None)
            for b, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


@dataclass(frozen=True)
class TrainingCell:
    n_beacons: int
    samples_per_room: int
    mean_accuracy: float
    std_accuracy: float
    fold_accuracies: tuple[float, ...]


@dataclass(frozen=True)
class TrainingSweep:
    cells: list[TrainingCell]
    subsets: dict[int, tuple[str, ...]]

    def accuracy(self, n_beacons: int, size: int) -> float:
        for c in self.cells:
            if c.n_beacons == n_beacons and c.samples_per_room == size:
                return c.mean_accuracy
        raise KeyError((n_beacons, size))

    def differences(self) -> list[tuple[int, int, int, float]]:
        """(n_beacons, size_from, size_to, accuracy change) along the size axis."""
        out = []
        for b in sorted(self.subsets):
            row = sorted((c for c in self.cells if c.n_beacons == b), key=lambda c: c.samples_per_room)
            for lo, hi in zip(row, row[1:]):
                out.append((b, lo.samples_per_room, hi.samples_per_room, hi.mean_accuracy - lo.mean_accuracy))
        return out


def training_size_sweep(dense: DenseDataset, sizes: Sequence[int], beacon_counts: Sequence[int],
                        method=KnnMethod(), cv: CvConfig = CvConfig(),
                        subsets: Mapping[int, Sequence[str]] | None = None) -> TrainingSweep:
    """Accuracy for each (beacon count, training rows per room) pair.

    Each repeat fixes one held-out test set. Training rows are the first ``n``
    of a per-room shuffle of the remaining pool, so smaller training sets are
    nested in larger ones. ``subsets`` maps a beacon count to the beacons used;
    by default the first ``n`` dataset columns.
    """
    sizes = sorted(set(int(s) for s in sizes))
    chosen = {}
    for b in beacon_counts:
        cols = tuple(subsets[b]) if subsets and b in subsets else tuple(dense.beacon_columns[:b])
        if len(cols) != b:
            raise ValueError(f"need {b} beacons, have {len(cols)}")
        chosen[b] = tuple(sorted(cols))
    splits = cv_splits(dense.rooms, cv)
    labels = dense.room_labels
    orders = []
    for r, (pool, _) in enumerate(splits):
        per_room = []
        for i, room in enumerate(labels):
            rows = pool[dense.rooms[pool] == room]
            if sizes and sizes[-1] > len(rows):
                raise ValueError(f"room {room!r} has {len(rows)} training rows, {sizes[-1]} requested")
            per_room.append(make_rng(cv.seed, "train-size", r, i).permutation(rows))
        orders.append(per_room)
    cells = []
    for b, cols in chosen.items():
        proj = subset_columns(dense, cols)
        for n in sizes:
            folds = []
            for r, (_, test) in enumerate(splits):
                train = np.sort(np.concatenate([rows[:n] for rows in orders[r]]))
                res = score_subset(proj, cols, method, [(train, test)])
                folds.append(res.fold_accuracies[0])
            mean, std = _stats(folds)
            cells.append(TrainingCell(b, n, mean, std, tuple(folds)))
    return TrainingSweep(cells, chosen)


# --- CSV output -------------------------------------------------------------

def write_subset_results(results: Sequence[SubsetResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "subset", "mean_accuracy", "std_accuracy", "fold_accuracies"])
        for r in results:
            w.writerow([r.size, " ".join(r.subset), repr(r.mean_accuracy), repr(r.std_accuracy),
                        " ".join(repr(a) for a in r.fold_accuracies)])


def read_subset_results(path: str | Path) -> list[SubsetResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            folds = tuple(float(a) for a in row["fold_accuracies"].split())
            out.append(SubsetResult(tuple(row["subset"].split()), int(row["size"]), float(row["mean_accuracy"]),
                                    float(row["std_accuracy"]), folds))
    return out


def write_group_stats(stats: Sequence[SizeStats], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "count", "min", "q1", "median", "q3", "max", "mean"])
        for s in stats:
            w.writerow([s.size, s.count] + [repr(v) for v in (s.min, s.q1, s.median, s.q3, s.max, s.mean)])


def write_frequency(freq: Sequence[BeaconFrequency], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beacon", "count", "x", "y"])
        for f in freq:
            w.writerow([f.label, f.count, "" if f.x is None else repr(f.x), "" if f.y is None else repr(f.y)])


def write_training_sweep(sweep: TrainingSweep, path: str | Path) -> None:
    diffs = {(b, hi): d for b, _, hi, d in sweep.differences()}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_beacons", "samples_per_room", "mean_accuracy", "std_accuracy", "first_difference", "subset"])
        for c in sweep.cells:
            d = diffs.get((c.n_beacons, c.samples_per_room))
            w.writerow([c.n_beacons, c.samples_per_room, repr(c.mean_accuracy), repr(c.std_accuracy),
                        "" if d is None else repr(d), " ".join(sweep.subsets[c.n_beacons])])
