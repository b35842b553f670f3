"""Fingerprint survey tables: parsing, imputation, splitting and projection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Collection, Iterable, Sequence

import numpy as np

from .rng import make_rng

SENTINEL = -200.0
RSSI_MIN, RSSI_MAX = -120, 0

OBSERVED, IMPUTED_SENTINEL, IMPUTED_MEAN = 0, 1, 2
_PROV_NAMES = {OBSERVED: "observed", IMPUTED_SENTINEL: "sentinel", IMPUTED_MEAN: "mean"}
_PROV_CODES = {v: k for k, v in _PROV_NAMES.items()}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RawDataset:
    """Survey rows; ``values`` holds dBm with NaN marking a missed beacon."""

    beacon_columns: tuple[str, ...]
    values: np.ndarray  # (n_rows, n_columns) float
    rooms: np.ndarray  # (n_rows,) str

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape != (len(self.rooms), len(self.beacon_columns)):
            raise DatasetError("value matrix shape does not match rows x columns")
        if len(set(self.beacon_columns)) != len(self.beacon_columns):
            raise DatasetError("duplicate beacon column")
        obs = v[~np.isnan(v)]
        if obs.size and (obs.min() < RSSI_MIN or obs.max() > RSSI_MAX):
            raise DatasetError(f"RSSI outside [{RSSI_MIN}, {RSSI_MAX}] dBm")

    def __len__(self) -> int:
        return len(self.rooms)

    @property
    def room_labels(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.rooms.tolist())))


@dataclass(frozen=True, eq=False)
class DenseDataset:
    """Gap-free table plus a per-cell provenance code."""

    beacon_columns: tuple[str, ...]
    values: np.ndarray
    rooms: np.ndarray
    provenance: np.ndarray  # int8: OBSERVED / IMPUTED_SENTINEL / IMPUTED_MEAN

    def __post_init__(self):
        if self.values.shape != (len(self.rooms), len(self.beacon_columns)):
            raise DatasetError("value matrix shape does not match rows x columns")
        if self.provenance.shape != self.values.shape:
            raise DatasetError("provenance shape does not match values")
        if np.isnan(self.values).any():
            raise DatasetError("dense dataset contains missing cells")

    def __len__(self) -> int:
        return len(self.rooms)

    @property
    def room_labels(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.rooms.tolist())))

    def take(self, idx: Sequence[int] | np.ndarray) -> "DenseDataset":
        idx = np.asarray(idx, dtype=int)
        return DenseDataset(self.beacon_columns, self.values[idx], self.rooms[idx], self.provenance[idx])


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")


# --- CSV --------------------------------------------------------------------

def _header(columns: Iterable[str]) -> list[str]:
    return [f"BEACON_{c}" for c in columns] + ["ROOM"]


def _parse_header(row: list[str], path) -> tuple[str, ...]:
    if not row or row[-1].strip().upper() != "ROOM":
        raise DatasetError(f"{path}: header must end with a ROOM column")
    cols = []
    for h in row[:-1]:
        h = h.strip()
        if not h.startswith("BEACON_") or len(h) == len("BEACON_"):
            raise DatasetError(f"{path}: bad beacon column {h!r}")
        cols.append(h[len("BEACON_"):])
    return tuple(cols)


def parse_dataset(path: str | Path, rooms: Collection[str] | None = None) -> RawDataset:
    """Read a survey CSV; empty cells are missing observations.

    ``rooms`` optionally whitelists the allowed room labels.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            cols = _parse_header(next(reader), path)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        values, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(cols) + 1:
                raise DatasetError(f"{path}:{lineno}: expected {len(cols) + 1} fields, got {len(row)}")
            vals = []
            for cell in row[:-1]:
                cell = cell.strip()
                if cell == "":
                    vals.append(math.nan)
                    continue
                try:
                    v = int(cell)
                except ValueError:
                    raise DatasetError(f"{path}:{lineno}: RSSI {cell!r} is not an integer dBm value") from None
                if not RSSI_MIN <= v <= RSSI_MAX:
                    raise DatasetError(f"{path}:{lineno}: RSSI {v} outside [{RSSI_MIN}, {RSSI_MAX}]")
                vals.append(float(v))
            room = row[-1].strip()
            if rooms is not None and room not in rooms:
                raise DatasetError(f"{path}:{lineno}: unknown room label {room!r}")
            values.append(vals)
            labels.append(room)
    arr = np.array(values, dtype=float).reshape(len(values), len(cols))
    return RawDataset(cols, arr, np.array(labels, dtype=object))


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_dataset(ds: RawDataset | DenseDataset, path: str | Path) -> None:
    """Write a survey CSV. Dense datasets also get a ``.provenance.csv`` sibling."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(ds.beacon_columns))
        for vals, room in zip(ds.values, ds.rooms):
            w.writerow(["" if np.isnan(v) else _fmt(v) for v in vals] + [room])
    if isinstance(ds, DenseDataset):
        with open(provenance_path(path), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(_header(ds.beacon_columns))
            for prov, room in zip(ds.provenance, ds.rooms):
                w.writerow([_PROV_NAMES[int(p)] for p in prov] + [room])


def provenance_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".provenance.csv")


def load_dense(path: str | Path) -> DenseDataset:
    """Read a gap-free CSV written by :func:`write_dataset`.

    Cells equal to the sentinel count as sentinel-imputed when no provenance
    file sits next to the CSV; everything else counts as observed.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        cols = _parse_header(next(reader), path)
        rows = [r for r in reader if r]
    for i, r in enumerate(rows, start=2):
        if len(r) != len(cols) + 1:
            raise DatasetError(f"{path}:{i}: expected {len(cols) + 1} fields, got {len(r)}")
    try:
        values = np.array([[float(c) for c in r[:-1]] for r in rows], dtype=float).reshape(len(rows), len(cols))
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    rooms = np.array([r[-1].strip() for r in rows], dtype=object)
    ppath = provenance_path(path)
    if ppath.exists():
        with open(ppath, newline="", encoding="utf-8") as fh:
            prows = [r for r in csv.reader(fh)][1:]
        prov = np.array([[_PROV_CODES[c] for c in r[:-1]] for r in prows if r], dtype=np.int8)
        prov = prov.reshape(values.shape)
    else:
        prov = np.where(values == SENTINEL, IMPUTED_SENTINEL, OBSERVED).astype(np.int8)
    return DenseDataset(cols, values, rooms, prov)


# --- transformations --------------------------------------------------------

def impute(raw: RawDataset | DenseDataset) -> DenseDataset:
    """Fill gaps per (room, beacon) group.

    A group with no observation at all gets the -200 dBm sentinel; a partially
    observed group gets the mean of its observed values. Dense input is
    returned unchanged.
    """
    if isinstance(raw, DenseDataset):
        return raw
    values = raw.values.copy()
    prov = np.zeros(values.shape, dtype=np.int8)
    for room in raw.room_labels:
        rows = np.flatnonzero(raw.rooms == room)
        block = values[rows]
        missing = np.isnan(block)
        n_obs = (~missing).sum(axis=0)
        with np.errstate(invalid="ignore"):
            means = np.nansum(block, axis=0) / n_obs
        for j in np.flatnonzero(missing.any(axis=0)):
            hole = rows[missing[:, j]]
            if n_obs[j] == 0:
                values[hole, j] = SENTINEL
                prov[hole, j] = IMPUTED_SENTINEL
            else:
                values[hole, j] = means[j]
                prov[hole, j] = IMPUTED_MEAN
    return DenseDataset(raw.beacon_columns, values, raw.rooms.copy(), prov)


def holdout_count(n: int, fraction: float) -> int:
    """``ceil(fraction * n)`` evaluated on the decimal value of ``fraction``."""
    return math.ceil(Fraction(str(fraction)) * n)


def split(dense: DenseDataset, cfg: SplitConfig) -> tuple[DenseDataset, DenseDataset]:
    """Stratified holdout: per room, ``ceil(c * n_room)`` shuffled rows go to test."""
    train_idx, test_idx = split_indices(dense.rooms, cfg)
    return dense.take(train_idx), dense.take(test_idx)


def split_indices(rooms: np.ndarray, cfg: SplitConfig, stream: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of a stratified split; ``stream`` selects an independent shuffle."""
    train, test = [], []
    for i, room in enumerate(sorted(set(rooms.tolist()))):
        rows = np.flatnonzero(rooms == room)
        if len(rows) < 2:
            raise DatasetError(f"room {room!r} has fewer than 2 rows; cannot split")
        perm = make_rng(cfg.seed, "split", stream, i).permutation(rows)
        n_test = holdout_count(len(rows), cfg.test_fraction)
        test.append(perm[:n_test])
        train.append(perm[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def subset_columns(ds, beacon_subset: Collection[str]):
    """Project onto ``beacon_subset`` (kept in the dataset's column order)."""
    wanted = set(beacon_subset)
    if not wanted:
        raise DatasetError("empty beacon subset")
    unknown = wanted - set(ds.beacon_columns)
    if unknown:
        raise DatasetError(f"unknown beacon label(s): {sorted(unknown)}")
    idx = [j for j, c in enumerate(ds.beacon_columns) if c in wanted]
    cols = tuple(ds.beacon_columns[j] for j in idx)
    if isinstance(ds, DenseDataset):
        return DenseDataset(cols, ds.values[:, idx], ds.rooms, ds.provenance[:, idx])
    return RawDataset(cols, ds.values[:, idx], ds.rooms)


def subsample_per_room(dense: DenseDataset, n: int, seed: int, tag: str = "subsample") -> DenseDataset:
    """Keep ``n`` seeded-random rows per room (original order preserved)."""
    keep = []
    for i, room in enumerate(dense.room_labels):
        rows = np.flatnonzero(dense.rooms == room)
        if n > len(rows):
            raise DatasetError(f"room {room!r} has {len(rows)} rows, {n} requested")
        keep.append(make_rng(seed, tag, i).choice(rows, size=n, replace=False))
    return dense.take(np.sort(np.concatenate(keep)))
