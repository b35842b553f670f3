"""Room-level multilateration on a floor plan.

RSSI readings become range circles through a log-distance path-loss model.
The room is then resolved in four steps, first match wins:

1. proximity: a beacon stronger than ``proximity_rssi`` names its own room;
2. max_cardinality: the overlap region covered by the most circles is laid
   over the plan and the room with the largest share of it wins;
3. min_radii_sum: as 2, when several regions share the top cardinality the
   one built from the smallest radii is used;
4. nearest_beacon: no two circles overlap, the strongest beacon's room wins.

Overlaps are evaluated on a raster restricted to the plan's bounding box.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import SENTINEL, DenseDataset
from .geometry import DEFAULT_RESOLUTION, OUTSIDE, FloorPlan, grid_centers, point_labels

PROXIMITY = "proximity"
MAX_CARDINALITY = "max_cardinality"
MIN_RADII_SUM = "min_radii_sum"
NEAREST_BEACON = "nearest_beacon"
CASES = (PROXIMITY, MAX_CARDINALITY, MIN_RADII_SUM, NEAREST_BEACON)


class MultilatError(ValueError):
    pass


@dataclass(frozen=True)
class PathLossParams:
    rssi_at_1m: float = -61.0
    exponent: float = 3.0
    proximity_rssi: float = -70.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError("path-loss exponent must be positive")
        if not -120 < self.proximity_rssi < 0:
            raise ValueError("proximity_rssi must lie in (-120, 0) dBm")

    def as_dict(self) -> dict[str, float]:
        return {"rssi_at_1m": self.rssi_at_1m, "exponent": self.exponent, "proximity_rssi": self.proximity_rssi}


@dataclass(frozen=True)
class RoomPrediction:
    room: str
    case_used: str
    coverage: dict[str, float] | None = None
    winning_set: frozenset[str] | None = None
    radii: dict[str, float] = field(default_factory=dict, repr=False)


def rssi_to_distance(rssi, p: PathLossParams = PathLossParams()):
    """Distance in meters, ``10 ** ((rssi_at_1m - rssi) / (10 * exponent))``."""
    d = 10.0 ** ((p.rssi_at_1m - np.asarray(rssi, dtype=float)) / (10.0 * p.exponent))
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True, eq=False)
class _PlanGrid:
    centers: np.ndarray
    cell_room: np.ndarray  # index into plan.rooms, -1 outside
    sq_dist: np.ndarray  # (n_beacons, n_cells) squared distance to each fixed beacon
    beacon_index: dict[str, int]
    cell_area: float


@functools.lru_cache(maxsize=16)
def _plan_grid(plan: FloorPlan, resolution: float) -> _PlanGrid:
    centers = grid_centers(plan.bounds, resolution)
    labels = point_labels(centers, plan)
    lookup = {r.label: i for i, r in enumerate(plan.rooms)}
    cell_room = np.array([-1 if l is None else lookup[l] for l in labels], dtype=np.int64)
    beacons = plan.beacons
    sq = np.empty((len(beacons), len(centers)))
    for i, p in enumerate(beacons.values()):
        sq[i] = (centers[:, 0] - p.x) ** 2 + (centers[:, 1] - p.y) ** 2
    return _PlanGrid(centers, cell_room, sq, {b: i for i, b in enumerate(beacons)}, resolution * resolution)


class MultilatLocalizer:
    """Four-case room resolver bound to one plan, path-loss model and raster."""

    def __init__(self, plan: FloorPlan, params: PathLossParams = PathLossParams(),
                 resolution: float = DEFAULT_RESOLUTION):
        if not resolution > 0:
            raise ValueError("resolution must be positive")
        self.plan = plan
        self.params = params
        self.resolution = float(resolution)
        self._grid = _plan_grid(plan, self.resolution)
        self._beacon_room = plan.beacon_rooms
        self._room_labels = plan.room_labels
        self._max_radius = plan.diagonal

    def radius(self, rssi: float) -> float:
        return min(float(rssi_to_distance(rssi, self.params)), self._max_radius)

    def predict(self, scan: Mapping[str, float]) -> RoomPrediction:
        if not scan:
            raise MultilatError("empty scan")
        labels = list(scan)
        return self.predict_rows(np.array([[float(scan[b]) for b in labels]]), labels)[0]

    def predict_rows(self, values: np.ndarray, columns: Sequence[str], chunk: int = 32) -> list[RoomPrediction]:
        """Resolve many scans at once; NaN or sentinel cells mean "not detected"."""
        for c in columns:
            if c not in self._grid.beacon_index:
                raise MultilatError(f"unknown beacon label {c!r}")
        if len(columns) > 62:
            raise MultilatError("at most 62 beacons per scan")
        values = np.asarray(values, dtype=float).reshape(-1, len(columns))
        detected = ~np.isnan(values) & (values != SENTINEL)
        if not detected.any(axis=1).all():
            raise MultilatError("scan without any detected beacon")
        out: list[RoomPrediction | None] = [None] * len(values)
        geo_rows = []
        for i, (row, det) in enumerate(zip(values, detected)):
            cols = np.flatnonzero(det)
            # strongest beacon; equal RSSI falls back to the smaller label
            best = min(cols, key=lambda j: (-row[j], columns[j]))
            if row[best] > self.params.proximity_rssi:
                b = columns[best]
                out[i] = RoomPrediction(self._beacon_room[b], PROXIMITY, winning_set=frozenset([b]),
                                        radii={b: self.radius(row[best])})
            else:
                geo_rows.append(i)
        sq = self._grid.sq_dist[[self._grid.beacon_index[c] for c in columns]]
        weights = np.left_shift(np.int64(1), np.arange(len(columns), dtype=np.int64))
        radii_all = np.minimum(rssi_to_distance(np.where(detected, values, 0.0), self.params), self._max_radius)
        for s in range(0, len(geo_rows), chunk):
            rows = geo_rows[s:s + chunk]
            r2 = np.where(detected[rows], radii_all[rows] ** 2, -1.0)
            cover = sq[None, :, :] <= r2[:, :, None]
            count = cover.sum(axis=1)
            codes = np.zeros(count.shape, dtype=np.int64)
            for b in range(len(columns)):
                codes[cover[:, b, :]] |= weights[b]
            for k, i in enumerate(rows):
                out[i] = self._resolve(values[i], detected[i], radii_all[i], columns, count[k], codes[k])
        return out

    def _resolve(self, row, det, radii, columns, count, codes) -> RoomPrediction:
        radius_map = {columns[j]: float(radii[j]) for j in np.flatnonzero(det)}
        maxc = int(count.max())
        if maxc >= 2:
            top = count == maxc
            candidates = np.unique(codes[top])
            case = MAX_CARDINALITY if len(candidates) == 1 else MIN_RADII_SUM

            def members(code):
                return tuple(sorted(columns[j] for j in range(len(columns)) if (int(code) >> j) & 1))

            def key(code):
                m = members(code)
                return (sum(radius_map[b] for b in m), m)

            chosen = min(candidates, key=key)
            cells = top & (codes == chosen)
            counts = np.bincount(self._grid.cell_room[cells] + 1, minlength=len(self._room_labels) + 1)
            coverage = {OUTSIDE: float(counts[0] * self._grid.cell_area)} if counts[0] else {}
            for j, lab in enumerate(self._room_labels):
                if counts[j + 1]:
                    coverage[lab] = float(counts[j + 1] * self._grid.cell_area)
            inside = [lab for lab in coverage if lab != OUTSIDE]
            if inside:
                best = max(coverage[lab] for lab in inside)
                room = min(lab for lab in inside if coverage[lab] == best)
                return RoomPrediction(room, case, coverage, frozenset(members(chosen)), radius_map)
        # no usable overlap: strongest beacon
        j = min(np.flatnonzero(det), key=lambda j: (-row[j], columns[j]))
        b = columns[j]
        return RoomPrediction(self._beacon_room[b], NEAREST_BEACON, winning_set=frozenset([b]), radii=radius_map)


def predict_room(scan: Mapping[str, float], plan: FloorPlan, p: PathLossParams = PathLossParams(),
                 resolution: float = DEFAULT_RESOLUTION) -> RoomPrediction:
    """Resolve one scan (fixed-beacon label -> dBm) to a room."""
    return MultilatLocalizer(plan, p, resolution).predict(scan)


@dataclass(frozen=True)
class MultilatReport:
    accuracy: float
    correct: int
    total: int
    case_counts: dict[str, int]
    flagged_rows: tuple[int, ...]  # rows with no detected beacon, counted wrong
    params: dict[str, float]
    predictions: np.ndarray = field(repr=False, compare=False, default=None)


def accuracy(test: DenseDataset, plan: FloorPlan, p: PathLossParams = PathLossParams(),
             resolution: float = DEFAULT_RESOLUTION) -> MultilatReport:
    loc = MultilatLocalizer(plan, p, resolution)
    return score(loc, test)


def score(loc: MultilatLocalizer, test: DenseDataset) -> MultilatReport:
    unknown = set(test.beacon_columns) - set(loc.plan.beacons)
    if unknown:
        raise MultilatError(f"columns not in plan: {sorted(unknown)}")
    values = np.where(test.values == SENTINEL, np.nan, test.values)
    usable = ~np.isnan(values).all(axis=1)
    preds = np.full(len(test), None, dtype=object)
    cases = dict.fromkeys(CASES, 0)
    idx = np.flatnonzero(usable)
    if len(idx):
        for i, rp in zip(idx, loc.predict_rows(values[idx], test.beacon_columns)):
            preds[i] = rp.room
            cases[rp.case_used] += 1
    correct = int(np.sum(preds == np.asarray(test.rooms, dtype=object)))
    total = len(test)
    return MultilatReport(correct / total if total else 0.0, correct, total, cases,
                          tuple(int(i) for i in np.flatnonzero(~usable)), loc.params.as_dict(), preds)
