"""Floor plans, beacon placements and the raster geometry used by the
multilateration localizer.

Rooms are rectilinear polygons listed counterclockwise. Circle overlaps are
handled on a uniform grid of square cells: a cell belongs to a circle when its
center lies inside (or on) the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

OUTSIDE = "∅"
DEFAULT_RESOLUTION = 0.05


class PlanError(ValueError):
    """Raised for malformed or inconsistent floor-plan input."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def distance(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float
    beacon_id: str = ""

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Room:
    label: str
    polygon: tuple[Point, ...]
    beacons: tuple[tuple[str, Point], ...] = ()

    @property
    def area(self) -> float:
        return _signed_area(self.polygon)

    @property
    def beacon(self) -> Point | None:
        """The room's beacon when it carries exactly one, else ``None``."""
        return self.beacons[0][1] if len(self.beacons) == 1 else None

    def contains(self, p: Point) -> bool:
        """Closed containment: boundary points count as inside."""
        return bool(points_in_polygon(np.array([[p.x, p.y]]), self.polygon)[0])


@dataclass(frozen=True)
class FloorPlan:
    rooms: tuple[Room, ...]
    bounds: tuple[float, float, float, float]
    name: str = "plan"

    def __post_init__(self):
        _validate_plan(self)

    @property
    def room_labels(self) -> tuple[str, ...]:
        return tuple(r.label for r in self.rooms)

    @property
    def beacons(self) -> dict[str, Point]:
        """Fixed-beacon label -> position, in plan order."""
        return {lab: p for r in self.rooms for lab, p in r.beacons}

    @property
    def beacon_rooms(self) -> dict[str, str]:
        return {lab: r.label for r in self.rooms for lab, _ in r.beacons}

    @property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    def room(self, label: str) -> Room:
        for r in self.rooms:
            if r.label == label:
                return r
        raise KeyError(label)


@dataclass(frozen=True, eq=False)
class IntersectionRegion:
    """Cells covered by exactly the circles in ``members`` and no others."""

    members: frozenset[str]
    radii_sum: float
    centers: np.ndarray  # (n, 2) cell centers
    cell_area: float

    @property
    def cardinality(self) -> int:
        return len(self.members)

    @property
    def n_cells(self) -> int:
        return len(self.centers)

    @property
    def area(self) -> float:
        return self.n_cells * self.cell_area


# --- polygon primitives -----------------------------------------------------

def _signed_area(poly: Sequence[Point]) -> float:
    s = 0.0
    for a, b in zip(poly, poly[1:] + poly[:1]):
        s += a.x * b.y - b.x * a.y
    return s / 2.0


def points_in_polygon(pts: np.ndarray, polygon: Sequence[Point]) -> np.ndarray:
    """Vectorized closed point-in-polygon test (boundary counts as inside)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    px, py = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        # boundary: collinear and within the segment's box
        cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
        within = ((px >= min(a.x, b.x)) & (px <= max(a.x, b.x))
                  & (py >= min(a.y, b.y)) & (py <= max(a.y, b.y)))
        on_edge |= within & (cross == 0)
        # crossing number with half-open rule on y
        straddle = (a.y > py) != (b.y > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y)
        inside ^= straddle & (px < xint)
    return inside | on_edge


def _segments_cross(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of two closed segments."""
    def orient(a, b, c):
        v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return min(a.x, b.x) <= c.x <= max(a.x, b.x) and min(a.y, b.y) <= c.y <= max(a.y, b.y)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


def _validate_room(room: Room) -> None:
    poly = room.polygon
    if len(poly) < 4:
        raise PlanError(f"room {room.label}: a rectilinear polygon needs at least 4 vertices")
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if a == b:
            raise PlanError(f"room {room.label}: repeated vertex {a}")
        if a.x != b.x and a.y != b.y:
            raise PlanError(f"room {room.label}: edge {a}->{b} is not axis-aligned")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                raise PlanError(f"room {room.label}: polygon is self-intersecting")
    if _signed_area(poly) <= 0:
        raise PlanError(f"room {room.label}: vertices must be listed counterclockwise")
    for lab, p in room.beacons:
        if not room.contains(p):
            raise PlanError(f"beacon {lab} at ({p.x}, {p.y}) lies outside room {room.label}")


def _interiors_overlap(a: Room, b: Room) -> bool:
    # Exact for rectilinear polygons: both are unions of the elementary
    # rectangles spanned by their combined vertex coordinates.
    xs = sorted({p.x for p in a.polygon + b.polygon})
    ys = sorted({p.y for p in a.polygon + b.polygon})
    cx = [(u + v) / 2 for u, v in zip(xs, xs[1:])]
    cy = [(u + v) / 2 for u, v in zip(ys, ys[1:])]
    if not cx or not cy:
        return False
    grid = np.array([(x, y) for x in cx for y in cy])
    return bool(np.any(points_in_polygon(grid, a.polygon) & points_in_polygon(grid, b.polygon)))


def _validate_plan(plan: FloorPlan) -> None:
    if not plan.rooms:
        raise PlanError("a floor plan needs at least one room")
    x0, y0, x1, y1 = plan.bounds
    if not (x1 > x0 and y1 > y0):
        raise PlanError(f"degenerate bounds {plan.bounds}")
    labels = [r.label for r in plan.rooms]
    if len(set(labels)) != len(labels):
        raise PlanError("room labels must be unique")
    seen: set[str] = set()
    for r in plan.rooms:
        _validate_room(r)
        for p in r.polygon:
            if not (x0 <= p.x <= x1 and y0 <= p.y <= y1):
                raise PlanError(f"room {r.label} extends beyond the plan bounds")
        for lab, _ in r.beacons:
            if lab in seen:
                raise PlanError(f"duplicate beacon label {lab}")
            seen.add(lab)
    for i, a in enumerate(plan.rooms):
        for b in plan.rooms[i + 1:]:
            if _interiors_overlap(a, b):
                raise PlanError(f"rooms {a.label} and {b.label} overlap")


# --- loading ----------------------------------------------------------------

def _pt(v) -> Point:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise PlanError(f"expected an [x, y] pair, got {v!r}")
    try:
        return Point(float(v[0]), float(v[1]))
    except (TypeError, ValueError) as exc:
        raise PlanError(str(exc)) from exc


def plan_from_dict(doc: Mapping) -> FloorPlan:
    try:
        rooms_doc = doc["rooms"]
        bounds = tuple(float(v) for v in doc["bounds"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(f"floor plan missing or invalid field: {exc}") from exc
    if len(bounds) != 4:
        raise PlanError("bounds must be [xmin, ymin, xmax, ymax]")
    rooms = []
    for rd in rooms_doc or []:
        try:
            label = str(rd["label"])
            verts = [_pt(v) for v in rd["vertices"]]
        except (KeyError, TypeError) as exc:
            raise PlanError(f"room entry missing field: {exc}") from exc
        if len(verts) > 1 and verts[0] == verts[-1]:
            verts = verts[:-1]
        beacons = rd.get("beacons") or {}
        if not isinstance(beacons, Mapping):
            raise PlanError(f"room {label}: beacons must map label -> [x, y]")
        rooms.append(Room(label, tuple(verts), tuple((str(k), _pt(v)) for k, v in beacons.items())))
    return FloorPlan(tuple(rooms), bounds, str(doc.get("name", "plan")))


def load_floorplan(path: str | Path) -> FloorPlan:
    """Read and validate a YAML floor-plan file."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise PlanError(f"{path}: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise PlanError(f"{path}: top level must be a mapping")
    return plan_from_dict(doc)


def bundled_plan(name: str) -> FloorPlan:
    """Load one of the shipped fixtures (``"office"`` or ``"apartment"``)."""
    return load_floorplan(Path(__file__).parent / "data" / f"{name}.plan")


# --- circles and regions ----------------------------------------------------

def circle_pair_intersection_area(a: Circle, b: Circle) -> float:
    d = a.center.distance(b.center)
    r1, r2 = a.radius, b.radius
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    alpha = math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    beta = math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    tri = 0.5 * math.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return r1 * r1 * alpha + r2 * r2 * beta - tri


def grid_centers(bounds: Sequence[float], resolution: float) -> np.ndarray:
    """Centers of the square cells tiling ``bounds`` (last row/column may overhang)."""
    x0, y0, x1, y1 = bounds
    nx = max(1, math.ceil((x1 - x0) / resolution - 1e-9))
    ny = max(1, math.ceil((y1 - y0) / resolution - 1e-9))
    xs = x0 + (np.arange(nx) + 0.5) * resolution
    ys = y0 + (np.arange(ny) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _coverage_codes(centers: np.ndarray, circles: Sequence[Circle]) -> np.ndarray:
    """Bitmask per cell of the circles covering it (bit i <-> circles[i])."""
    codes = np.zeros(len(centers), dtype=np.int64)
    for i, c in enumerate(circles):
        inside = (centers[:, 0] - c.center.x) ** 2 + (centers[:, 1] - c.center.y) ** 2 <= c.radius ** 2
        codes[inside] |= np.int64(1) << i
    return codes


def _popcount(codes: np.ndarray) -> np.ndarray:
    v = codes.astype(np.uint64)
    n = np.zeros(v.shape, dtype=np.int64)
    while np.any(v):
        n += (v & np.uint64(1)).astype(np.int64)
        v >>= np.uint64(1)
    return n


def find_intersection_regions(circles: Sequence[Circle], resolution: float = DEFAULT_RESOLUTION,
                              bounds: Sequence[float] | None = None) -> list[IntersectionRegion]:
    """Partition the rasterized overlap of ``circles`` by exact covering set.

    The grid spans the circles' bounding box unless ``bounds`` is given. One
    region is returned per distinct covering set with at least two members,
    ordered by (cardinality desc, radii sum, sorted labels).
    """
    if not circles:
        raise ValueError("need at least one circle")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if len(circles) > 62:
        raise ValueError("at most 62 circles per call")
    ids = [c.beacon_id or str(i) for i, c in enumerate(circles)]
    if len(set(ids)) != len(ids):
        raise ValueError("circle beacon ids must be unique")
    if bounds is None:
        bounds = (min(c.center.x - c.radius for c in circles), min(c.center.y - c.radius for c in circles),
                  max(c.center.x + c.radius for c in circles), max(c.center.y + c.radius for c in circles))
    centers = grid_centers(bounds, resolution)
    codes = _coverage_codes(centers, circles)
    multi = _popcount(codes) >= 2
    regions = []
    uniq, inverse = np.unique(codes[multi], return_inverse=True)
    sel_centers = centers[multi]
    for j, code in enumerate(uniq):
        idx = [i for i in range(len(circles)) if (int(code) >> i) & 1]
        regions.append(IntersectionRegion(
            members=frozenset(ids[i] for i in idx),
            radii_sum=float(sum(circles[i].radius for i in idx)),
            centers=sel_centers[inverse == j],
            cell_area=resolution * resolution,
        ))
    regions.sort(key=lambda r: (-r.cardinality, r.radii_sum, sorted(r.members)))
    return regions


def point_labels(pts: np.ndarray, plan: FloorPlan) -> np.ndarray:
    """Room label per point (first room in plan order wins), ``None`` outside."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    out = np.full(len(pts), None, dtype=object)
    todo = np.ones(len(pts), dtype=bool)
    for r in plan.rooms:
        hit = todo & points_in_polygon(pts, r.polygon)
        out[hit] = r.label
        todo &= ~hit
    return out


def point_room(p: Point, plan: FloorPlan) -> str | None:
    return point_labels(np.array([[p.x, p.y]]), plan)[0]


def region_room_cell_counts(region: IntersectionRegion, plan: FloorPlan) -> dict[str, int]:
    labels = point_labels(region.centers, plan)
    counts: dict[str, int] = {}
    for lab in labels:
        key = OUTSIDE if lab is None else lab
        counts[key] = counts.get(key, 0) + 1
    return counts


def region_room_coverage(region: IntersectionRegion, plan: FloorPlan) -> dict[str, float]:
    """Area of ``region`` falling in each room; cells outside all rooms go to ``OUTSIDE``."""
    if region.n_cells == 0:
        raise ValueError("empty region")
    return {k: n * region.cell_area for k, n in region_room_cell_counts(region, plan).items()}


def iter_edges(plan: FloorPlan) -> Iterable[tuple[Point, Point]]:
    for r in plan.rooms:
        n = len(r.polygon)
        for i in range(n):
            yield r.polygon[i], r.polygon[(i + 1) % n]
