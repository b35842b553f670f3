"""Synthetic site surveys and gateway walks under a log-distance radio model."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import RSSI_MAX, RawDataset
from .geometry import FloorPlan, Point, iter_edges, point_labels, points_in_polygon
from .multilat import PathLossParams
from .rng import make_rng
from .stream import BleScanEvent, Inventory, write_events

MIN_DISTANCE = 0.1
DEFAULT_START_MS = 1_700_000_000_000


@dataclass(frozen=True)
class RadioModel:
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    shadowing_sigma: float = 4.0
    sensitivity_floor: float = -95.0
    seed: int = 0
    wall_loss_db: float = 0.0  # extension: fixed attenuation per crossed wall

    def __post_init__(self):
        if self.shadowing_sigma < 0:
            raise ValueError("shadowing_sigma must be >= 0")
        if not self.sensitivity_floor < 0:
            raise ValueError("sensitivity_floor must be negative")
        if self.wall_loss_db < 0:
            raise ValueError("wall_loss_db must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Trajectory:
    timestamps: np.ndarray  # epoch ms, strictly increasing
    positions: np.ndarray  # (n, 2) meters
    gateway_id: str = "gw-1"

    def __post_init__(self):
        if len(self.timestamps) != len(self.positions):
            raise ValueError("timestamps and positions differ in length")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.timestamps)

    def position_at(self, ts: int) -> Point:
        i = int(np.searchsorted(self.timestamps, ts, side="right")) - 1
        x, y = self.positions[max(i, 0)]
        return Point(float(x), float(y))


def mean_rssi(d, p: PathLossParams):
    """Noise-free received power at distance ``d`` (clamped to 0.1 m)."""
    return p.rssi_at_1m - 10.0 * p.exponent * np.log10(np.maximum(d, MIN_DISTANCE))


def synth_rssi(device: Point, beacon: Point, m: RadioModel, draw: np.random.Generator,
               walls: int = 0) -> int | None:
    """One integer-dBm reading, or ``None`` below the sensitivity floor."""
    level = mean_rssi(device.distance(beacon), m.path_loss) - walls * m.wall_loss_db
    if m.shadowing_sigma > 0:
        level += draw.normal(0.0, m.shadowing_sigma)
    v = min(int(np.rint(level)), RSSI_MAX)
    return None if v < m.sensitivity_floor else v


def _synth_matrix(pts: np.ndarray, beacons: np.ndarray, m: RadioModel, rng: np.random.Generator,
                  walls: np.ndarray | None = None) -> np.ndarray:
    d = np.hypot(pts[:, None, 0] - beacons[None, :, 0], pts[:, None, 1] - beacons[None, :, 1])
    level = mean_rssi(d, m.path_loss)
    if walls is not None:
        level = level - walls * m.wall_loss_db
    # always draw so the stream layout does not depend on sigma
    level = level + m.shadowing_sigma * rng.standard_normal(level.shape)
    v = np.minimum(np.rint(level), RSSI_MAX)
    return np.where(v < m.sensitivity_floor, np.nan, v)


def wall_crossings(plan: FloorPlan, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Number of distinct wall positions crossed by each segment a[i] -> b[j].

    Returns an (len(a), len(b)) array. Crossings of shared walls found through
    both neighbouring rooms are counted once.
    """
    a = np.asarray(a, float).reshape(-1, 2)
    b = np.asarray(b, float).reshape(-1, 2)
    ts: list[np.ndarray] = []
    px, py = a[:, None, 0], a[:, None, 1]
    dx, dy = b[None, :, 0] - px, b[None, :, 1] - py
    for e0, e1 in iter_edges(plan):
        ex, ey = e1.x - e0.x, e1.y - e0.y
        den = dx * ey - dy * ex
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((e0.x - px) * ey - (e0.y - py) * ex) / den
            u = ((e0.x - px) * dy - (e0.y - py) * dx) / den
        hit = (den != 0) & (t > 0) & (t < 1) & (u >= 0) & (u <= 1)
        ts.append(np.where(hit, np.round(t, 9), np.nan))
    stack = np.sort(np.stack(ts, axis=-1), axis=-1)
    valid = ~np.isnan(stack)
    distinct = valid.copy()
    distinct[..., 1:] &= stack[..., 1:] != stack[..., :-1]
    return distinct.sum(axis=-1)


def sample_in_room(plan: FloorPlan, label: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform points inside a room (rejection sampling in its bounding box)."""
    poly = plan.room(label).polygon
    xs, ys = [p.x for p in poly], [p.y for p in poly]
    out = np.empty((0, 2))
    while len(out) < n:
        cand = np.column_stack([rng.uniform(min(xs), max(xs), 2 * n), rng.uniform(min(ys), max(ys), 2 * n)])
        out = np.vstack([out, cand[points_in_polygon(cand, poly)]])
    return out[:n]


def collect_survey(plan: FloorPlan, samples_per_room: int, m: RadioModel) -> RawDataset:
    """Balanced fingerprint survey: uniform positions per room, one reading per fixed beacon.

    Room ``i`` (plan order) draws from stream ``(seed, "survey", i)``.
    """
    if samples_per_room < 1:
        raise ValueError("samples_per_room must be >= 1")
    beacons = plan.beacons
    bpos = np.array([[p.x, p.y] for p in beacons.values()])
    blocks, rooms = [], []
    for i, room in enumerate(plan.rooms):
        rng = make_rng(m.seed, "survey", i)
        pts = sample_in_room(plan, room.label, samples_per_room, rng)
        walls = wall_crossings(plan, pts, bpos) if m.wall_loss_db else None
        blocks.append(_synth_matrix(pts, bpos, m, rng, walls))
        rooms += [room.label] * samples_per_room
    return RawDataset(tuple(beacons), np.vstack(blocks), np.array(rooms, dtype=object))


def generate_walk(plan: FloorPlan, duration: float, step: float = 1.0, seed: int = 0,
                  gateway_id: str = "gw-1", start_ms: int = DEFAULT_START_MS) -> Trajectory:
    """Random-waypoint walk sampled at 1 Hz, moving ``step`` meters per second.

    Targets are uniform points in uniformly chosen rooms. A move that would
    leave every room is abandoned in favour of a fresh target.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if not step > 0:
        raise ValueError("step must be positive")
    rng = make_rng(seed, "walk")
    labels = plan.room_labels
    n = int(math.ceil(duration))

    def target():
        return sample_in_room(plan, labels[rng.integers(len(labels))], 1, rng)[0]

    pos, goal = target(), target()
    out = np.empty((n, 2))
    for i in range(n):
        out[i] = pos
        delta = goal - pos
        dist = float(np.hypot(*delta))
        if dist <= step:
            pos, goal = goal, target()
            continue
        nxt = pos + delta * (step / dist)
        if point_labels(nxt[None, :], plan)[0] is None:
            goal = target()
        else:
            pos = nxt
    ts = start_ms + 1000 * np.arange(n, dtype=np.int64)
    return Trajectory(ts, out, gateway_id)


@dataclass(frozen=True)
class AssetPlacement:
    """Mobile-beacon label -> (position, room)."""

    assets: Mapping[str, tuple[Point, str]]
    plan: FloorPlan = field(repr=False)

    def __post_init__(self):
        for lab, (p, room) in self.assets.items():
            if not self.plan.room(room).contains(p):
                raise ValueError(f"asset {lab} at ({p.x}, {p.y}) is not inside room {room}")


def _core(plan: FloorPlan, label: str, clearance: float) -> tuple[float, float, float, float] | None:
    """Bounding box of a room shrunk by ``clearance``; ``None`` when nothing remains.

    Only exact for rectangular rooms; other shapes are rejected.
    """
    poly = plan.room(label).polygon
    if len(poly) != 4:
        return None
    xs, ys = [p.x for p in poly], [p.y for p in poly]
    x0, x1, y0, y1 = min(xs) + clearance, max(xs) - clearance, min(ys) + clearance, max(ys) - clearance
    return (x0, x1, y0, y1) if x0 <= x1 and y0 <= y1 else None


def place_assets_on_walk(plan: FloorPlan, traj: Trajectory, n: int, scan_interval: float = 60.0,
                         clearance: float = 2.1, reach: float = 1.9) -> AssetPlacement:
    """Put ``n`` assets in distinct rooms next to where the walk scans.

    Each asset sits at least ``clearance`` meters from its room's walls and
    within ``reach`` meters of one scan position, so the gateway hears it
    from inside the right room. Labels are ``asset-01``, ``asset-02``, ...
    Raises ``ValueError`` if the walk does not pass near ``n`` such rooms.
    """
    step_ms = int(round(scan_interval * 1000))
    t0 = int(traj.timestamps[0])
    found: dict[str, Point] = {}
    for ts in range(t0, int(traj.timestamps[-1]) + 1, step_ms):
        here = traj.position_at(ts)
        room = point_labels(np.array([[here.x, here.y]]), plan)[0]
        core = None if room is None or room in found else _core(plan, room, clearance)
        if core is None:
            continue
        p = Point(min(max(here.x, core[0]), core[1]), min(max(here.y, core[2]), core[3]))
        if p.distance(here) <= reach:
            found[room] = p
        if len(found) == n:
            break
    if len(found) < n:
        raise ValueError(f"walk passes near only {len(found)} rooms with a {clearance} m core, {n} requested")
    return AssetPlacement({f"asset-{i:02d}": (p, room) for i, (room, p) in enumerate(found.items(), start=1)}, plan)


def build_inventory(plan: FloorPlan, asset_labels: Sequence[str], gateways: Mapping[str, str] | None = None) -> Inventory:
    """Deterministic MAC assignment: fixed beacons ``C0:00:00:00:xx:xx``, assets ``C1:...``."""
    beacons = {}
    for i, (lab, room) in enumerate(plan.beacon_rooms.items(), start=1):
        beacons[_mac(0xC0, i)] = ("fixed", lab, room)
    for i, lab in enumerate(sorted(asset_labels), start=1):
        beacons[_mac(0xC1, i)] = ("mobile", lab, "")
    return Inventory(beacons, dict(gateways or {"gw-1": "gateway 1"}), plan.room_labels)


def _mac(prefix: int, n: int) -> str:
    return f"{prefix:02X}:00:00:00:{(n >> 8) & 0xFF:02X}:{n & 0xFF:02X}"


def emit_scan_events(traj: Trajectory, plan: FloorPlan, assets: AssetPlacement, inventory: Inventory,
                     m: RadioModel, scan_interval: float = 60.0) -> list[BleScanEvent]:
    """Scan every ``scan_interval`` seconds along the trajectory.

    Each scan yields one event per fixed beacon and asset above the sensitivity
    floor. Scan ``j`` draws from stream ``(seed, "scan", j)``.
    """
    if scan_interval < 1:
        raise ValueError("scan_interval must be >= 1 s")
    step_ms = int(round(scan_interval * 1000))
    macs = {(kind, lab): mac for mac, (kind, lab, _) in inventory.beacons.items()}
    sources = [(macs[("fixed", b)], p) for b, p in plan.beacons.items()]
    sources += [(macs[("mobile", a)], p) for a, (p, _) in sorted(assets.assets.items())]
    spos = np.array([[p.x, p.y] for _, p in sources]).reshape(-1, 2)
    events = []
    t0 = int(traj.timestamps[0])
    for j, ts in enumerate(range(t0, int(traj.timestamps[-1]) + 1, step_ms)):
        here = traj.position_at(ts)
        pt = np.array([[here.x, here.y]])
        walls = wall_crossings(plan, pt, spos) if m.wall_loss_db else None
        rssi = _synth_matrix(pt, spos, m, make_rng(m.seed, "scan", j), walls)[0]
        for (mac, _), v in zip(sources, rssi):
            if not np.isnan(v):
                events.append(BleScanEvent(traj.gateway_id, mac, int(v), ts))
    return events


def write_trajectory(traj: Trajectory, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("timestamp,x,y,gateway_id\n")
        for ts, (x, y) in zip(traj.timestamps, traj.positions):
            fh.write(f"{int(ts)},{x!r},{y!r},{traj.gateway_id}\n")


def write_radio_sidecar(m: RadioModel, path: str | Path, **extra) -> None:
    doc = {"radio_model": m.as_dict(), **extra}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


__all__ = [
    "RadioModel", "Trajectory", "AssetPlacement", "synth_rssi", "collect_survey", "generate_walk",
    "emit_scan_events", "build_inventory", "wall_crossings", "write_events", "write_trajectory",
]
