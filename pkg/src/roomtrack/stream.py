"""Gateway scan-event pipeline: parse, enrich, window, localize, store.

Wire format: UTF-8 JSON lines with exactly the keys ``client_id``,
``mac_address``, ``rssi`` and ``timestamp`` (epoch milliseconds).
"""

from __future__ import annotations

import csv
import json
import re
import statistics
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .dataset import RSSI_MAX, RSSI_MIN

FIELDS = ("client_id", "mac_address", "rssi", "timestamp")
FIXED, MOBILE = "fixed", "mobile"
DEFAULT_ASSET_THRESHOLD = -80.0

_MAC_RE = re.compile(r"^[0-9A-Fa-f]{2}([:-])(?:[0-9A-Fa-f]{2}\1){4}[0-9A-Fa-f]{2}$")
_CANON_MAC = re.compile(r"^(?:[0-9A-F]{2}:){5}[0-9A-F]{2}$")


class EventError(ValueError):
    """A record that cannot be turned into a valid scan event."""


class NoFixError(ValueError):
    """A snapshot without any fixed-beacon observation."""


class UnknownAssetError(KeyError):
    pass


def canonical_mac(mac: str) -> str:
    if not isinstance(mac, str) or not _MAC_RE.match(mac):
        raise EventError(f"invalid MAC address {mac!r}")
    return mac.replace("-", ":").upper()


@dataclass(frozen=True)
class BleScanEvent:
    client_id: str
    mac_address: str
    rssi: int
    timestamp: int

    def __post_init__(self):
        if not _CANON_MAC.match(self.mac_address):
            raise EventError(f"non-canonical MAC {self.mac_address!r}")
        if not RSSI_MIN <= self.rssi <= RSSI_MAX:
            raise EventError(f"rssi {self.rssi} outside [{RSSI_MIN}, {RSSI_MAX}]")

    def to_json(self) -> str:
        return json.dumps({k: getattr(self, k) for k in FIELDS}, separators=(",", ":"))


def parse_event(line: str) -> BleScanEvent:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventError(f"malformed record: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != set(FIELDS):
        raise EventError(f"record must have exactly the fields {FIELDS}")
    cid, rssi, ts = doc["client_id"], doc["rssi"], doc["timestamp"]
    if not isinstance(cid, str) or not cid:
        raise EventError("client_id must be a non-empty string")
    for name, v in (("rssi", rssi), ("timestamp", ts)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise EventError(f"{name} must be an integer")
    if not RSSI_MIN <= rssi <= RSSI_MAX:
        raise EventError(f"rssi {rssi} outside [{RSSI_MIN}, {RSSI_MAX}]")
    return BleScanEvent(cid, canonical_mac(doc["mac_address"]), rssi, ts)


def write_events(events: Iterable[BleScanEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in events:
            fh.write(e.to_json() + "\n")


# --- inventory --------------------------------------------------------------

@dataclass(frozen=True)
class Inventory:
    beacons: Mapping[str, tuple[str, str, str]]  # mac -> (type, label, fixed room or "")
    gateways: Mapping[str, str] = field(default_factory=dict)
    rooms: Sequence[str] = ()

    def __post_init__(self):
        seen: set[tuple[str, str]] = set()
        for mac, (kind, label, room) in self.beacons.items():
            if not _CANON_MAC.match(mac):
                raise ValueError(f"non-canonical MAC {mac!r} in inventory")
            if kind not in (FIXED, MOBILE):
                raise ValueError(f"beacon {mac}: type must be fixed or mobile")
            if (kind, label) in seen:
                raise ValueError(f"duplicate {kind} label {label!r}")
            seen.add((kind, label))
            if kind == FIXED and self.rooms and room not in self.rooms:
                raise ValueError(f"fixed beacon {label} references unknown room {room!r}")

    @property
    def assets(self) -> tuple[str, ...]:
        return tuple(sorted(lab for kind, lab, _ in self.beacons.values() if kind == MOBILE))


def load_inventory(path: str | Path, gateways_path: str | Path | None = None,
                   rooms: Sequence[str] | None = None) -> Inventory:
    """Read ``mac_address,type,label,room`` rows (and optional ``client_id,name`` rows)."""
    beacons = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            mac = canonical_mac(row["mac_address"].strip())
            beacons[mac] = (row["type"].strip(), row["label"].strip(), (row.get("room") or "").strip())
    gateways = {}
    if gateways_path is not None:
        with open(gateways_path, newline="", encoding="utf-8") as fh:
            gateways = {r["client_id"].strip(): r["name"].strip() for r in csv.DictReader(fh)}
    if rooms is None:
        rooms = sorted({room for kind, _, room in beacons.values() if kind == FIXED})
    return Inventory(beacons, gateways, tuple(rooms))


def write_inventory(inv: Inventory, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mac_address", "type", "label", "room"])
        for mac, (kind, label, room) in sorted(inv.beacons.items()):
            w.writerow([mac, kind, label, room])


@dataclass(frozen=True)
class EnrichedEvent:
    event: BleScanEvent
    beacon_type: str
    label: str


@dataclass
class Counters:
    parsed: int = 0
    enriched: int = 0
    filtered: int = 0
    malformed: int = 0
    late: int = 0
    no_fix: int = 0
    windows: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


def enrich(e: BleScanEvent, inv: Inventory, counters: Counters | None = None) -> EnrichedEvent | None:
    """Join with the inventory; ``None`` (and a drop count) for unknown beacons."""
    entry = inv.beacons.get(e.mac_address)
    if entry is None:
        if counters is not None:
            counters.filtered += 1
        return None
    if counters is not None:
        counters.enriched += 1
    return EnrichedEvent(e, entry[0], entry[1])


# --- windowing --------------------------------------------------------------

@dataclass(frozen=True)
class GatewayScanSnapshot:
    client_id: str
    window_index: int
    window_end: int  # epoch ms, exclusive end of the window
    fixed: dict[str, float]  # label -> median rssi
    mobile: dict[str, float]


class WindowAggregator:
    """Tumbling per-gateway windows with one window of allowed lateness.

    A window closes once an event two or more windows newer arrives from the
    same gateway; events addressed to a closed window are dropped and counted.
    """

    def __init__(self, window_s: float, counters: Counters | None = None):
        if window_s < 1:
            raise ValueError("window must be >= 1 s")
        self.window_ms = int(round(window_s * 1000))
        self.counters = counters if counters is not None else Counters()
        self._open: dict[tuple[str, int], dict[tuple[str, str], list[int]]] = {}
        self._newest: dict[str, int] = {}

    def push(self, ev: EnrichedEvent) -> list[GatewayScanSnapshot]:
        cid = ev.event.client_id
        idx = ev.event.timestamp // self.window_ms
        newest = max(self._newest.get(cid, idx), idx)
        self._newest[cid] = newest
        if idx < newest - 1:
            self.counters.late += 1
            return []
        self._open.setdefault((cid, idx), {}).setdefault((ev.beacon_type, ev.label), []).append(ev.event.rssi)
        return self._close(lambda key: key[0] == cid and key[1] < newest - 1)

    def flush(self) -> list[GatewayScanSnapshot]:
        return self._close(lambda key: True)

    def _close(self, pred) -> list[GatewayScanSnapshot]:
        done = sorted((k for k in self._open if pred(k)), key=lambda k: (k[1], k[0]))
        out = []
        for cid, idx in done:
            obs = self._open.pop((cid, idx))
            fixed = {lab: statistics.median(v) for (kind, lab), v in sorted(obs.items()) if kind == FIXED}
            mobile = {lab: statistics.median(v) for (kind, lab), v in sorted(obs.items()) if kind == MOBILE}
            out.append(GatewayScanSnapshot(cid, idx, (idx + 1) * self.window_ms, fixed, mobile))
            self.counters.windows += 1
        return out


def window_aggregate(events: Iterable[EnrichedEvent], window: float,
                     counters: Counters | None = None) -> list[GatewayScanSnapshot]:
    agg = WindowAggregator(window, counters)
    out = []
    for ev in events:
        out.extend(agg.push(ev))
    out.extend(agg.flush())
    return out


# --- localization and the store ----------------------------------------------

def locate_gateway(snap: GatewayScanSnapshot, localizer) -> str:
    """Room of the scanning gateway.

    ``localizer`` is a fitted :class:`~roomtrack.knn.KnnModel` (absent beacons
    become the -200 sentinel) or a :class:`~roomtrack.multilat.MultilatLocalizer`
    (absent beacons are left out).
    """
    from . import knn
    from .multilat import MultilatLocalizer

    if isinstance(localizer, MultilatLocalizer):
        scan = {b: v for b, v in snap.fixed.items() if b in localizer.plan.beacons}
        if not scan:
            raise NoFixError(f"{snap.client_id}@{snap.window_end}: no fixed beacon")
        return localizer.predict(scan).room
    if isinstance(localizer, knn.KnnModel):
        if not any(b in localizer.columns for b in snap.fixed):
            raise NoFixError(f"{snap.client_id}@{snap.window_end}: no fixed beacon")
        return knn.predict(localizer, knn.vector_from_scan(localizer, snap.fixed))
    raise TypeError(f"unsupported localizer {type(localizer).__name__}")


@dataclass(frozen=True)
class AssetLocation:
    asset: str
    room: str
    last_seen: int
    observed_by: str
    rssi_at_observation: float


class LocationStore:
    """Freshest known room per asset; single writer, readers get snapshots."""

    def __init__(self, assets: Iterable[str] = ()):
        self._lock = threading.Lock()
        self._records: dict[str, AssetLocation] = {}
        self.assets = frozenset(assets)

    def update(self, loc: AssetLocation) -> bool:
        with self._lock:
            cur = self._records.get(loc.asset)
            if cur is not None and loc.last_seen < cur.last_seen:
                return False
            self._records[loc.asset] = loc
            return True

    def get(self, asset: str) -> AssetLocation | None:
        with self._lock:
            return self._records.get(asset)

    def records(self) -> list[AssetLocation]:
        with self._lock:
            return [self._records[a] for a in sorted(self._records)]

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["asset", "room", "last_seen", "observed_by", "rssi"])
            for r in self.records():
                w.writerow([r.asset, r.room, r.last_seen, r.observed_by, _num(r.rssi_at_observation)])

    @classmethod
    def from_csv(cls, path: str | Path, assets: Iterable[str] = ()) -> "LocationStore":
        store = cls(assets)
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                store.update(AssetLocation(row["asset"], row["room"], int(row["last_seen"]),
                                           row["observed_by"], float(row["rssi"])))
        return store


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def assign_assets(snap: GatewayScanSnapshot, gateway_room: str, proximity_threshold: float,
                  store: LocationStore) -> list[AssetLocation]:
    """Place every mobile beacon heard at or above the threshold in the gateway's room."""
    applied = []
    for label, rssi in sorted(snap.mobile.items()):
        if rssi < proximity_threshold:
            continue
        loc = AssetLocation(label, gateway_room, snap.window_end, snap.client_id, rssi)
        if store.update(loc):
            applied.append(loc)
    return applied


@dataclass(frozen=True)
class LocationQuery:
    asset: str
    status: str  # "seen" | "never_seen"
    location: AssetLocation | None
    staleness_s: float | None


def query_location(store: LocationStore, asset: str, now: int) -> LocationQuery:
    if store.assets and asset not in store.assets:
        raise UnknownAssetError(asset)
    loc = store.get(asset)
    if loc is None:
        if not store.assets:
            raise UnknownAssetError(asset)
        return LocationQuery(asset, "never_seen", None, None)
    return LocationQuery(asset, "seen", loc, (now - loc.last_seen) / 1000.0)


# --- replay -----------------------------------------------------------------

@dataclass(frozen=True)
class GatewayFix:
    client_id: str
    window_end: int
    room: str


@dataclass
class ReplayResult:
    store: LocationStore
    counters: Counters
    fixes: list[GatewayFix]


def replay(lines: Iterable[str], inventory: Inventory, localizer, window: float = 10.0,
           threshold: float = DEFAULT_ASSET_THRESHOLD) -> ReplayResult:
    """Run the whole pipeline over an event file's lines, in file order."""
    counters = Counters()
    store = LocationStore(inventory.assets)
    agg = WindowAggregator(window, counters)
    fixes: list[GatewayFix] = []

    def handle(snaps: Sequence[GatewayScanSnapshot]) -> None:
        for snap in snaps:
            try:
                room = locate_gateway(snap, localizer)
            except NoFixError:
                counters.no_fix += 1
                continue
            fixes.append(GatewayFix(snap.client_id, snap.window_end, room))
            assign_assets(snap, room, threshold, store)

    for line in lines:
        if not line.strip():
            continue
        counters.parsed += 1
        try:
            ev = parse_event(line)
        except EventError:
            counters.malformed += 1
            continue
        enriched = enrich(ev, inventory, counters)
        if enriched is not None:
            handle(agg.push(enriched))
    handle(agg.flush())
    return ReplayResult(store, counters, fixes)


def iter_lines(path: str | Path) -> Iterator[str]:
    with open(path, encoding="utf-8") as fh:
        yield from fh
