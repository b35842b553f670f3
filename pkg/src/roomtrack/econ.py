"""Cost of ownership for a beacon deployment.

All money is held in integer cents. Labour prices are derived from minutes
and hourly rates (15 min at $30/h -> $7.50), never entered directly.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Mapping

import yaml


def _cents(amount) -> int:
    """Dollar amount (int/float/str/Fraction) to whole cents, half-up."""
    if isinstance(amount, Fraction):
        q = amount * 100
        return int(math.floor(q + Fraction(1, 2)))
    return int((Decimal(str(amount)) * 100).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def fmt_money(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    d, c = divmod(abs(cents), 100)
    return f"{sign}${d:,}.{c:02d}"


@dataclass(frozen=True)
class EconParams:
    rooms: int = 500
    install_minutes_per_room: float = 15
    fingerprint_minutes_per_room: float = 15
    install_hourly_rate: float = 30
    fingerprint_hourly_rate: float = 30
    beacon_unit_price: float = 5
    battery_unit_price: float = 2
    battery_lifetime_years: float = 1
    beacon_room_factor: float = 0.4
    requires_fingerprinting: bool = True

    def __post_init__(self):
        for name in ("rooms", "install_minutes_per_room", "fingerprint_minutes_per_room", "install_hourly_rate",
                     "fingerprint_hourly_rate", "beacon_unit_price", "battery_unit_price"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.battery_lifetime_years > 0:
            raise ValueError("battery_lifetime_years must be positive")
        if not 0 < self.beacon_room_factor <= 2:
            raise ValueError("beacon_room_factor must lie in (0, 2]")

    @property
    def beacons(self) -> int:
        return math.ceil(Fraction(str(self.beacon_room_factor)) * self.rooms)


@dataclass(frozen=True)
class LineItem:
    description: str
    units: int
    unit_cents: int

    @property
    def total_cents(self) -> int:
        return self.units * self.unit_cents


@dataclass(frozen=True)
class CostBreakdown:
    name: str
    setup: tuple[LineItem, ...]
    recurring: tuple[LineItem, ...]  # per battery cycle
    battery_lifetime_years: float = 1

    @property
    def setup_total(self) -> int:
        return sum(i.total_cents for i in self.setup)

    @property
    def recurring_yearly_total(self) -> int:
        cycle = sum(i.total_cents for i in self.recurring)
        return _cents(Fraction(cycle, 100) / Fraction(str(self.battery_lifetime_years)))


def _labour_cents(minutes, hourly_rate) -> int:
    return _cents(Fraction(str(minutes)) / 60 * Fraction(str(hourly_rate)))


def cost_model(p: EconParams, name: str = "") -> CostBreakdown:
    n = p.beacons
    install = _labour_cents(p.install_minutes_per_room, p.install_hourly_rate)
    fp_units = p.rooms if p.requires_fingerprinting else 0
    setup = (
        LineItem("BLE Beacons", n, _cents(p.beacon_unit_price)),
        LineItem("Installation of BLE Beacons", n, install),
        LineItem("kNN Fingerprinting", fp_units,
                 _labour_cents(p.fingerprint_minutes_per_room, p.fingerprint_hourly_rate)),
    )
    recurring = (
        LineItem("Coin cell battery", n, _cents(p.battery_unit_price)),
        LineItem("Battery replacement work", n, install),
    )
    return CostBreakdown(name, setup, recurring, p.battery_lifetime_years)


def accumulate(b: CostBreakdown, years: int) -> list[int]:
    """Cumulative cost after years 1..``years`` (cents)."""
    if years < 1:
        raise ValueError("years must be >= 1")
    return [b.setup_total + t * b.recurring_yearly_total for t in range(1, years + 1)]


@dataclass(frozen=True)
class Comparison:
    a: CostBreakdown
    b: CostBreakdown
    horizon: int
    cumulative_a: list[int]
    cumulative_b: list[int]
    relative_to_b: list[float]  # (b - a) / b per year
    relative_to_a: list[float]  # (b - a) / a per year
    breakeven_year: int | None
    breakeven_formula: int | None
    setup_saving_of_b: float  # (setup_a - setup_b) / setup_a
    reference_saving: float | None = None

    @property
    def reference_matched(self) -> bool | None:
        if self.reference_saving is None:
            return None
        tol = 0.005
        return (abs(self.relative_to_b[-1] - self.reference_saving) <= tol
                or abs(self.relative_to_a[-1] - self.reference_saving) <= tol)


def compare(a: CostBreakdown, b: CostBreakdown, horizon: int = 5,
            reference_saving: float | None = None) -> Comparison:
    """Compare ``a`` against ``b`` over ``horizon`` years.

    ``reference_saving`` is an externally quoted horizon saving of ``a`` over
    ``b`` to be checked against both conventions.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    ca, cb = accumulate(a, horizon), accumulate(b, horizon)
    rel_b = [(y - x) / y if y else 0.0 for x, y in zip(ca, cb)]
    rel_a = [(y - x) / x if x else 0.0 for x, y in zip(ca, cb)]
    breakeven = next((t for t, (x, y) in enumerate(zip(ca, cb), start=1) if x <= y), None)
    formula = None
    extra_setup = a.setup_total - b.setup_total
    saving = b.recurring_yearly_total - a.recurring_yearly_total
    if saving > 0:
        formula = max(1, math.ceil(Fraction(extra_setup, saving)))
    setup_rel = (a.setup_total - b.setup_total) / a.setup_total if a.setup_total else 0.0
    return Comparison(a, b, horizon, ca, cb, rel_b, rel_a, breakeven, formula, setup_rel, reference_saving)


# --- parameter files and reports --------------------------------------------

_KEYS = {
    "rooms": "rooms",
    "installation_time_per_room": "install_minutes_per_room",
    "fingerprinting_per_room": "fingerprint_minutes_per_room",
    "installation_hourly_rate": "install_hourly_rate",
    "fingerprinting_hourly_rate": "fingerprint_hourly_rate",
    "beacon_unit_price": "beacon_unit_price",
    "battery_unit_price": "battery_unit_price",
    "battery_lifetime": "battery_lifetime_years",
}
_EXTRA = ("beacon_room_factor_knn", "beacon_room_factor_multi", "reference_saving")
_UNIT = re.compile(r"^\s*\$?\s*([-+0-9.eE]+)\s*(min|mins|minutes|years?|h|/h)?\s*$")


def _number(key: str, v) -> float:
    if isinstance(v, bool):
        raise ValueError(f"{key}: expected a number")
    if isinstance(v, (int, float)):
        return v
    m = _UNIT.match(str(v))
    if not m:
        raise ValueError(f"{key}: cannot parse {v!r}")
    x = float(m.group(1))
    return int(x) if x.is_integer() else x


@dataclass(frozen=True)
class EconScenario:
    fingerprinting: EconParams
    multilateration: EconParams
    reference_saving: float | None = None


def scenario_from_dict(doc: Mapping) -> EconScenario:
    """Build both deployments from a parameter table.

    Keys are matched case-insensitively with spaces and hyphens treated as
    underscores, so "Beacon unit price" and ``beacon-unit-price`` are equal.
    """
    norm = {re.sub(r"[\s\-]+", "_", str(k).strip().lower()): v for k, v in doc.items()}
    unknown = set(norm) - set(_KEYS) - set(_EXTRA)
    if unknown:
        raise ValueError(f"unknown econ parameter(s): {sorted(unknown)}")
    vals = {k: _number(k, v) for k, v in norm.items() if v is not None}
    base = EconParams(**{_KEYS[k]: v for k, v in vals.items() if k in _KEYS})
    fp = replace(base, beacon_room_factor=vals.get("beacon_room_factor_knn", 0.4), requires_fingerprinting=True)
    ml = replace(base, beacon_room_factor=vals.get("beacon_room_factor_multi", 0.8), requires_fingerprinting=False)
    return EconScenario(fp, ml, vals.get("reference_saving"))


def load_scenario(path: str | Path) -> EconScenario:
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(doc, Mapping):
        raise ValueError(f"{path}: expected a mapping of parameters")
    return scenario_from_dict(doc)


def bundled_scenario() -> EconScenario:
    return load_scenario(Path(__file__).parent / "data" / "reference.econ")


def breakdown_table(b: CostBreakdown) -> str:
    rows = [(i.description, str(i.units), fmt_money(i.unit_cents), fmt_money(i.total_cents)) for i in b.setup]
    rows.append(("Setup Costs", "", "", fmt_money(b.setup_total)))
    rows += [(i.description, str(i.units), fmt_money(i.unit_cents), fmt_money(i.total_cents)) for i in b.recurring]
    rows.append(("Recurring Costs (Yearly)", "", "", fmt_money(b.recurring_yearly_total)))
    head = ("Description", "Units", "Price/Unit", "Total")
    widths = [max(len(r[i]) for r in rows + [head]) for i in range(4)]
    line = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([b.name, line(head)] + [line(r) for r in rows])


def report_text(c: Comparison) -> str:
    out = [breakdown_table(c.a), "", breakdown_table(c.b), "",
           f"Accumulated cost of ownership ({c.a.name} vs {c.b.name})"]
    for t, (x, y) in enumerate(zip(c.cumulative_a, c.cumulative_b), start=1):
        out.append(f"  year {t}: {fmt_money(x)} vs {fmt_money(y)}  "
                   f"saving {c.relative_to_b[t - 1]:.1%} of {c.b.name} / {c.relative_to_a[t - 1]:.1%} of {c.a.name}")
    out.append(f"Setup only: {c.b.name} is {c.setup_saving_of_b:.1%} cheaper")
    out.append(f"Breakeven year: {c.breakeven_year if c.breakeven_year else 'not within horizon'}")
    if c.reference_saving is not None:
        verdict = "matches" if c.reference_matched else "is NOT reproduced by either convention"
        out.append(f"Reference {c.horizon}-year saving {c.reference_saving:.1%} {verdict} "
                   f"({c.relative_to_b[-1]:.1%} / {c.relative_to_a[-1]:.1%})")
    return "\n".join(out) + "\n"


def report_csv(c: Comparison) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["approach", "section", "description", "units", "price_per_unit", "total"])
    for b in (c.a, c.b):
        for section, items in (("setup", b.setup), ("recurring", b.recurring)):
            for i in items:
                w.writerow([b.name, section, i.description, i.units, f"{i.unit_cents / 100:.2f}",
                            f"{i.total_cents / 100:.2f}"])
        w.writerow([b.name, "setup", "Setup Costs", "", "", f"{b.setup_total / 100:.2f}"])
        w.writerow([b.name, "recurring", "Recurring Costs (Yearly)", "", "", f"{b.recurring_yearly_total / 100:.2f}"])
    w.writerow([])
    w.writerow(["year", f"cumulative_{c.a.name}", f"cumulative_{c.b.name}", "saving_rel_b", "saving_rel_a"])
    for t in range(c.horizon):
        w.writerow([t + 1, f"{c.cumulative_a[t] / 100:.2f}", f"{c.cumulative_b[t] / 100:.2f}",
                    f"{c.relative_to_b[t]:.4f}", f"{c.relative_to_a[t]:.4f}"])
    return buf.getvalue()
