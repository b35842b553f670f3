"""Resolve four hand-made scans, one per decision case."""

from roomtrack.geometry import bundled_plan
from roomtrack.multilat import MultilatLocalizer

loc = MultilatLocalizer(bundled_plan("office"))
scans = [
    {"E1": -65, "A": -75, "D": -82, "E3": -80},
    {"A": -75, "D": -83, "E1": -73, "E3": -80},
    {"A": -75, "D": -83, "E1": -73, "C": -76, "J": -83, "E3": -73, "G": -75, "L": -84, "E6": -73},
    {"A": -72, "D": -75},
]
for scan in scans:
    rp = loc.predict(scan)
    used = sorted(rp.winning_set) if rp.winning_set else []
    print(f"room {rp.room:<2} via {rp.case_used:<16} set {used}")
