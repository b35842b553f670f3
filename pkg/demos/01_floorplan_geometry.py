"""Load the bundled office, overlap three range circles and see which rooms they cover."""

from roomtrack.geometry import Circle, bundled_plan, find_intersection_regions, region_room_coverage

plan = bundled_plan("office")
print(f"{plan.name}: {len(plan.rooms)} rooms, {len(plan.beacons)} fixed beacons")

circles = [Circle(plan.beacons[b], r, b) for b, r in (("A", 3.0), ("D", 4.5), ("E1", 2.5))]
for region in find_intersection_regions(circles, 0.05, plan.bounds):
    cover = ", ".join(f"{room} {area:.2f} m2" for room, area in region_room_coverage(region, plan).items())
    print(f"{sorted(region.members)}  area {region.area:.2f} m2  radii sum {region.radii_sum:.1f}  -> {cover}")
