"""Walk a gateway through the office, replay its scans and query an asset."""

from roomtrack import dataset, knn, simulator, stream
from roomtrack.geometry import bundled_plan

plan = bundled_plan("office")
quiet = simulator.RadioModel(shadowing_sigma=0.0, sensitivity_floor=-110)
model = knn.fit(dataset.impute(simulator.collect_survey(plan, 500, quiet)))

traj = simulator.generate_walk(plan, 600, seed=0)
assets = simulator.place_assets_on_walk(plan, traj, 5, scan_interval=10)
inv = simulator.build_inventory(plan, list(assets.assets))
events = simulator.emit_scan_events(traj, plan, assets, inv, quiet, scan_interval=10)
result = stream.replay((e.to_json() for e in events), inv, model, window=10, threshold=-70)
print("counters:", result.counters.as_dict())

now = int(traj.timestamps[-1])
for label, (_, room) in sorted(assets.assets.items()):
    q = stream.query_location(result.store, label, now)
    print(f"{label}: stored {q.location.room} (true {room}), {q.staleness_s:.0f} s old")
