"""Compare both localizers over sampled beacon subsets and list the most useful beacons."""

from roomtrack import dataset, evalkit, simulator
from roomtrack.geometry import bundled_plan

plan = bundled_plan("office")
dense = dataset.impute(simulator.collect_survey(plan, 100, simulator.RadioModel(seed=1)))
cv = evalkit.CvConfig(repeats=3)
limits = evalkit.SweepLimits(max_size=8, per_size=5)
k = evalkit.group_stats(evalkit.sweep_subsets(dense, evalkit.KnnMethod(), cv, limits))
m_results = evalkit.sweep_subsets(dense, evalkit.MultilatMethod(plan), cv, limits)
m = evalkit.group_stats(m_results)
print("size  knn median  multilat median")
for a, b in zip(k, m):
    print(f"{a.size:>4}  {a.median:>10.1%}  {b.median:>15.1%}")
top = evalkit.beacon_frequency(m_results, plan)[:5]
print("multilateration favourites:", ", ".join(f"{f.label} ({f.count})" for f in top))
