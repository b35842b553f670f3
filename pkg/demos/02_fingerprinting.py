"""Survey the office, impute gaps, split per room and score kNN."""

from roomtrack import dataset, knn, simulator
from roomtrack.geometry import bundled_plan

plan = bundled_plan("office")
raw = simulator.collect_survey(plan, 200, simulator.RadioModel(seed=1))
dense = dataset.impute(raw)
prov = dense.provenance
print(f"{len(dense)} rows; observed {(prov == dataset.OBSERVED).mean():.1%}, "
      f"room mean {(prov == dataset.IMPUTED_MEAN).mean():.1%}, sentinel {(prov == dataset.IMPUTED_SENTINEL).mean():.1%}")

train, test = dataset.split(dense, dataset.SplitConfig(0.2, seed=0))
report = knn.accuracy(knn.fit(train, k=7), test)
print(f"kNN (k=7): {report.correct}/{report.total} = {report.accuracy:.1%}")
