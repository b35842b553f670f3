"""Cost comparison of a fingerprinting and a multilateration deployment."""

from roomtrack import econ

s = econ.bundled_scenario()
c = econ.compare(econ.cost_model(s.fingerprinting, "kNN"), econ.cost_model(s.multilateration, "Multilateration"),
                 horizon=5, reference_saving=s.reference_saving)
print(econ.report_text(c))
