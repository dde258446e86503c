"""
Scenario files, CSV output and the report
=========================================

Scenarios are YAML documents. This script writes one, reads it back,
solves it and produces the same files as ``vaccine-evi solve`` and
``vaccine-evi report``.
"""

import tempfile
from pathlib import Path

from vaccine_evi import duality_report, parse_scenario, serialize_scenario, solve_profile
from vaccine_evi.scenario_io import write_report, write_timeseries_csv

TEXT = """\
horizon: 1.0
grid_points: 5
groups:
  - {name: young, epsilon: 0.6, r_v: 0.5, r_inf: 1.0}
  - {name: old, epsilon: 0.4, r_v: 0.1, r_inf: 1.0}
pi_model:
  kind: constant
  params:
    young: {c: 0.2}
    old: {c: 0.2}
"""

sc = parse_scenario(TEXT)
print(serialize_scenario(sc))

Q, _ = solve_profile(sc.model, sc.grid, sc.solver)
rep = duality_report(sc.model, Q, n_samples=50)

out = Path(tempfile.mkdtemp())
n = write_timeseries_csv(sc.model, Q, rep.multipliers, out / "demo.csv")
print(f"{n} rows:")
print((out / "demo.csv").read_text())
print(write_report(sc.model, Q, rep.multipliers, rep))
