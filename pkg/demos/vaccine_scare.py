"""
Response to a vaccine scare
===========================

Group g1 (70% of the population) perceives the vaccine risk rising from 0.1
to 0.4 on the middle third of the horizon. Coverage should drop inside that
window and nowhere else.
"""

import numpy as np

from vaccine_evi import TimeGrid, solve_profile
from vaccine_evi.scenarios import vaccine_scare_model

model = vaccine_scare_model()
grid = TimeGrid(model.T, 31)
Q, _ = solve_profile(model, grid)
p = np.array([model.at(t).coverage(q) for t, q in zip(grid.nodes, Q.values)])

for t, q, cov in zip(grid.nodes[::3], Q.values[::3], p[::3]):
    bar = "#" * int(round(40 * cov))
    print(f"t={t:5.3f}  Q=({q[0]:.3f}, {q[1]:.3f})  p={cov:.4f} {bar}")

###############################################################################
# g2 partly compensates: when g1 backs off, lower coverage raises the
# infection risk everyone perceives, so g2 vaccinates more.

mid = len(grid.nodes) // 2
print("g2 at t=0:", Q.values[0, 1], " g2 at t=T/2:", Q.values[mid, 1])
