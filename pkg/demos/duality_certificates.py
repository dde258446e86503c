"""
Multipliers, duality and the saddle point
=========================================

A certified profile comes with more than a small residual. From it we read
off active sets and multipliers, then check stationarity, complementarity,
the duality gap, the saddle-point inequalities and the EVI itself by
sampling.
"""

import numpy as np

from vaccine_evi import TimeGrid, dual_grid_oracle, duality_report, evi_values, solve_profile
from vaccine_evi.scenarios import random_model

rng = np.random.default_rng(42)
model = random_model(rng, 2)
grid = TimeGrid(1.0, 9)
Q, _ = solve_profile(model, grid)

rep = duality_report(model, Q, n_samples=500, seed=1)
print("regime counts per group:", {k: v.tolist() for k, v in rep.regimes.counts().items()})
print(f"KKT residual      {rep.kkt_residual:.2e}")
print(f"complementarity   {rep.complementarity_residual:.2e}")
print(f"primal / dual     {rep.primal:.3e} / {rep.dual:.3e}  (gap {rep.duality_gap:.2e})")
print(f"sign conditions   {rep.sign_condition_verdict}")
print(f"saddle samples    {rep.saddle_samples_passed}/{rep.saddle_samples_total}")

###############################################################################
# The closed-form dual value against a brute-force search over multipliers.

print(f"grid dual oracle  {dual_grid_oracle(model, Q):.3e}")

###############################################################################
# EVI sampling: ``psi(P) >= 0`` for any admissible profile ``P``.

psi = evi_values(model, Q, rng.random((1000, *Q.values.shape)))
print(f"min psi over 1000 random P: {psi.min():.3e}")
