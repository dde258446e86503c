"""
Bang-bang equilibria with constant pi
=====================================

With a constant perceived infection risk the payoff gradient does not depend
on anyone's strategy. Each group simply compares its relative risk ``r`` with
``pi``: vaccinate with probability one when ``r < pi``, never when ``r > pi``.
The multipliers are the absolute gradient on the active side.
"""

import numpy as np

from vaccine_evi import TimeGrid, classify_regimes, extract_multipliers, solve_profile
from vaccine_evi.scenarios import bang_bang_model

model = bang_bang_model()
grid = TimeGrid(model.T, 5)

Q, diags = solve_profile(model, grid)
print("Q (rows are nodes, columns g1, g2):")
print(Q.values)

###############################################################################
# ``g = r - pi`` is 0.3 for g1 and -0.1 for g2, so g1 stays at 0 with
# ``alpha = 0.3`` and g2 sits at 1 with ``beta = 0.1``.

regimes = classify_regimes(Q)
mult = extract_multipliers(model, Q, regimes)
print("regimes at t=0:", regimes.labels()[0])
print("alpha at t=0:", mult.alpha[0], " beta at t=0:", mult.beta[0])
print("iterations per node:", [d.iterations for d in diags])

###############################################################################
# A bigger random instance: four groups and 65 nodes, still exact.

from vaccine_evi.scenarios import random_model  # noqa: E402

rng = np.random.default_rng(0)
big = random_model(rng, 4, "constant")
grid65 = TimeGrid(1.0, 65)
Q4, _ = solve_profile(big, grid65)
r = np.array([big.at(t).r for t in grid65.nodes])
c = np.array([big.at(t).a for t in grid65.nodes])
print("matches the sign rule:", np.array_equal(Q4.values, np.where(r > c, 0.0, 1.0)))
