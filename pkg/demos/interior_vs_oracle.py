"""
An interior equilibrium checked by brute force
==============================================

A single group facing a coverage-dependent infection risk
``pi = a + b (1 - p)`` with ``a = 0.05``, ``b = 0.3`` and ``r = 0.1``. The
marginal payoff ``-r + pi + b (1 - P)`` vanishes at ``P = 11/12``.

We do not take that number on faith: a best-response scan over a fine grid
of strategies, holding the induced coverage fixed, has to land on it too.
"""

import numpy as np

from vaccine_evi import OracleParams, TimeGrid, best_response, eval_grad, nash_check, solve_profile
from vaccine_evi.scenarios import interior_model

model = interior_model()
Q, _ = solve_profile(model, TimeGrid(model.T, 9))
q = Q.values[0, 0]
print(f"solver      Q = {q:.12f}")
print(f"analytic 11/12 = {11 / 12:.12f}")

br = best_response(model, 0.0, 0, [], OracleParams(resolution=1e-6))
print(f"oracle grid optimum = {br.best:.7f}")
print(f"gradient at Q = {eval_grad(model, 0.0, [q])[0]:.2e}")

###############################################################################
# Nash check: no unilateral move on the oracle grid gains more than the
# improvement tolerance.

print("Nash at the solver output:", bool(nash_check(model, 0.0, [q], OracleParams(resolution=1e-4))))
print("Nash at 0.5:", bool(nash_check(model, 0.0, [0.5], OracleParams(resolution=1e-4))))
