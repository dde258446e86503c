"""Ready-made games used by the demos, the tests and the shipped scenario files."""

from __future__ import annotations

import numpy as np

from .evi_solver import TimeGrid
from .model import FunctionSpec, GameModel, GroupSpec, PiModel
from .scenario_io import Scenario


def bang_bang_model(T: float = 1.0) -> GameModel:
    """Two groups, constant ``pi = 0.2``: relative risks 0.5 and 0.1."""
    groups = [GroupSpec("g1", 0.6, 0.5, 1.0), GroupSpec("g2", 0.4, 0.1, 1.0)]
    return GameModel(T, groups, PiModel.constant([0.2, 0.2]))


def interior_model(T: float = 1.0) -> GameModel:
    """One group with ``pi = 0.05 + 0.3 (1 - p)`` and ``r = 0.1``; equilibrium 11/12."""
    return GameModel(T, [GroupSpec("g1", 1.0, 0.1, 1.0)], PiModel.linear_coverage([0.05], [0.3]))


def vaccine_scare_model(T: float = 1.0, base: float = 0.1, peak: float = 0.4) -> GameModel:
    """Two coupled groups; group ``g1``'s vaccine risk spikes on ``[T/3, 2T/3]``."""
    spike = FunctionSpec.piecewise([(0.0, base), (T / 3, base), (T / 2, peak), (2 * T / 3, base), (T, base)])
    groups = [GroupSpec("g1", 0.7, spike, 1.0), GroupSpec("g2", 0.3, 0.15, 1.0)]
    return GameModel(T, groups, PiModel.linear_coverage([0.05, 0.05], [0.4, 0.4]))


def scenario(model: GameModel, n_nodes: int = 65) -> Scenario:
    return Scenario(model, TimeGrid(model.T, n_nodes))


def random_model(rng: np.random.Generator, k: int, kind: str = "linear_coverage", T: float = 1.0,
                 n_breaks: int = 4) -> GameModel:
    """Random valid game with piecewise-linear data on shared breakpoints.

    Proportions are Dirichlet draws at each breakpoint, so their linear
    interpolation sums to one everywhere; ``a + b <= 1`` likewise holds
    between breakpoints.
    """
    ts = np.linspace(0.0, T, n_breaks)

    def pl(values):
        return FunctionSpec.piecewise(zip(ts, values))

    eps = rng.dirichlet(np.full(k, 2.0), size=n_breaks)  # (n_breaks, k)
    groups = [
        GroupSpec(
            f"g{i + 1}",
            epsilon=pl(eps[:, i]),
            r_v=pl(rng.uniform(0.0, 0.4, n_breaks)),
            r_inf=pl(rng.uniform(0.5, 1.0, n_breaks)),
        )
        for i in range(k)
    ]
    if kind == "constant":
        pi = PiModel.constant([pl(rng.uniform(0.0, 0.6, n_breaks)) for _ in range(k)])
    else:
        b = rng.uniform(0.0, 0.6, (k, n_breaks))
        a = rng.uniform(0.0, 1.0, (k, n_breaks)) * (1.0 - b)
        pi = PiModel.linear_coverage([pl(x) for x in a], [pl(x) for x in b])
    return GameModel(T, groups, pi)
