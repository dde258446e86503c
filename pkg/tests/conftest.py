import numpy as np
import pytest

from vaccine_evi import GameModel, GroupSpec, PiModel, TimeGrid
from vaccine_evi.scenarios import bang_bang_model, interior_model, random_model, vaccine_scare_model


@pytest.fixture
def bang_bang():
    return bang_bang_model()


@pytest.fixture
def interior():
    return interior_model()


@pytest.fixture
def scare():
    return vaccine_scare_model()


@pytest.fixture
def grid65():
    return TimeGrid(1.0, 65)


def single_group(r=0.5, c=0.2):
    """k=1 constant-pi game."""
    return GameModel(1.0, [GroupSpec("g1", 1.0, r, 1.0)], PiModel.constant([c]))


def random_models(seed, n, k_max=4):
    rng = np.random.default_rng(seed)
    out = []
    for j in range(n):
        k = int(rng.integers(1, k_max + 1))
        kind = "constant" if j % 4 == 3 else "linear_coverage"
        out.append(random_model(rng, k, kind))
    return out


def hand_built_triple(rng, k, grid, kind="constant"):
    """Pick Q, regimes and g first, then tune pi so that (Q, alpha, beta) is exact.

    Returns ``(model, Q values, alpha, beta)`` with KKT holding to rounding.
    """
    from vaccine_evi import FunctionSpec

    n = grid.n_nodes
    codes = rng.integers(-1, 2, size=(n, k))
    Q = np.where(codes == -1, 0.0, np.where(codes == 1, 1.0, rng.uniform(0.05, 0.95, (n, k))))
    mag = rng.uniform(0.05, 0.15, (n, k))
    g = np.where(codes == -1, mag, np.where(codes == 1, -mag, 0.0))
    eps = rng.dirichlet(np.full(k, 2.0))
    r = rng.uniform(0.4, 0.6, k)
    b = np.full(k, 0.1)
    p = Q @ eps
    if kind == "constant":
        c = r - g
        pi = PiModel.constant([FunctionSpec.piecewise(zip(grid.nodes, c[:, i])) for i in range(k)])
    else:
        a = r - b * (1 - p)[:, None] - b * eps * (1 - Q) - g
        pi = PiModel.linear_coverage(
            [FunctionSpec.piecewise(zip(grid.nodes, a[:, i])) for i in range(k)], list(b)
        )
    groups = [GroupSpec(f"g{i + 1}", eps[i], r[i], 1.0) for i in range(k)]
    model = GameModel(grid.T, groups, pi)
    alpha = np.maximum(g, 0.0)
    beta = np.maximum(-g, 0.0)
    return model, Q, alpha, beta


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
