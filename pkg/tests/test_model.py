import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaccine_evi import (
    DomainError,
    FunctionSpec,
    GameModel,
    GroupSpec,
    PiModel,
    TimeGrid,
    ValidationError,
    coverage,
    eval_grad,
    eval_payoff,
    eval_pi,
    fd_gradient_check,
    validate_model,
)
from vaccine_evi.scenarios import random_model

from .conftest import random_models, single_group


def test_function_spec_interpolates():
    f = FunctionSpec.piecewise([(0, 0.0), (1, 1.0), (2, 0.0)])
    assert f(0.5) == pytest.approx(0.5)
    assert f(1.5) == pytest.approx(0.5)
    np.testing.assert_allclose(f(np.array([0.0, 1.0, 2.0])), [0, 1, 0])
    assert FunctionSpec.constant(0.3)(7.0) == 0.3


def test_function_spec_rejects_unsorted_breakpoints():
    with pytest.raises(ValidationError):
        FunctionSpec.piecewise([(0, 1), (0, 2)])


def test_coverage_examples(bang_bang):
    assert coverage(bang_bang, 0.0, [0, 1]) == pytest.approx(0.4)
    assert coverage(bang_bang, 0.5, [1, 1]) == pytest.approx(1.0)
    assert coverage(bang_bang, 1.0, [0, 0]) == 0.0


def test_coverage_outside_horizon(bang_bang):
    with pytest.raises(DomainError):
        coverage(bang_bang, 1.5, [0, 1])


def test_eval_pi_examples(interior):
    assert eval_pi(single_group(), 0.3, [0.7])[0] == pytest.approx(0.2)
    assert eval_pi(interior, 0.0, [1.0])[0] == pytest.approx(0.05)
    assert eval_pi(interior, 0.0, [0.0])[0] == pytest.approx(0.35)


@pytest.mark.parametrize("P, expected", [(0.0, -0.2), (1.0, -0.5), (0.5, -0.35)])
def test_payoff_examples(P, expected):
    assert eval_payoff(single_group(0.5, 0.2), 0.0, [P])[0] == pytest.approx(expected)


def test_relative_risk_is_ratio():
    m = GameModel(1.0, [GroupSpec("g", 1.0, 0.2, 0.4)], PiModel.constant([0.2]))
    # r = 0.5, so u(1) = -0.5
    assert eval_payoff(m, 0.0, [1.0])[0] == pytest.approx(-0.5)


def test_grad_constant_pi():
    assert eval_grad(single_group(0.5, 0.2), 0.0, [0.123])[0] == pytest.approx(-0.3)


def _central_difference(model, t, P, i, h=1e-6):
    lo, hi = np.array(P, float), np.array(P, float)
    lo[i] -= h
    hi[i] += h
    return (eval_payoff(model, t, hi)[i] - eval_payoff(model, t, lo)[i]) / (2 * h)


def test_grad_interior_stationary_point_matches_finite_differences(interior):
    # oracle: central differences with step 1e-6 on the payoff itself
    fd = _central_difference(interior, 0.0, [11 / 12], 0)
    assert abs(fd) < 1e-9
    assert eval_grad(interior, 0.0, [11 / 12])[0] == pytest.approx(0.0, abs=1e-12)


def test_grad_interior_at_zero(interior):
    assert eval_grad(interior, 0.0, [0.0])[0] == pytest.approx(0.55)


def test_validate_passes(bang_bang):
    rep = validate_model(bang_bang, TimeGrid(1.0, 9))
    assert rep.ok, rep.problems
    assert rep.growth_constant == pytest.approx(0.3)
    assert "concave" in rep.pseudoconcave


def test_validate_proportion_sum():
    m = GameModel(1.0, [GroupSpec("a", 0.7, 0.1, 1), GroupSpec("b", 0.4, 0.1, 1)], PiModel.constant([0.2, 0.2]))
    rep = validate_model(m, TimeGrid(1.0, 3))
    assert not rep.ok
    assert any("proportions sum 1.1 ≠ 1" in p for p in rep.problems)
    with pytest.raises(ValidationError):
        rep.raise_if_invalid()


def test_validate_pi_above_one():
    m = GameModel(1.0, [GroupSpec("g1", 1.0, 0.1, 1)], PiModel.linear_coverage([0.9], [0.3]))
    rep = validate_model(m, TimeGrid(1.0, 3))
    assert any("π exceeds 1 at zero coverage" in p and "g1" in p for p in rep.problems)


def test_validate_reports_offending_node_and_group():
    r_inf = FunctionSpec.piecewise([(0, 1.0), (1, 0.0)])
    m = GameModel(1.0, [GroupSpec("g7", 1.0, 0.1, r_inf)], PiModel.constant([0.2]))
    rep = validate_model(m, TimeGrid(1.0, 3))
    assert any(p.startswith("t=1: group g7: r_inf") for p in rep.problems)


def test_validate_breakpoint_span():
    f = FunctionSpec.piecewise([(0.1, 0.2), (1.0, 0.2)])
    m = GameModel(1.0, [GroupSpec("g", 1.0, f, 1.0)], PiModel.constant([0.2]))
    assert any("first breakpoint" in p for p in validate_model(m, TimeGrid(1.0, 3)).problems)


def test_fd_check_constant_pi_exact(bang_bang):
    assert fd_gradient_check(bang_bang, 0.5, [0.3, 0.9]) <= 1e-10
    # stencil clamped at the box faces
    assert fd_gradient_check(bang_bang, 0.5, [0.0, 1.0]) <= 1e-10


def test_fd_check_linear_coverage():
    rng = np.random.default_rng(3)
    for m in random_models(11, 10):
        assert fd_gradient_check(m, rng.random(), rng.random(m.k), 1e-6) <= 1e-6


def test_fd_check_rejects_step():
    with pytest.raises(DomainError):
        fd_gradient_check(single_group(), 0.0, [0.5], 0.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 4), t=st.floats(0, 1), data=st.data())
def test_payoff_and_pi_ranges(seed, k, t, data):
    m = random_model(np.random.default_rng(seed), k)
    P = np.array(data.draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    s = m.at(t)
    pi = eval_pi(m, t, P)
    assert np.all((pi >= -1e-15) & (pi <= 1 + 1e-15))
    u = eval_payoff(m, t, P)
    assert np.all(u <= 1e-15) and np.all(u >= -1 - s.r.max() - 1e-15)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 4), i=st.integers(0, 3))
def test_coverage_monotone(seed, k, i):
    rng = np.random.default_rng(seed)
    m = random_model(rng, k)
    i %= k
    P = rng.random(k)
    Q = P.copy()
    Q[i] = min(1.0, P[i] + rng.random())
    assert coverage(m, 0.5, Q) >= coverage(m, 0.5, P)


def test_grad_matches_finite_differences_at_random_points():
    rng = np.random.default_rng(0)
    for m in random_models(5, 5):
        for _ in range(20):
            t = rng.random()
            P = rng.uniform(1e-3, 1 - 1e-3, m.k)
            fd = np.array([_central_difference(m, t, P, i) for i in range(m.k)])
            an = eval_grad(m, t, P)
            assert np.max(np.abs(fd - an) / np.maximum(1.0, np.abs(an))) <= 1e-6


def test_constant_pi_grad_independent_of_P():
    rng = np.random.default_rng(1)
    m = random_model(rng, 3, "constant")
    g0 = eval_grad(m, 0.4, np.zeros(3))
    for _ in range(5):
        assert np.array_equal(eval_grad(m, 0.4, rng.random(3)), g0)
