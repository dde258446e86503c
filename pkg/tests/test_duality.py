import numpy as np
import pytest

from vaccine_evi import (
    MultiplierPair,
    Regime,
    SignConditionError,
    StrategyProfile,
    TimeGrid,
    check_sign_conditions,
    classify_regimes,
    complementarity_check,
    dual_grid_oracle,
    duality_gap,
    duality_report,
    evi_value,
    extract_multipliers,
    kkt_residual,
    lagrangian_value,
    natural_residual,
    saddle_point_check,
    solve_profile,
    validate_model,
)

from .conftest import hand_built_triple, random_models, single_group

GRID = TimeGrid(1.0, 9)


def _bb_profile():
    return StrategyProfile.constant(GRID, [0.0, 1.0])


def test_classify_regimes_examples():
    Q = StrategyProfile(TimeGrid(1.0, 2), [[0, 0.5, 1], [1e-12, 1e-3, 1 - 1e-12]])
    c = classify_regimes(Q, 1e-8)
    assert list(c.labels()[0]) == ["E_minus", "E_zero", "E_plus"]
    assert list(c.codes[1]) == [Regime.E_MINUS, Regime.E_ZERO, Regime.E_PLUS]
    counts = c.counts()
    assert sum(int(np.sum(v)) for v in counts.values()) == 6


def test_sign_conditions_constant_examples():
    Q = StrategyProfile.constant(GRID, [0.0])
    assert check_sign_conditions(single_group(0.5, 0.2), Q, classify_regimes(Q))
    Q = StrategyProfile.constant(GRID, [1.0])
    assert check_sign_conditions(single_group(0.1, 0.2), Q, classify_regimes(Q))


def test_sign_conditions_interior(interior):
    Q, _ = solve_profile(interior, GRID)
    v = check_sign_conditions(interior, Q, classify_regimes(Q))
    assert v.passed
    assert np.max(np.abs(v.g)) < 1e-12


def test_sign_conditions_fail_names_worst(bang_bang):
    Q = StrategyProfile.constant(GRID, [1.0, 1.0])
    v = check_sign_conditions(bang_bang, Q, classify_regimes(Q))
    assert not v
    n, i, g, reg = v.worst
    assert (i, reg) == (0, "E_plus") and g == pytest.approx(0.3)


def test_extract_bang_bang(bang_bang):
    Q = _bb_profile()
    mult = extract_multipliers(bang_bang, Q, classify_regimes(Q))
    np.testing.assert_allclose(mult.alpha, np.tile([0.3, 0.0], (9, 1)))
    np.testing.assert_allclose(mult.beta, np.tile([0.0, 0.1], (9, 1)))


def test_extract_interior_is_zero(interior):
    Q, _ = solve_profile(interior, GRID)
    mult = extract_multipliers(interior, Q, classify_regimes(Q))
    assert not mult.alpha.any() and not mult.beta.any()


def test_extract_refuses_inconsistent():
    Q = StrategyProfile.constant(GRID, [1.0])
    with pytest.raises(SignConditionError):
        extract_multipliers(single_group(0.5, 0.2), Q, classify_regimes(Q))


def test_kkt_residual_examples(bang_bang):
    Q = StrategyProfile.constant(GRID, [0.5])
    assert kkt_residual(single_group(0.5, 0.2), Q, MultiplierPair.zeros(GRID, 1)) == pytest.approx(0.3)
    Q = _bb_profile()
    mult = extract_multipliers(bang_bang, Q, classify_regimes(Q))
    assert kkt_residual(bang_bang, Q, mult) <= 1e-15
    mult.alpha[3, 1] = -0.2
    assert kkt_residual(bang_bang, Q, mult) >= 0.2


def test_complementarity_examples():
    Q = StrategyProfile.constant(GRID, [0.5])
    m = MultiplierPair(GRID, np.full((9, 1), 0.3), np.zeros((9, 1)))
    assert complementarity_check(Q, m) == pytest.approx(0.15)
    Q = StrategyProfile.constant(GRID, [1.0])
    m = MultiplierPair(GRID, np.zeros((9, 1)), np.full((9, 1), 0.2))
    assert complementarity_check(Q, m) == 0.0


def test_lagrangian_examples(bang_bang):
    Q = _bb_profile()
    mult = extract_multipliers(bang_bang, Q, classify_regimes(Q))
    assert lagrangian_value(bang_bang, Q, Q, mult) == pytest.approx(0.0, abs=1e-15)
    P = StrategyProfile.constant(GRID, [1.0, 0.0])
    zero = MultiplierPair.zeros(GRID, 2)
    assert lagrangian_value(bang_bang, Q, P, zero) == pytest.approx(evi_value(bang_bang, Q, P))
    # direct summation: psi(P) = 0.4, <<alpha, P>> = 0.3, <<beta, P - 1>> = 0.1 * (0 - 1) = -0.1
    direct = 0.4 - 0.3 * 1.0 + 0.1 * (0.0 - 1.0)
    assert direct == pytest.approx(0.0, abs=1e-15)
    assert lagrangian_value(bang_bang, Q, P, mult) == pytest.approx(direct, abs=1e-14)


def test_saddle_certified_bang_bang(bang_bang):
    Q = _bb_profile()
    mult = extract_multipliers(bang_bang, Q, classify_regimes(Q))
    res = saddle_point_check(bang_bang, Q, mult, 500, seed=1)
    assert res.passed and res.right_passed == res.left_passed == 500


def test_saddle_fails_off_equilibrium():
    m = single_group(0.5, 0.2)
    Q = StrategyProfile.constant(TimeGrid(1.0, 5), [0.5])
    res = saddle_point_check(m, Q, MultiplierPair.zeros(Q.grid, 1), 50, seed=0)
    assert not res
    ce = res.counterexample
    assert ce["side"] == "right" and np.all(ce["P"] == 0)
    assert ce["value"] == pytest.approx(-0.15)


def test_saddle_left_fails_on_perturbed_alpha(bang_bang):
    Q = _bb_profile()
    mult = extract_multipliers(bang_bang, Q, classify_regimes(Q))
    mult.alpha[4, 1] += 0.1  # group 2 sits at Q = 1
    res = saddle_point_check(bang_bang, Q, mult, 60, seed=0)
    assert not res
    assert res.left_passed < 60


def test_duality_gap_bang_bang(bang_bang):
    primal, dual, gap = duality_gap(bang_bang, _bb_profile())
    assert primal == 0.0
    assert dual == pytest.approx(0.0, abs=1e-15)
    assert gap <= 1e-15
    assert dual_grid_oracle(bang_bang, _bb_profile()) == pytest.approx(dual, abs=1e-6)


def test_duality_gap_zero_map():
    Q = StrategyProfile.constant(GRID, [0.37])
    assert duality_gap(single_group(0.2, 0.2), Q) == (0.0, 0.0, 0.0)


def test_dual_grid_oracle_matches_closed_form_off_equilibrium(bang_bang):
    # the dual function does not need Q to be a solution
    Q = StrategyProfile.constant(GRID, [0.25, 0.6])
    _, dual, _ = duality_gap(bang_bang, Q)
    assert dual_grid_oracle(bang_bang, Q) == pytest.approx(dual, abs=1e-6)


def test_strong_duality_random():
    for m in random_models(30, 12):
        Q, _ = solve_profile(m, GRID)
        primal, dual, gap = duality_gap(m, Q)
        assert gap <= 1e-8
        if m.k <= 2:
            assert abs(dual_grid_oracle(m, Q) - dual) <= 1e-6


def test_forward_direction_random():
    for m in random_models(31, 12):
        Q, _ = solve_profile(m, TimeGrid(1.0, 33))
        reg = classify_regimes(Q)
        mult = extract_multipliers(m, Q, reg)
        assert kkt_residual(m, Q, mult) <= 1e-6
        assert complementarity_check(Q, mult) <= 1e-8
        assert abs(lagrangian_value(m, Q, Q, mult)) <= 1e-10


@pytest.mark.parametrize("kind", ["constant", "linear_coverage"])
def test_converse_direction_hand_built(kind):
    rng = np.random.default_rng(5)
    for _ in range(10):
        k = int(rng.integers(1, 5))
        model, Qv, alpha, beta = hand_built_triple(rng, k, GRID, kind)
        assert validate_model(model, GRID).ok
        Q = StrategyProfile(GRID, Qv)
        mult = MultiplierPair(GRID, alpha, beta)
        assert kkt_residual(model, Q, mult) <= 1e-10
        for t, q in zip(GRID.nodes, Qv):
            assert natural_residual(model, t, q) <= 1e-6


def test_mutation_breaks_sign_conditions():
    rng = np.random.default_rng(9)
    for m in random_models(40, 8):
        Q, _ = solve_profile(m, GRID)
        assert check_sign_conditions(m, Q, classify_regimes(Q))
        g = np.array([m.at(t).F(q) for t, q in zip(GRID.nodes, Q.values)])
        # skip indifferent entries, where every value is an equilibrium
        cand = np.argwhere((np.abs(g) > 1e-6) | (np.abs(Q.values - 0.5) > 1e-3))
        n, i = cand[rng.integers(len(cand))]
        bad = Q.values.copy()
        bad[n, i] = 1.0 - bad[n, i]
        Qb = StrategyProfile(GRID, bad)
        assert not check_sign_conditions(m, Qb, classify_regimes(Qb))


def test_duality_report_fields(interior):
    Q, _ = solve_profile(interior, GRID)
    rep = duality_report(interior, Q, n_samples=50)
    assert rep.sign_condition_verdict == "pass"
    assert rep.kkt_residual <= 1e-12 and rep.duality_gap <= 1e-12 and rep.saddle_passed
    assert rep.saddle_samples_passed == rep.saddle_samples_total == 100
    assert "surrogate" in rep.notes[0]


def test_duality_report_flags_bad_profile(bang_bang):
    Q = StrategyProfile.constant(GRID, [1.0, 1.0])
    rep = duality_report(bang_bang, Q, n_samples=5)
    assert not rep.sign_conditions_passed and rep.multipliers is None
    assert rep.sign_condition_verdict.startswith("fail")
