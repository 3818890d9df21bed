import numpy as np
import pytest

from deepteam.dss.solver import solve_dss_finite, value_iteration_dss
from deepteam.exceptions import AssumptionError, SolverError
from deepteam.kernel.dynamics import ell, hat_f
from deepteam.pdss.dao import TreeDAO
from deepteam.pdss.schemas import GridMixedPolicy
from deepteam.pdss.solver import (solve_pdss_exact_small, solve_pdss_quantized_finite, tree_policy,
                                  value_iteration_pdss_quantized)
from deepteam.pdss.tracking import initial_mean_field, mixed_trajectory, observed_subpops
from deepteam.sim.evaluation import exact_value
from deepteam.sim.rollout import simulate_rollout
from deepteam.sim.strategies import MixedStrategy, TableStrategy
from deepteam.statespace.laws import LawSpace
from tests.conftest import build, three_state_schema, two_coupled_schema


def test_full_observation_quantized_pdss_equals_dss(coupled_model):
    dss = solve_dss_finite(coupled_model)
    pdss = solve_pdss_quantized_finite(coupled_model, {0}, r=2)
    assert pdss.quantized == frozenset()
    assert pdss.optimal_cost == pytest.approx(dss.optimal_cost, abs=1e-12)
    strategy = MixedStrategy(coupled_model, GridMixedPolicy(pdss, frozenset({0})))
    assert exact_value(coupled_model, strategy) == pytest.approx(
        exact_value(coupled_model, TableStrategy(dss)), abs=1e-12)


def test_full_observation_tree_equals_dss(coupled_model, major_minor_model):
    for model in (coupled_model, major_minor_model):
        dss = solve_dss_finite(model)
        tree = solve_pdss_exact_small(model, range(model.K))
        assert tree.initial_value == pytest.approx(dss.optimal_cost, abs=1e-10)
        strategy = MixedStrategy(model, tree_policy(model, tree))
        assert exact_value(model, strategy) == pytest.approx(dss.optimal_cost, abs=1e-10)


def test_empty_observation_tree_is_mean_field_control(functional_model):
    tree = solve_pdss_exact_small(functional_model, [])
    laws = LawSpace(functional_model)
    z1 = (initial_mean_field(functional_model, 0),)
    expected = min(
        ell(functional_model, 1, z1, laws.profile(g1))
        + min(ell(functional_model, 2, hat_f(functional_model, 1, z1, laws.profile(g1)), laws.profile(g2))
              for g2 in range(laws.size))
        for g1 in range(laws.size))
    assert tree.initial_value == pytest.approx(expected, abs=1e-12)
    assert tree.roots == {"": tree.initial_value}


def test_partial_observation_is_never_better_than_dss(functional_model, major_minor_model):
    for model, observed in ((functional_model, []), (major_minor_model, [1]), (major_minor_model, [0])):
        dss = solve_dss_finite(model)
        tree = solve_pdss_exact_small(model, observed)
        assert exact_value(model, MixedStrategy(model, tree_policy(model, tree))) >= dss.optimal_cost - 1e-12


def test_quantized_pdss_policy_is_feasible(major_minor_model):
    dss = solve_dss_finite(major_minor_model)
    pdss = solve_pdss_quantized_finite(major_minor_model, {1}, r=4)
    assert pdss.quantized == frozenset({0})
    strategy = MixedStrategy(major_minor_model, GridMixedPolicy(pdss, frozenset({1})))
    assert exact_value(major_minor_model, strategy) >= dss.optimal_cost - 1e-12


def test_tracked_state_follows_observations_and_mean_field(major_minor_model):
    pdss = solve_pdss_quantized_finite(major_minor_model, {1}, r=4)
    policy = GridMixedPolicy(pdss, frozenset({1}))
    strategy = MixedStrategy(major_minor_model, policy)
    laws = LawSpace(major_minor_model)
    for rep in range(10):
        trajectory = simulate_rollout(major_minor_model, strategy, seed=3, rep=rep)
        observations = [[np.array(counts[1])] for counts in trajectory.counts]
        states = mixed_trajectory(major_minor_model, policy, observations)
        mean = initial_mean_field(major_minor_model, 0)
        for t, (p, counts) in enumerate(zip(states, trajectory.counts), start=1):
            assert p.components[1].tolist() == list(counts[1])
            assert np.array_equal(p.components[0], mean)
            mean = hat_f(major_minor_model, t, p.values(), laws.profile(trajectory.gammas[t - 1]))[0]


def test_mixed_trajectory_needs_full_horizon(functional_model):
    policy = GridMixedPolicy(solve_pdss_quantized_finite(functional_model, [], r=2), frozenset())
    with pytest.raises(SolverError, match="horizon is T=2"):
        mixed_trajectory(functional_model, policy, [[]])
    states = mixed_trajectory(functional_model, policy, [[], []])
    assert len(states) == 2
    assert all(p.observed == frozenset() for p in states)


def test_observed_subpops(major_minor_model):
    assert observed_subpops(major_minor_model, None) == frozenset({0, 1})
    assert observed_subpops(major_minor_model, ["b"]) == frozenset({1})


def test_coupled_hidden_sub_population_is_rejected():
    model = build(two_coupled_schema())
    with pytest.raises(AssumptionError):
        solve_pdss_quantized_finite(model, {0}, r=2)
    with pytest.raises(AssumptionError):
        solve_pdss_exact_small(model, {0})


def test_discounted_pdss(discounted_model):
    with pytest.raises(AssumptionError, match="beta\\*H3"):
        value_iteration_pdss_quantized(discounted_model, [], r=2, h3=2.0)
    full = value_iteration_pdss_quantized(discounted_model, {0}, r=2, h3=0.5, tol=1e-8)
    assert full.stationary
    assert full.optimal_cost == pytest.approx(value_iteration_dss(discounted_model, tol=1e-8).optimal_cost,
                                              abs=1e-12)
    hidden = value_iteration_pdss_quantized(discounted_model, [], r=4, h3=0.5, tol=1e-8)
    assert hidden.quantized == frozenset({0})
    assert np.isfinite(hidden.optimal_cost)


def test_hidden_three_state_sub_population():
    # старт в точке сетки (1/2, 0, 0); образ любой точки квантуется в (0, 0, 1/2) со стоимостью 1/2
    finite = solve_pdss_quantized_finite(build(three_state_schema(T=2)), set(), r=2)
    assert finite.quantized == frozenset({0})
    assert finite.optimal_cost == pytest.approx(0.5, abs=1e-12)
    stationary = value_iteration_pdss_quantized(build(three_state_schema(T=None, beta=0.5)), set(), r=2, h3=0.5,
                                                tol=1e-9)
    assert stationary.optimal_cost == pytest.approx(0.5, abs=1e-8)


def test_tree_rows(functional_model):
    tree = solve_pdss_exact_small(functional_model, [])
    rows = TreeDAO.rows_for(tree)
    laws = LawSpace(functional_model)
    assert rows[0][:2] == (1, "")
    assert sum(1 for row in rows if row[0] == 2) == laws.size
    assert all(tree.policy[key] == g for _, key, _, g in rows)


def test_tree_does_not_depend_on_workers(major_minor_model):
    one = solve_pdss_exact_small(major_minor_model, [1], workers=1)
    four = solve_pdss_exact_small(major_minor_model, [1], workers=4)
    assert one.values == four.values
    assert one.policy == four.policy
    assert one.initial_value == four.initial_value


def test_tree_samples_initial_states_above_root_limit(major_minor_model):
    exact = solve_pdss_exact_small(major_minor_model, [0])
    assert exact.initial_exact and len(exact.roots) == 3
    sampled = solve_pdss_exact_small(major_minor_model, [0], root_limit=1, samples=400, seed=7)
    assert not sampled.initial_exact
    assert sampled.samples == 400
    assert set(sampled.roots) <= set(exact.roots)
    for key, value in sampled.roots.items():
        assert value == pytest.approx(exact.roots[key], abs=1e-12)
    assert np.isfinite(sampled.initial_half_width)
    assert abs(sampled.initial_value - exact.initial_value) <= 4 * sampled.initial_half_width + 1e-12
    again = solve_pdss_exact_small(major_minor_model, [0], root_limit=1, samples=400, seed=7)
    assert again.initial_value == sampled.initial_value
