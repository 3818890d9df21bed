import math

import numpy as np
import pytest

from deepteam.bounds.dao import BoundsDAO
from deepteam.bounds.estimator import estimate_lipschitz, population_constant, supplied_profile
from deepteam.bounds.recursions import check_beta_h3, epsilon_discounted, epsilon_finite, h_recursions
from deepteam.dss.solver import solve_dss_finite, solve_dss_quantized, value_iteration_dss
from deepteam.exceptions import AssumptionError, LipschitzError, SolverError
from deepteam.pdss.schemas import GridMixedPolicy
from deepteam.pdss.solver import (solve_pdss_exact_small, solve_pdss_quantized_finite, tree_policy,
                                  value_iteration_pdss_quantized)
from deepteam.sim.evaluation import evaluate_strategy, exact_value
from deepteam.sim.strategies import MixedStrategy, TableStrategy
from tests.conftest import build, noise_switch_schema


@pytest.fixture
def profile():
    return supplied_profile(T=2, H3=1.0, H4=2.0, C=3.0)


def test_h_recursions(profile):
    result = h_recursions(profile)
    assert result.H5 == [4.0, 2.0]
    assert result.H6 == [2.0, 0.0]
    assert (result.H5_1, result.H6_1) == (4.0, 2.0)


def test_h_recursions_needs_horizon():
    with pytest.raises(SolverError):
        h_recursions(supplied_profile(T=None, H3=1.0, H4=1.0, C=1.0))


def test_epsilon_finite_modes(profile):
    assert epsilon_finite(profile, n=4, mode="poi") == pytest.approx(9.0)
    assert epsilon_finite(profile, n=4, r=3, mode="poc") == pytest.approx(2.0)
    assert epsilon_finite(profile, n=4, r=3) == pytest.approx(11.0)
    # r = бесконечность: вклад квантования нулевой
    assert epsilon_finite(profile, n=4, mode="poc") == 0.0
    with pytest.raises(SolverError, match="bound mode"):
        epsilon_finite(profile, n=4, mode="other")
    with pytest.raises(SolverError):
        epsilon_finite(profile, n=0)


def test_epsilon_discounted():
    profile = supplied_profile(T=None, H3=1.0, H4=2.0, C=3.0)
    assert epsilon_discounted(profile, n=4, beta=0.5) == pytest.approx(12.0)
    with pytest.raises(AssumptionError):
        epsilon_discounted(supplied_profile(T=None, H3=2.5, H4=2.0, C=3.0), n=4, beta=0.5)


def test_check_beta_h3():
    check_beta_h3(0.5, 1.9)
    with pytest.raises(AssumptionError) as info:
        check_beta_h3(0.9, 1.2)
    assert info.value.exit_code == 4


def test_population_constant(functional_model, major_minor_model):
    assert population_constant(functional_model) == 4.0
    # у "b" один шум: |X| |W| = 2
    assert population_constant(major_minor_model) == 4.0


def test_estimates_on_functional_model(functional_model):
    profile = estimate_lipschitz(functional_model, pairs=32)
    assert profile.source == "estimated"
    assert len(profile.H3) == functional_model.T
    assert all(h == 0.0 for h in profile.H1)
    assert max(profile.H3) <= 1.0 + 1e-9
    assert max(profile.H4) <= 2.0 + 1e-9
    assert profile.C == 4.0


def test_kernel_constant_on_coupled_model(coupled_model):
    profile = estimate_lipschitz(coupled_model, pairs=64, seed=5)
    assert 0.0 < max(profile.H1) <= 1.0 + 1e-9


def test_more_pairs_never_lower_estimates(coupled_model):
    small = estimate_lipschitz(coupled_model, pairs=8, seed=2)
    large = estimate_lipschitz(coupled_model, pairs=16, seed=2)
    for name in ("H1", "H2", "H3", "H4"):
        assert all(a <= b for a, b in zip(getattr(small, name), getattr(large, name)))


def test_workers_do_not_change_estimates(coupled_model):
    assert estimate_lipschitz(coupled_model, pairs=16, workers=1) == estimate_lipschitz(coupled_model, pairs=16,
                                                                                       workers=4)


def test_overrides(functional_model):
    profile = estimate_lipschitz(functional_model, pairs=4, overrides={"H3": 0.5})
    assert profile.source == "supplied"
    assert profile.H3 == [0.5, 0.5]
    with pytest.raises(LipschitzError, match="H9"):
        estimate_lipschitz(functional_model, pairs=4, overrides={"H9": 1.0})


def test_bound_row(profile):
    profile = h_recursions(profile)
    row = BoundsDAO.row("epsilon", 9.0, "poi", 4, profile)
    assert row.r == "inf"
    assert row.beta == ""
    assert row.estimated_or_supplied == "supplied"
    assert BoundsDAO.row("epsilon", 1.0, "both", 4, profile, r=8, beta=0.5).r == "8"
    assert BoundsDAO.header() == ["quantity", "value", "mode", "n", "r", "beta", "H5_1", "H6_1", "C",
                                  "estimated_or_supplied"]


def test_information_loss_is_within_bound(functional_model):
    # для этой модели H3 <= 1 и H4 <= 2 выполняются аналитически
    profile = supplied_profile(T=functional_model.T, H3=1.0, H4=3.0, C=population_constant(functional_model))
    bound = epsilon_finite(profile, n=functional_model.subpops[0].size, mode="poi")
    dss = solve_dss_finite(functional_model)
    tree = solve_pdss_exact_small(functional_model, [])
    cost = exact_value(functional_model, MixedStrategy(functional_model, tree_policy(functional_model, tree)))
    assert cost >= dss.optimal_cost - 1e-12
    assert cost - dss.optimal_cost <= bound
    assert bound == pytest.approx(9.0 * 4.0 / math.sqrt(2.0))


def _switch_profile(model, T=2):
    # f̂ не зависит от z: H3 = 0; стоимость 1.01-липшицева по D
    return supplied_profile(T=T, H3=0.0, H4=1.01, C=population_constant(model))


def test_information_loss_shrinks_with_population():
    sizes = [4, 8, 16, 32]
    gaps = []
    for n in sizes:
        model = build(noise_switch_schema(n))
        tree = solve_pdss_exact_small(model, [])
        gap = exact_value(model, MixedStrategy(model, tree_policy(model, tree))) - solve_dss_finite(model).optimal_cost
        assert 0.0 < gap <= epsilon_finite(_switch_profile(model), n, mode="poi")
        gaps.append(gap)
    assert gaps[0] == pytest.approx(2.95 / 16, abs=1e-12)
    assert all(after < before for before, after in zip(gaps, gaps[1:]))
    slope = np.polyfit(np.log(sizes), np.log(gaps), 1)[0]
    assert -1.0 <= slope <= -0.25


@pytest.mark.parametrize("r", [2, 4, 8, 16])
def test_quantization_loss_is_within_bound(r):
    model = build(noise_switch_schema(8))
    optimal = solve_dss_finite(model).optimal_cost
    gap = exact_value(model, TableStrategy(solve_dss_quantized(model, r, {0}))) - optimal
    assert -1e-12 <= gap <= epsilon_finite(_switch_profile(model), 8, r=r, mode="poc")


@pytest.mark.parametrize("n", [4, 8, 16, 32])
def test_combined_loss_with_levels_near_root_n(n):
    model = build(noise_switch_schema(n))
    r = math.ceil(math.sqrt(n))
    solution = solve_pdss_quantized_finite(model, set(), r)
    cost = exact_value(model, MixedStrategy(model, GridMixedPolicy(solution, frozenset())))
    gap = cost - solve_dss_finite(model).optimal_cost
    assert -1e-12 <= gap <= epsilon_finite(_switch_profile(model), n, r=r, mode="both")


def test_discounted_loss_is_within_bound():
    model = build(noise_switch_schema(8, beta=0.5))
    optimal = value_iteration_dss(model, tol=1e-8).optimal_cost
    solution = value_iteration_pdss_quantized(model, set(), r=3, h3=0.0, tol=1e-8)
    evaluation = evaluate_strategy(model, MixedStrategy(model, GridMixedPolicy(solution, frozenset())), reps=200,
                                   seed=11, target=1e-6)
    bound = epsilon_discounted(_switch_profile(model, T=None), 8, 0.5)
    assert bound == pytest.approx(1.01 * 4.0 / (0.5 * math.sqrt(8.0)))
    assert evaluation.mean - optimal <= bound
