from itertools import permutations, product

import numpy as np
import pytest

from deepteam.exceptions import AssumptionError
from deepteam.kernel.dynamics import bar_f, ell, hat_f, model_phi, phi
from deepteam.kernel.mixed import check_decoupled, mixed_step
from deepteam.kernel.transition import (
    dck_marginal, deep_values, initial_distribution, joint_transition, joint_transition_by_noise, lattices_for,
)
from deepteam.sim.rollout import agent_counts, step_agents
from deepteam.statespace.laws import LawSpace
from deepteam.statespace.schemas import MixedState
from deepteam.statespace.space import ProductSpace
from tests.conftest import build, functional_schema, two_coupled_schema


def test_phi_places_mass_on_chosen_action():
    block = phi([np.array([0.25, 0.75])], [np.array([1, 0])], [2])[0]
    assert block.tolist() == [[0.0, 0.25], [0.75, 0.0]]


def test_dck_marginal_matches_agent_enumeration(coupled_model):
    laws = LawSpace(coupled_model)
    sp = coupled_model.subpops[0]
    for counts in ([3, 0], [2, 1], [1, 2], [0, 3]):
        agents = [x for x, c in enumerate(counts) for _ in range(c)]
        for g in range(laws.size):
            gamma = laws.profile(g)
            dist = model_phi(coupled_model, deep_values(coupled_model, [counts]), gamma)
            rows = sp.kernel.rows(1, gamma[0], dist)
            brute = np.zeros(4)
            for outcome in product(range(2), repeat=3):
                p = np.prod([rows[x, y] for x, y in zip(agents, outcome)])
                brute[sum(y == 1 for y in outcome)] += p
            np.testing.assert_allclose(dck_marginal(coupled_model, 1, 0, 1, [counts], gamma), brute, atol=1e-12)


def test_joint_transition_rows_are_normalized(coupled_model, major_minor_model):
    for model in (coupled_model, major_minor_model):
        lattices = lattices_for(model)
        space = ProductSpace(lattices)
        laws = LawSpace(model)
        for rank in range(space.size):
            counts = space.numerators(rank)
            for g in range(laws.size):
                row = joint_transition(model, 1, counts, laws.profile(g), lattices=lattices)
                assert sum(row.probs) == pytest.approx(1.0, abs=1e-10)
                assert all(0 <= r < space.size for r in row.ranks)


@pytest.mark.parametrize("n, noise", [(2, (0.7, 0.3)), (3, (0.4, 0.6)), (4, (0.5, 0.5))])
def test_kernel_and_noise_routes_agree(n, noise):
    model = build(functional_schema(n=n, noise=noise))
    lattices = lattices_for(model)
    laws = LawSpace(model)
    for counts in lattices[0].points:
        for g in range(laws.size):
            kernel = joint_transition(model, 1, [counts], laws.profile(g), lattices=lattices).as_dict()
            noise_law = joint_transition_by_noise(model, 1, [counts], laws.profile(g), lattices=lattices).as_dict()
            assert kernel.keys() == noise_law.keys()
            for rank, p in kernel.items():
                assert noise_law[rank] == pytest.approx(p, abs=1e-10)


def test_hat_f_is_expected_next_deep_state(coupled_model):
    lattices = lattices_for(coupled_model)
    laws = LawSpace(coupled_model)
    for counts in lattices[0].points:
        z = deep_values(coupled_model, [counts])
        for g in range(laws.size):
            row = joint_transition(coupled_model, 1, [counts], laws.profile(g), lattices=lattices)
            mean = sum(p * lattices[0].values[r] for r, p in zip(row.ranks, row.probs))
            np.testing.assert_allclose(hat_f(coupled_model, 1, z, laws.profile(g))[0], mean, atol=1e-12)


def test_bar_f_is_mean_over_noise_assignments():
    model = build(functional_schema(n=3))
    laws = LawSpace(model)
    states = (0, 0, 1)
    z = [np.array([2 / 3, 1 / 3])]
    for g in range(laws.size):
        gamma = laws.profile(g)
        for noise_counts in ([3, 0], [2, 1], [1, 2], [0, 3]):
            multiset = [w for w, c in enumerate(noise_counts) for _ in range(c)]
            assignments = set(permutations(multiset))
            mean = np.zeros(2)
            for ws in assignments:
                for x, w in zip(states, ws):
                    mean[model.subpops[0].dynamics.next_state(1, x, int(gamma[0][x]), None, w)] += 1
            mean /= 3 * len(assignments)
            np.testing.assert_allclose(bar_f(model, 1, z, gamma, [noise_counts])[0], mean, atol=1e-12)


def test_noiseless_deep_state_update_is_exact():
    model = build(functional_schema(n=50, noise=(1.0, 0.0)))
    laws = LawSpace(model)
    rng = np.random.default_rng(7)
    for _ in range(300):
        states = [rng.integers(0, 2, size=50)]
        g = int(rng.integers(laws.size))
        gamma = laws.profile(g)
        counts = agent_counts(model, states)
        z = [counts[0] / 50]
        nxt = agent_counts(model, step_agents(model, 1, states, gamma, model_phi(model, z, gamma),
                                              [rng.random(50)]))
        predicted = bar_f(model, 1, z, gamma, [[50, 0]])[0] * 50
        assert np.rint(predicted).astype(int).tolist() == nxt[0].tolist()
        np.testing.assert_allclose(predicted, nxt[0], atol=1e-9)


def test_ell_is_cost_of_phi(functional_model):
    z = [np.array([0.5, 0.5])]
    gamma = (np.array([1, 0]),)
    # 0.5 * c(0, 1) + 0.5 * c(1, 0) + 0.5^2
    assert ell(functional_model, 1, z, gamma) == pytest.approx(0.5 * 1.0 + 0.5 * 2.0 + 0.25)


def test_initial_distribution(functional_model, major_minor_model):
    ranks, probs = initial_distribution(functional_model, ProductSpace(lattices_for(functional_model)))
    assert ranks.tolist() == [0, 1, 2]
    np.testing.assert_allclose(probs, [0.25, 0.5, 0.25])
    ranks, probs = initial_distribution(major_minor_model, ProductSpace(lattices_for(major_minor_model)))
    assert probs.sum() == pytest.approx(1.0)
    # основной агент стартует в "lo": вторая компонента всегда ранга 1
    assert all(r % 2 == 1 for r in ranks)


def test_check_decoupled():
    model = build(two_coupled_schema())
    check_decoupled(model, {1})
    check_decoupled(model, {0, 1})
    with pytest.raises(AssumptionError, match="decoupling probe failed"):
        check_decoupled(model, {0})


def test_mixed_step_keeps_hidden_mean_field(major_minor_model):
    laws = LawSpace(major_minor_model)
    p = MixedState(components=(np.array([1.0, 1.0]), np.array([1.0, 0.0])), observed=frozenset({0}))
    gamma = laws.profile(laws.size - 1)
    nxt = mixed_step(major_minor_model, 1, p, gamma, [[1, 1], None])
    np.testing.assert_allclose(nxt.components[1], hat_f(major_minor_model, 1, p.values(), gamma)[1])
    assert nxt.components[0].sum() == pytest.approx(2.0)
    assert nxt.observed == frozenset({0})


def test_hat_f_is_affine_for_constant_kernels(major_minor_model):
    assert major_minor_model.is_decoupled
    laws = LawSpace(major_minor_model)
    rng = np.random.default_rng(17)
    for _ in range(20):
        z1 = tuple(rng.dirichlet(np.ones(sp.m)) for sp in major_minor_model.subpops)
        z2 = tuple(rng.dirichlet(np.ones(sp.m)) for sp in major_minor_model.subpops)
        a = float(rng.random())
        mix = tuple(a * u + (1 - a) * v for u, v in zip(z1, z2))
        gamma = laws.profile(int(rng.integers(laws.size)))
        left = hat_f(major_minor_model, 1, mix, gamma)
        right = [a * u + (1 - a) * v for u, v in zip(hat_f(major_minor_model, 1, z1, gamma),
                                                     hat_f(major_minor_model, 1, z2, gamma))]
        for x, y in zip(left, right):
            assert np.max(np.abs(x - y)) <= 1e-12
