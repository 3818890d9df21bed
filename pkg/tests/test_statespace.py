from fractions import Fraction
from math import comb, prod

import numpy as np
import pytest

from deepteam.exceptions import CapExceededError, SolverError
from deepteam.statespace.grid import Grid, count_grid, quantize
from deepteam.statespace.lattice import (
    Lattice, count_deep_states, empirical, enumerate_deep_states, nearest_lattice_point, rank_deep_state,
    unrank_deep_state,
)
from deepteam.statespace.laws import LawSpace, enumerate_local_laws
from deepteam.statespace.noise import enumerate_noise_empiricals
from deepteam.statespace.schemas import DeepState, GridPoint
from deepteam.statespace.space import ProductSpace
from tests.conftest import build, coupled_schema


def test_lattice_counting_and_ranking():
    for n in range(13):
        for m in range(1, 6):
            points = enumerate_deep_states(n, m)
            assert points.shape == (comb(n + m - 1, m - 1), m)
            assert count_deep_states(n, m) == points.shape[0]
            assert (points.sum(axis=1) == n).all()
            for i in range(0, points.shape[0], max(1, points.shape[0] // 25)):
                assert rank_deep_state(points[i]) == i
                assert unrank_deep_state(i, n, m) == tuple(points[i])


def test_lattice_is_lexicographic():
    points = [tuple(p) for p in enumerate_deep_states(3, 3)]
    assert points == sorted(points)
    assert points[0] == (0, 0, 3)
    assert points[-1] == (3, 0, 0)


def test_lattice_rank_index():
    lattice = Lattice(4, 3)
    for i, point in enumerate(lattice.points):
        assert lattice.rank(point) == i
    np.testing.assert_allclose(lattice.values.sum(axis=1), 1.0)


def test_lattice_cap():
    with pytest.raises(CapExceededError, match="deep-state lattice"):
        enumerate_deep_states(50, 6, cap=10)


def test_unrank_out_of_range():
    with pytest.raises(SolverError):
        unrank_deep_state(10, 3, 2)


def test_empirical_is_exact():
    assert empirical(["a", "b", "a"], ["a", "b"]) == (Fraction(2, 3), Fraction(1, 3))


def test_law_space_size_minor_and_major(functional_model, major_minor_model):
    assert LawSpace(functional_model).size == 2 ** 2
    laws = enumerate_local_laws(major_minor_model)
    # основной агент: только постоянные законы
    assert laws.size == 2 ** 2 * 2
    for profile in laws:
        assert len(set(profile[1].tolist())) == 1


def test_law_space_counting_identity():
    model = build(coupled_schema())
    laws = LawSpace(model)
    assert laws.size == prod(sp.a ** sp.m for sp in model.subpops)
    for g in range(laws.size):
        assert laws.index_of(laws.profile(g)) == g
    assert laws.decode(1) == [(0, "0", "0"), (0, "1", "1")]


def test_quantize_ties_round_down():
    assert quantize([0.25, 0.75], 2).tolist() == [0, 1]
    assert quantize([Fraction(1, 4), Fraction(3, 4)], 2).tolist() == [0, 1]
    assert quantize([0.3, 0.7], 2).tolist() == [1, 1]
    with pytest.raises(SolverError):
        quantize([0.5], 0)


@pytest.mark.parametrize("m, r", [(2, 3), (3, 4), (4, 2), (3, 7)])
def test_near_simplex_grid_covers_quantized_simplex(m, r):
    grid = Grid(m, r)
    assert grid.size == count_grid(m, r, near_simplex=True)
    assert grid.size <= count_grid(m, r, near_simplex=False)
    rng = np.random.default_rng(m * 10 + r)
    for _ in range(200):
        index = grid.locate_values(rng.dirichlet(np.ones(m)))
        assert 0 <= index < grid.size


def test_grid_contains_lattice_when_r_equals_n():
    grid = Grid(3, 5)
    lattice = Lattice(5, 3)
    for point in lattice.points:
        assert (grid.points[grid.locate(point)] == point).all()


def test_nearest_lattice_point():
    assert nearest_lattice_point(np.array([0.5, 0.5]), 1).tolist() == [1, 0]
    assert nearest_lattice_point(np.array([0.2, 0.3, 0.5]), 10).tolist() == [2, 3, 5]
    assert nearest_lattice_point(np.array([0.4, 0.4, 0.4]), 4).sum() == 4


def test_product_space_split_join():
    space = ProductSpace([Lattice(2, 2), Lattice(1, 3), Grid(2, 2)])
    assert space.shape == (3, 3, space.components[2].size)
    for rank in range(space.size):
        assert space.join(space.split(rank)) == rank
    # k=1 - старший разряд
    assert space.split(space.shape[1] * space.shape[2]) == (1, 0, 0)


def test_noise_empiricals_weights():
    empiricals = enumerate_noise_empiricals(4, [0.2, 0.3, 0.5])
    assert len(empiricals) == comb(6, 2)
    assert sum(e.weight for e in empiricals) == pytest.approx(1.0, abs=1e-12)
    assert len(enumerate_noise_empiricals(3, [1.0, 0.0])) == 1


def test_deep_state_and_grid_point_values():
    state = DeepState.from_arrays([np.array([1, 3]), np.array([0, 1])])
    assert state.counts == ((1, 3), (0, 1))
    np.testing.assert_allclose(state.values()[0], [0.25, 0.75])
    with pytest.raises(ValueError):
        DeepState(counts=((1, -1),))
    point = GridPoint(numerators=((1, 2), (3, 1)), quantized=frozenset({0}), r=4)
    np.testing.assert_allclose(point.values()[0], [0.25, 0.5])
    np.testing.assert_allclose(point.values()[1], [0.75, 0.25])


def test_empirical_ignores_sample_order():
    rng = np.random.default_rng(5)
    alphabet = ["a", "b", "c", "d"]
    for _ in range(20):
        samples = list(rng.choice(alphabet, size=int(rng.integers(1, 12))))
        expected = empirical(samples, alphabet)
        assert sum(expected) == 1
        for _ in range(5):
            assert empirical(list(rng.permutation(samples)), alphabet) == expected
