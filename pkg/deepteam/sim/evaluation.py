import math

import numpy as np
from loguru import logger
from scipy.stats import norm

from deepteam.config import settings
from deepteam.exceptions import ModelValidationError
from deepteam.kernel.dynamics import ell
from deepteam.kernel.transition import initial_distribution, joint_transition, lattices_for
from deepteam.model.models import TeamModel
from deepteam.scheduler.pool import run_ordered
from deepteam.sim.rollout import draw_noise, effective_horizon, simulate_rollout
from deepteam.sim.schemas import GapEstimate, StrategyEvaluation
from deepteam.sim.strategies import Strategy
from deepteam.statespace.laws import LawSpace
from deepteam.statespace.space import ProductSpace

# двусторонний 95% квантиль нормального распределения
Z_95 = float(norm.ppf(0.975))


def path_count(model: TeamModel, cap: int | None = None) -> float:
    """Оценка сверху числа путей глубокого состояния за горизонт."""
    if model.T is None:
        return math.inf
    states = math.prod(l.size for l in lattices_for(model, cap))
    return states ** model.T


def cost_bound(model: TeamModel, probes: int = 256, seed: int = 0) -> float:
    """Оценка max c по случайным точкам симплекса и профилям."""
    rng = np.random.default_rng(seed)
    laws = LawSpace(model)
    best = 0.0
    for _ in range(probes):
        z = [rng.dirichlet(np.ones(sp.m)) for sp in model.subpops]
        best = max(best, ell(model, 1, z, laws.profile(int(rng.integers(laws.size)))))
    return best


def exact_value(model: TeamModel, strategy: Strategy, cap: int | None = None) -> float:
    """
    Точная стоимость стратегии перебором всех путей глубокого состояния
    с законом перехода joint_transition.
    """
    lattices = lattices_for(model, cap)
    space = ProductSpace(lattices, cap)
    laws = LawSpace(model, cap)
    T = model.T

    def counts_of(rank: int) -> list[np.ndarray]:
        return [lattices[k].points[i] for k, i in enumerate(space.split(rank))]

    def expected(t: int, rank: int, memory) -> float:
        counts = counts_of(rank)
        g = strategy.select(t, counts, memory)
        gamma = laws.profile(g)
        z = [c / sp.size for c, sp in zip(counts, model.subpops)]
        total = ell(model, t, z, gamma)
        if t == T:
            return total
        row = joint_transition(model, t, counts, gamma, cap=cap, lattices=lattices)
        for nxt, p in zip(row.ranks, row.probs):
            total += p * expected(t + 1, nxt, strategy.advance(memory, t, g, counts_of(nxt)))
        return total

    ranks, probs = initial_distribution(model, space)
    return math.fsum(float(p) * expected(1, int(r), strategy.start(counts_of(int(r)))) for r, p in zip(ranks, probs))


def _use_exact(model: TeamModel, exact: bool | None, cap: int | None) -> bool:
    if exact is not None:
        return exact
    return model.T is not None and path_count(model, cap) <= settings.EXACT_PATH_LIMIT


def _horizon(model: TeamModel, horizon: int | None, target: float) -> tuple[int, float]:
    if model.T is not None:
        return model.T, 0.0
    bound = cost_bound(model)
    horizon = horizon or effective_horizon(model.beta, bound, target)
    return horizon, model.beta ** horizon * bound / (1.0 - model.beta)


def _totals(model: TeamModel, strategy: Strategy, horizon: int, reps: int, seed: int,
            workers: int | None) -> np.ndarray:
    laws = LawSpace(model)
    return np.array(run_ordered(lambda j: simulate_rollout(model, strategy, horizon, seed, j, laws=laws).total,
                                list(range(reps)), workers))


def evaluate_strategy(model: TeamModel, strategy: Strategy, reps: int = 100, seed: int = 0,
                      horizon: int | None = None, exact: bool | None = None, target: float = 1e-3,
                      cap: int | None = None, workers: int | None = None) -> StrategyEvaluation:
    """
    Средняя стоимость стратегии и полуширина 95% интервала. При числе путей
    не больше EXACT_PATH_LIMIT стоимость считается точно, интервал равен 0.
    """
    if _use_exact(model, exact, cap):
        value = exact_value(model, strategy, cap)
        logger.info(f"Точная оценка {strategy.name}: J = {value:.10g}")
        return StrategyEvaluation(strategy=strategy.name, mean=value, ci_half=0.0, reps=0, seed=seed, exact=True,
                                  horizon=model.T)
    if reps < 2:
        raise ModelValidationError(f"evaluate_strategy needs at least 2 replications, got {reps}")
    horizon, remainder = _horizon(model, horizon, target)
    logger.info(f"Оценка {strategy.name}: {reps} реплик, горизонт {horizon}, остаток {remainder:.3g}")
    totals = _totals(model, strategy, horizon, reps, seed, workers)
    half = Z_95 * float(totals.std(ddof=1)) / math.sqrt(reps)
    return StrategyEvaluation(strategy=strategy.name, mean=float(totals.mean()), ci_half=half, reps=reps,
                              seed=seed, horizon=horizon, truncation=remainder)


def empirical_gap(model: TeamModel, strategy_a: Strategy, strategy_b: Strategy, reps: int = 100, seed: int = 0,
                  horizon: int | None = None, exact: bool | None = None, target: float = 1e-3,
                  cap: int | None = None, workers: int | None = None) -> GapEstimate:
    """
    |J_A - J_B| с общими случайными числами: обе стратегии в реплике j
    используют один и тот же поток (seed, j).
    """
    if _use_exact(model, exact, cap):
        a = exact_value(model, strategy_a, cap)
        b = exact_value(model, strategy_b, cap)
        return GapEstimate(gap=abs(a - b), ci_half=0.0, mean_a=a, mean_b=b, reps=0, seed=seed, exact=True)
    if reps < 2:
        raise ModelValidationError(f"empirical_gap needs at least 2 replications, got {reps}")
    horizon, _ = _horizon(model, horizon, target)
    laws = LawSpace(model)

    def paired(j: int) -> tuple[float, float]:
        noise = draw_noise(model, horizon, np.random.default_rng([seed, j]))
        a = simulate_rollout(model, strategy_a, horizon, seed, j, noise=noise, laws=laws).total
        b = simulate_rollout(model, strategy_b, horizon, seed, j, noise=noise, laws=laws).total
        return a, b

    pairs = np.array(run_ordered(paired, list(range(reps)), workers))
    diff = pairs[:, 0] - pairs[:, 1]
    half = Z_95 * float(diff.std(ddof=1)) / math.sqrt(reps)
    logger.info(f"Разрыв {strategy_a.name} - {strategy_b.name}: {float(diff.mean()):.6g} ± {half:.3g}")
    return GapEstimate(gap=abs(float(diff.mean())), ci_half=half, mean_a=float(pairs[:, 0].mean()),
                       mean_b=float(pairs[:, 1].mean()), reps=reps, seed=seed)
