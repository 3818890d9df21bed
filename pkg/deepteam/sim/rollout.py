import math
from typing import Sequence

import numpy as np
from loguru import logger

from deepteam.kernel.dynamics import ell, model_phi
from deepteam.model.models import StateActionDist, TeamModel, at_time
from deepteam.sim.schemas import RolloutNoise, Trajectory
from deepteam.sim.strategies import Strategy
from deepteam.statespace.laws import LawSpace


def inverse_cdf(pmf: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Индекс символа по равномерному числу в порядке алфавита."""
    cdf = np.cumsum(np.asarray(pmf, dtype=float))
    return np.minimum(np.searchsorted(cdf, uniforms, side="right"), cdf.size - 1)


def draw_noise(model: TeamModel, horizon: int, rng: np.random.Generator) -> RolloutNoise:
    return RolloutNoise(init=tuple(rng.random(sp.size) for sp in model.subpops),
                        steps=tuple(rng.random((horizon, sp.size)) for sp in model.subpops))


def initial_states(model: TeamModel, uniforms: Sequence[np.ndarray]) -> list[np.ndarray]:
    states = []
    for sp, u in zip(model.subpops, uniforms):
        if sp.init_states is not None:
            states.append(np.asarray(sp.init_states, dtype=np.int64))
        else:
            states.append(inverse_cdf(sp.init_pmf, u))
    return states


def step_agents(model: TeamModel, t: int, states: Sequence[np.ndarray], gamma: Sequence[np.ndarray],
                dist: StateActionDist, uniforms: Sequence[np.ndarray]) -> list[np.ndarray]:
    """
    Шаг всех агентов. Для подпопуляций с функциональной динамикой число задаёт шум,
    иначе - следующее состояние по строке ядра.
    """
    out = []
    for sp, x, law, u in zip(model.subpops, states, gamma, uniforms):
        if sp.dynamics is not None:
            noise = inverse_cdf(at_time(sp.noise_pmf, t), u)
            table = np.array([[sp.dynamics.next_state(t, s, int(law[s]), dist, w) for w in range(len(sp.noises))]
                              for s in range(sp.m)], dtype=np.int64)
            out.append(table[x, noise])
        else:
            cdf = np.cumsum(sp.kernel.rows(t, law, dist), axis=1)
            nxt = (u[:, None] >= cdf[x]).sum(axis=1)
            out.append(np.minimum(nxt, sp.m - 1))
    return out


def agent_counts(model: TeamModel, states: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [np.bincount(x, minlength=sp.m) for sp, x in zip(model.subpops, states)]


def effective_horizon(beta: float, cost_bound: float, target: float) -> int:
    """Наименьший T с beta^T c / (1 - beta) <= target."""
    if cost_bound <= 0:
        return 1
    return max(1, math.ceil(math.log(target * (1.0 - beta) / cost_bound) / math.log(beta)))


def simulate_rollout(model: TeamModel, strategy: Strategy, horizon: int | None = None, seed: int = 0, rep: int = 0,
                     noise: RolloutNoise | None = None, laws: LawSpace | None = None) -> Trajectory:
    """
    Одна реализация системы из sum_k n_k агентов под стратегией.
    Поток случайных чисел реплики rep - функция (seed, rep).
    """
    horizon = horizon or model.T
    laws = laws or LawSpace(model)
    noise = noise or draw_noise(model, horizon, np.random.default_rng([seed, rep]))
    states = initial_states(model, noise.init)
    counts = agent_counts(model, states)
    memory = strategy.start(counts)
    beta = model.beta if model.horizon.discounted else 1.0
    path, gammas, costs = [], [], []
    total = 0.0
    for t in range(1, horizon + 1):
        g = strategy.select(t, counts, memory)
        gamma = laws.profile(g)
        z = [c / sp.size for c, sp in zip(counts, model.subpops)]
        cost = ell(model, t, z, gamma)
        path.append(tuple(tuple(int(c) for c in block) for block in counts))
        gammas.append(g)
        costs.append(cost)
        total += beta ** (t - 1) * cost
        if t == horizon:
            break
        dist = model_phi(model, z, gamma)
        states = step_agents(model, t, states, gamma, dist, [u[t - 1] for u in noise.steps])
        counts = agent_counts(model, states)
        memory = strategy.advance(memory, t, g, counts)
    logger.debug(f"Реплика {rep}: стоимость {total:.6g} за {horizon} шагов")
    return Trajectory(rep=rep, counts=path, gammas=gammas, costs=costs, total=total,
                      discounted=model.horizon.discounted)
