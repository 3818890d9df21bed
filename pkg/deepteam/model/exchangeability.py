from itertools import combinations, product
from typing import Any, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from deepteam.config import settings
from deepteam.exceptions import check_cap
from deepteam.model.models import (
    CallableDynamics, CallableJointCost, CostSpec, FunctionalKernel, Horizon, RawAgentModel, StateActionDist,
    SubPopSpec, TeamModel,
)


class ExchangeabilityResult(BaseModel):
    passed: bool
    checked: int
    counterexample: dict[str, Any] | None = None


def _swap(values: tuple[int, ...], i: int, j: int) -> tuple[int, ...]:
    out = list(values)
    out[i], out[j] = out[j], out[i]
    return tuple(out)


def _check_one(raw: RawAgentModel, t: int, x, u, w, i: int, j: int) -> dict[str, Any] | None:
    nxt = raw.dynamics(t, x, u, w)
    swapped = raw.dynamics(t, _swap(x, i, j), _swap(u, i, j), _swap(w, i, j))
    case = {"t": t, "x": list(x), "u": list(u), "w": list(w), "transposition": (i + 1, j + 1)}
    if tuple(swapped) != _swap(tuple(nxt), i, j):
        return {**case, "kind": "dynamics"}
    if raw.cost(t, x, u) != raw.cost(t, _swap(x, i, j), _swap(u, i, j)):
        return {**case, "kind": "cost"}
    return None


def check_partial_exchangeability(raw: RawAgentModel, trials: int = 1000, seed: int = 0,
                                  exhaustive: bool = False) -> ExchangeabilityResult:
    """
    Проверяет, что перестановка двух агентов одной подпопуляции не меняет
    динамику и стоимость. Возвращает первый найденный контрпример.
    """
    blocks = raw.blocks()
    pairs = [(i, j) for block in blocks for i, j in combinations(block, 2)]
    agents = [(p, len(p.states), len(p.actions), len(p.noises)) for p in raw.partition for _ in range(p.size)]
    if not pairs:
        logger.info("Нет подпопуляций из двух и более агентов: проверять нечего")
        return ExchangeabilityResult(passed=True, checked=0)

    if exhaustive:
        tuples = int(np.prod([mx * mu * mw for _, mx, mu, mw in agents], dtype=object)) * raw.T
        check_cap("exchangeability check", "T * prod_i |X||U||W| * pairs * 4", tuples * len(pairs) * 4,
                  settings.EXCHANGEABILITY_GUARD)
        logger.info(f"Полная проверка перестановочности: {tuples} кортежей, {len(pairs)} транспозиций")
        checked = 0
        for t in range(1, raw.T + 1):
            for x in product(*[range(mx) for _, mx, _, _ in agents]):
                for u in product(*[range(mu) for _, _, mu, _ in agents]):
                    for w in product(*[range(mw) for _, _, _, mw in agents]):
                        for i, j in pairs:
                            checked += 1
                            found = _check_one(raw, t, x, u, w, i, j)
                            if found:
                                logger.warning(f"Найден контрпример: {found}")
                                return ExchangeabilityResult(passed=False, checked=checked, counterexample=found)
        return ExchangeabilityResult(passed=True, checked=checked)

    check_cap("exchangeability check", "trials * 4", trials * 4, settings.EXCHANGEABILITY_GUARD)
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        t = int(rng.integers(1, raw.T + 1))
        x = tuple(int(rng.integers(mx)) for _, mx, _, _ in agents)
        u = tuple(int(rng.integers(mu)) for _, _, mu, _ in agents)
        w = tuple(int(rng.integers(mw)) for _, _, _, mw in agents)
        i, j = pairs[int(rng.integers(len(pairs)))]
        found = _check_one(raw, t, x, u, w, i, j)
        if found:
            logger.warning(f"Найден контрпример на испытании {trial}: {found}")
            return ExchangeabilityResult(passed=False, checked=trial + 1, counterexample=found)
    logger.info(f"Перестановочность подтверждена на {trials} испытаниях")
    return ExchangeabilityResult(passed=True, checked=trials)


def canonical_configuration(raw: RawAgentModel, dist: StateActionDist,
                            focus: tuple[int, int, int] | None = None) -> tuple[list[int], list[int], list[int]]:
    """
    Совместная конфигурация (x, u), реализующая D: пары упорядочены
    лексикографически; агент focus=(k, x, u) ставится первым в блоке k.
    Возвращает x, u и начала блоков.
    """
    xs, us, starts = [], [], []
    for k, (p, block) in enumerate(zip(raw.partition, dist)):
        counts = np.rint(np.asarray(block) * p.size).astype(int)
        cells = [(x, u) for x in range(len(p.states)) for u in range(len(p.actions)) for _ in range(counts[x, u])]
        if focus is not None and focus[0] == k:
            cell = (focus[1], focus[2])
            if cell in cells:
                cells.remove(cell)
            cells.insert(0, cell)
        cells = (cells + [(0, 0)] * p.size)[:p.size]
        starts.append(len(xs))
        xs += [c[0] for c in cells]
        us += [c[1] for c in cells]
    return xs, us, starts


def reduce_raw_model(raw: RawAgentModel, noise_pmfs: Sequence[Sequence[float]], init_pmfs: Sequence[Sequence[float]],
                     horizon: Horizon) -> TeamModel:
    """
    Модель команды для частично перестановочной модели агентов:
    f^k(x, u, D, w) и c(D) вычисляются на канонической конфигурации,
    реализующей D (определены в точках решётки).
    """

    def dynamics_for(k: int):
        def fn(t: int, x: int, u: int, dist: StateActionDist, w: int) -> int:
            xs, us, starts = canonical_configuration(raw, dist, focus=(k, x, u))
            ws = [0] * len(xs)
            ws[starts[k]] = w
            return raw.dynamics(t, tuple(xs), tuple(us), tuple(ws))[starts[k]]
        return fn

    def joint_cost(t: int, dist: StateActionDist) -> float:
        xs, us, _ = canonical_configuration(raw, dist)
        return raw.cost(t, tuple(xs), tuple(us))

    subpops = []
    for k, p in enumerate(raw.partition):
        dynamics = CallableDynamics(dynamics_for(k))
        pmf = np.atleast_2d(np.asarray(noise_pmfs[k], dtype=float))
        subpops.append(SubPopSpec(
            name=p.name, size=p.size, states=p.states, actions=p.actions, noises=p.noises, noise_pmf=pmf,
            init_pmf=np.asarray(init_pmfs[k], dtype=float), kernel=FunctionalKernel(dynamics, pmf, len(p.states)),
            dynamics=dynamics,
        ))
    logger.info(f"Модель агентов сведена к модели команды: {len(subpops)} подпопуляций")
    return TeamModel(subpops=tuple(subpops), cost=CostSpec(joint=CallableJointCost(joint_cost)), horizon=horizon)
