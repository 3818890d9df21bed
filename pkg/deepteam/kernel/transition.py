import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel
from scipy import signal
from scipy.special import gammaln
from scipy.stats import binom

from deepteam.config import settings
from deepteam.exceptions import SolverError, check_cap
from deepteam.kernel.dynamics import model_phi
from deepteam.model.models import StateActionDist, TeamModel, at_time
from deepteam.statespace.lattice import Lattice
from deepteam.statespace.noise import enumerate_noise_empiricals, multinomial_log_pmf
from deepteam.statespace.space import ProductSpace


class TransitionRow(BaseModel):
    """Распределение следующего глубокого состояния: пары (ранг, вероятность)."""
    ranks: list[int]
    probs: list[float]

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.ranks, self.probs))


def deep_values(model: TeamModel, counts: Sequence[Sequence[int]]) -> tuple[np.ndarray, ...]:
    return tuple(np.asarray(c, dtype=float) / sp.size for sp, c in zip(model.subpops, counts))


def dck_marginal(model: TeamModel, t: int, k: int, y: int, counts: Sequence[Sequence[int]],
                 gamma: Sequence[np.ndarray]) -> np.ndarray:
    """
    Закон числа агентов подпопуляции k в состоянии y на следующем шаге:
    свёртка по x биномиальных законов Bin(n d(x), P(y | x, gamma(x), D)).
    """
    sp = model.subpops[k]
    dist = model_phi(model, deep_values(model, counts), gamma)
    rows = sp.kernel.rows(t, gamma[k], dist)
    out = np.array([1.0])
    for x, c in enumerate(counts[k]):
        c = int(c)
        if c == 0:
            continue
        p = float(np.clip(rows[x, y], 0.0, 1.0))
        out = np.convolve(out, binom.pmf(np.arange(c + 1), c, p))
    return out


@lru_cache(maxsize=4096)
def _index_grid(c: int, dims: int) -> tuple[np.ndarray, np.ndarray]:
    grid = np.indices((c + 1,) * dims).reshape(dims, -1).T
    last = c - grid.sum(axis=1)
    return grid, last


def multinomial_dense(c: int, row: np.ndarray) -> np.ndarray:
    """Мультиномиальный закон c агентов по m состояниям на координатах 1..m-1."""
    m = row.size
    if m == 1:
        return np.array(1.0)
    grid, last = _index_grid(c, m - 1)
    valid = last >= 0
    full = np.hstack([grid, np.maximum(last, 0)[:, None]])
    logp = multinomial_log_pmf(full, row)
    pmf = np.where(valid, np.exp(logp), 0.0)
    return pmf.reshape((c + 1,) * (m - 1))


def subpop_dense(rows: np.ndarray, counts: Sequence[int]) -> np.ndarray:
    """Свёртка мультиномиальных законов по исходным состояниям (плотный массив)."""
    m = rows.shape[1]
    out = np.ones((1,) * (m - 1)) if m > 1 else np.array(1.0)
    for x, c in enumerate(counts):
        c = int(c)
        if c == 0:
            continue
        part = multinomial_dense(c, np.clip(rows[x], 0.0, 1.0))
        out = signal.convolve(out, part, method="direct") if m > 1 else out * part
    return out


def subpop_row(model: TeamModel, t: int, k: int, lattice: Lattice, counts: Sequence[int],
               dist: StateActionDist, law: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Переход подпопуляции k из счётчиков counts при распределении D: (ранги, вероятности)."""
    rows = model.subpops[k].kernel.rows(t, law, dist)
    ranks, probs = lattice.rank_dense(subpop_dense(rows, counts))
    keep = probs > settings.PRUNE_BELOW
    return ranks[keep], probs[keep]


def combine_rows(parts: Sequence[tuple[np.ndarray, np.ndarray]], shape: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Произведение независимых законов по подпопуляциям в ранги пространства-произведения."""
    ranks = np.zeros(1, dtype=np.int64)
    probs = np.ones(1)
    for (r, p), size in zip(parts, shape):
        ranks = (ranks[:, None] * size + r[None, :]).ravel()
        probs = (probs[:, None] * p[None, :]).ravel()
    keep = probs > settings.PRUNE_BELOW
    order = np.argsort(ranks[keep], kind="stable")
    return ranks[keep][order], probs[keep][order]


def lattices_for(model: TeamModel, cap: int | None = None) -> list[Lattice]:
    return [Lattice(sp.size, sp.m, cap) for sp in model.subpops]


def joint_transition(model: TeamModel, t: int, counts: Sequence[Sequence[int]], gamma: Sequence[np.ndarray],
                     cap: int | None = None, lattices: Sequence[Lattice] | None = None) -> TransitionRow:
    """
    Точный закон следующего глубокого состояния: для каждой подпопуляции
    свёртка мультиномиальных законов по исходным состояниям, затем произведение по k.
    """
    lattices = lattices or lattices_for(model, cap)
    check_cap("transition support", "prod_k |lattice_k|", math.prod(l.size for l in lattices), cap)
    dist = model_phi(model, deep_values(model, counts), gamma)
    parts = [subpop_row(model, t, k, lattices[k], counts[k], dist, gamma[k]) for k in range(model.K)]
    ranks, probs = combine_rows(parts, [l.size for l in lattices])
    return TransitionRow(ranks=ranks.tolist(), probs=probs.tolist())


def _allocations(row_sums: Sequence[int], col_sums: Sequence[int]):
    """Все таблицы сопряжённости с заданными суммами строк и столбцов."""
    if not row_sums:
        if all(c == 0 for c in col_sums):
            yield []
        return
    first, rest = row_sums[0], row_sums[1:]

    def fill(j: int, left: int, remaining: list[int], acc: list[int]):
        if j == len(remaining) - 1:
            if left <= remaining[j]:
                yield acc + [left]
            return
        for v in range(min(left, remaining[j]) + 1):
            yield from fill(j + 1, left - v, remaining, acc + [v])

    for row in fill(0, first, list(col_sums), []):
        rest_cols = [c - v for c, v in zip(col_sums, row)]
        for tail in _allocations(rest, rest_cols):
            yield [row] + tail


def subpop_transition_by_noise(model: TeamModel, t: int, k: int, counts: Sequence[int], dist: StateActionDist,
                               law: np.ndarray, cap: int | None = None) -> dict[tuple[int, ...], float]:
    """
    Закон следующих счётчиков подпопуляции k через перечисление эмпирических
    распределений шума: мультимножество шумов распределяется по группам
    агентов одного состояния равновероятно (гипергеометрический закон).
    """
    sp = model.subpops[k]
    if sp.dynamics is None:
        raise SolverError(settings.ERROR_MESSAGES["functional"].format(k=sp.name))
    n = sp.size
    sources = [x for x, c in enumerate(counts) if c > 0]
    row_sums = [int(counts[x]) for x in sources]
    targets = {(x, w): sp.dynamics.next_state(t, x, int(law[x]), dist, w)
               for x in sources for w in range(len(sp.noises))}
    out: dict[tuple[int, ...], float] = {}
    for noise in enumerate_noise_empiricals(n, at_time(sp.noise_pmf, t), cap):
        col = list(noise.counts)
        base = float(gammaln(np.asarray(row_sums) + 1).sum() + gammaln(np.asarray(col) + 1).sum() - gammaln(n + 1))
        for table in _allocations(row_sums, col):
            nxt = [0] * sp.m
            for x, row in zip(sources, table):
                for w, a in enumerate(row):
                    if a:
                        nxt[targets[(x, w)]] += a
            logp = base - float(gammaln(np.asarray(table) + 1).sum())
            key = tuple(nxt)
            out[key] = out.get(key, 0.0) + noise.weight * math.exp(logp)
    return out


def joint_transition_by_noise(model: TeamModel, t: int, counts: Sequence[Sequence[int]], gamma: Sequence[np.ndarray],
                              cap: int | None = None, lattices: Sequence[Lattice] | None = None) -> TransitionRow:
    """Тот же закон, что и joint_transition, но через перечисление шума (для функциональных моделей)."""
    lattices = lattices or lattices_for(model, cap)
    dist = model_phi(model, deep_values(model, counts), gamma)
    parts = []
    for k in range(model.K):
        law = subpop_transition_by_noise(model, t, k, counts[k], dist, gamma[k], cap)
        ranks = np.array([lattices[k].rank(c) for c in law], dtype=np.int64)
        parts.append((ranks, np.array(list(law.values()))))
    ranks, probs = combine_rows(parts, [l.size for l in lattices])
    # одинаковые ранги от разных размещений уже сложены внутри подпопуляции
    return TransitionRow(ranks=ranks.tolist(), probs=probs.tolist())


def initial_subpop_distribution(model: TeamModel, k: int, lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """Закон d^k_1: мультиномиальный по init_pmf либо точечный для явных начальных состояний."""
    sp = model.subpops[k]
    if sp.init_states is not None:
        counts = np.bincount(np.asarray(sp.init_states), minlength=sp.m)
        return np.array([lattice.rank(counts)], dtype=np.int64), np.array([1.0])
    probs = np.exp(multinomial_log_pmf(lattice.points, np.asarray(sp.init_pmf, dtype=float)))
    keep = probs > 0
    return np.nonzero(keep)[0].astype(np.int64), probs[keep]


def initial_distribution(model: TeamModel, space: ProductSpace) -> tuple[np.ndarray, np.ndarray]:
    """Закон начального глубокого состояния в рангах пространства-произведения решёток."""
    parts = [initial_subpop_distribution(model, k, space.components[k]) for k in range(model.K)]
    ranks, probs = combine_rows(parts, space.shape)
    logger.debug(f"Начальное распределение: {ranks.size} состояний")
    return ranks, probs

