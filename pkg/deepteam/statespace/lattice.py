from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Hashable, Sequence

import numpy as np
from loguru import logger

from deepteam.exceptions import ModelValidationError, SolverError, check_cap


def empirical(samples: Sequence[Hashable], alphabet: Sequence[Hashable]) -> tuple[Fraction, ...]:
    """Эмпирическое распределение выборки над алфавитом, в рациональной арифметике."""
    if not samples:
        raise ModelValidationError("empirical: sample list is empty")
    index = {symbol: j for j, symbol in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for sample in samples:
        if sample not in index:
            raise ModelValidationError(f"empirical: sample {sample!r} is not in alphabet {list(alphabet)}")
        counts[index[sample]] += 1
    n = len(samples)
    return tuple(Fraction(c, n) for c in counts)


def count_deep_states(n: int, m: int) -> int:
    return comb(n + m - 1, m - 1)


@lru_cache(maxsize=256)
def _compositions(n: int, m: int) -> np.ndarray:
    if m == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n + 1):
        tail = _compositions(n - first, m - 1)
        head = np.full((tail.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, tail]))
    return np.vstack(blocks)


def enumerate_deep_states(n: int, m: int, cap: int | None = None) -> np.ndarray:
    """
    Все разбиения n на m неотрицательных слагаемых в лексикографическом порядке.

    Возвращает массив формы (C(n+m-1, m-1), m) целых счётчиков.
    """
    if n < 0 or m < 1:
        raise ModelValidationError(f"enumerate_deep_states: invalid (n={n}, m={m})")
    check_cap("deep-state lattice", f"C({n}+{m}-1,{m}-1)", count_deep_states(n, m), cap)
    points = _compositions(n, m)
    points.flags.writeable = False
    return points


def rank_deep_state(counts: Sequence[int]) -> int:
    """Ранг вектора счётчиков в лексикографическом перечислении."""
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise SolverError(f"rank_deep_state: negative count in {counts}")
    m = len(counts)
    remaining = sum(counts)
    rank = 0
    for i in range(m - 1):
        q = m - i - 1
        c = counts[i]
        rank += comb(remaining + q, q) - comb(remaining - c + q, q)
        remaining -= c
    return rank


def unrank_deep_state(rank: int, n: int, m: int) -> tuple[int, ...]:
    total = count_deep_states(n, m)
    if not 0 <= rank < total:
        raise SolverError(f"unrank_deep_state: rank {rank} out of range 0..{total - 1} for (n={n}, m={m})")
    counts = []
    remaining = n
    for i in range(m - 1):
        q = m - i - 1
        value = 0
        while True:
            block = comb(remaining - value + q - 1, q - 1)
            if rank < block:
                break
            rank -= block
            value += 1
        counts.append(value)
        remaining -= value
    counts.append(remaining)
    return tuple(counts)


class Lattice:
    """Решётка эмпирических распределений одной подпопуляции (n агентов, m состояний)."""

    exact = True

    def __init__(self, n: int, m: int, cap: int | None = None):
        self.n = n
        self.m = m
        self.points = enumerate_deep_states(n, m, cap)
        self.size = self.points.shape[0]
        self.values = self.points / float(n)
        # плотная таблица рангов по первым m-1 координатам
        check_cap("deep-state rank index", f"({n}+1)^({m}-1)", (n + 1) ** (m - 1), cap)
        self._index = np.full((n + 1,) * (m - 1), -1, dtype=np.int64) if m > 1 else None
        if m > 1:
            self._index[tuple(self.points[:, :-1].T)] = np.arange(self.size)
        logger.debug(f"Решётка n={n}, m={m}: {self.size} точек")

    def rank(self, counts: Sequence[int]) -> int:
        if self.m == 1:
            return 0
        return int(self._index[tuple(int(c) for c in counts[:-1])])

    def rank_dense(self, dense: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Переводит плотный массив по координатам 1..m-1 в пары (ранг, вероятность)."""
        if self.m == 1:
            return np.zeros(1, dtype=np.int64), np.array([float(dense.sum())])
        mask = self._index >= 0
        return self._index[mask], dense[mask]

    def anchor(self, values: np.ndarray) -> np.ndarray:
        return nearest_lattice_point(values, self.n)


def nearest_lattice_point(values: np.ndarray, n: int) -> np.ndarray:
    """
    Ближайшая точка решётки для вектора на симплексе (или рядом с ним).

    Метод наибольших остатков; при равенстве остатков выигрывает меньший индекс.
    """
    values = np.clip(np.asarray(values, dtype=float), 0.0, None)
    total = values.sum()
    scaled = values * n / total if total > 0 else np.full(values.shape, n / values.size)
    base = np.floor(scaled + 1e-12).astype(np.int64)
    base = np.minimum(base, n)
    deficit = n - int(base.sum())
    if deficit > 0:
        remainders = scaled - base
        order = sorted(range(values.size), key=lambda j: (-round(remainders[j], 12), j))
        for j in order[:deficit]:
            base[j] += 1
    elif deficit < 0:
        order = sorted(range(values.size), key=lambda j: (round(scaled[j] - base[j], 12), -j))
        for j in order:
            if deficit == 0:
                break
            take = min(base[j], -deficit)
            base[j] -= take
            deficit += take
    return base
