import math
from itertools import product
from typing import Iterator

import numpy as np
from loguru import logger

from deepteam.exceptions import SolverError, check_cap
from deepteam.model.models import TeamModel

# Профиль локальных законов: для каждой подпопуляции массив индексов действий по состояниям
LocalLawProfile = tuple[np.ndarray, ...]


def subpop_laws(m: int, a: int, major: bool) -> np.ndarray:
    """
    Законы одной подпопуляции в лексикографическом порядке.
    Для основного агента (размер 1) - только постоянные законы.
    """
    if major:
        return np.repeat(np.arange(a, dtype=np.int64)[:, None], m, axis=1)
    return np.array(list(product(range(a), repeat=m)), dtype=np.int64).reshape(-1, m)


class LawSpace:
    """Пространство профилей: смешанная система счисления, k=1 - старший разряд."""

    def __init__(self, model: TeamModel, cap: int | None = None):
        counts = [sp.a if sp.major else sp.a ** sp.m for sp in model.subpops]
        formula = " * ".join(f"{sp.a}" if sp.major else f"{sp.a}^{sp.m}" for sp in model.subpops)
        check_cap("local-law profiles", formula, math.prod(counts), cap)
        self.per_subpop = [subpop_laws(sp.m, sp.a, sp.major) for sp in model.subpops]
        self.counts = tuple(counts)
        self.size = math.prod(counts)
        self._actions = [sp.actions for sp in model.subpops]
        self._states = [sp.states for sp in model.subpops]
        logger.debug(f"Профилей локальных законов: {self.size}")

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, index: int) -> LocalLawProfile:
        return self.profile(index)

    def __iter__(self) -> Iterator[LocalLawProfile]:
        return (self.profile(i) for i in range(self.size))

    def split(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise SolverError(f"law index {index} out of range 0..{self.size - 1}")
        return tuple(int(i) for i in np.unravel_index(index, self.counts))

    def join(self, parts) -> int:
        return int(np.ravel_multi_index(tuple(int(p) for p in parts), self.counts))

    def profile(self, index: int) -> LocalLawProfile:
        return tuple(laws[i] for laws, i in zip(self.per_subpop, self.split(index)))

    def index_of(self, profile: LocalLawProfile) -> int:
        parts = []
        for laws, law in zip(self.per_subpop, profile):
            hits = np.nonzero((laws == np.asarray(law)).all(axis=1))[0]
            if hits.size == 0:
                raise SolverError(f"law {list(law)} is not in the enumerated space")
            parts.append(int(hits[0]))
        return self.join(parts)

    def decode(self, index: int) -> list[tuple[int, str, str]]:
        """Расшифровка профиля: (k, состояние, действие) по символам."""
        out = []
        for k, law in enumerate(self.profile(index)):
            for x, u in enumerate(law):
                out.append((k, self._states[k][x], self._actions[k][int(u)]))
        return out


def enumerate_local_laws(model: TeamModel, cap: int | None = None) -> LawSpace:
    return LawSpace(model, cap)
