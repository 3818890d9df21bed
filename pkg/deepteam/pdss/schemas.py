from abc import ABC, abstractmethod
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from deepteam.config import settings
from deepteam.dss.schemas import DPSolution
from deepteam.exceptions import SolverError
from deepteam.statespace.schemas import MixedState


class TreeSolution(BaseModel):
    """Точный DP на дереве достижимых смешанных состояний; ключи - сериализованная история."""
    values: dict[str, float]
    policy: dict[str, int]
    roots: dict[str, float]
    initial_value: float
    observed: frozenset[int]
    T: int
    # при выборке начальных состояний initial_value - выборочное среднее
    initial_exact: bool = True
    initial_half_width: float = 0.0
    samples: int = 0


class TreeRow(BaseModel):
    t: int
    tree_key: str
    value: float
    gamma_index: int


def observed_ranks(lattices: dict[int, Any], p: MixedState) -> str:
    return ".".join(str(lattices[k].rank(np.rint(p.components[k]).astype(np.int64))) for k in sorted(lattices))


class MixedPolicy(ABC):
    """
    Правило выбора профиля по смешанному состоянию.
    Память (memory) хранится у вызывающего и передаётся явно.
    """
    observed: frozenset[int]

    @abstractmethod
    def start(self, p: MixedState) -> Any:
        ...

    @abstractmethod
    def select(self, t: int, p: MixedState, memory: Any) -> int:
        ...

    def advance(self, memory: Any, g: int, p_next: MixedState) -> Any:
        return memory


class GridMixedPolicy(MixedPolicy):
    """Политика квантованного DP: ключ - ранг (решётки для S, сетки Q(m) для остальных)."""

    def __init__(self, solution: DPSolution, observed: frozenset[int]):
        self.solution = solution
        self.observed = frozenset(observed)

    def key(self, p: MixedState) -> int:
        parts = []
        for k, component in enumerate(self.solution.space.components):
            block = p.components[k]
            if k in self.observed:
                parts.append(component.rank(np.rint(block).astype(np.int64)))
            else:
                parts.append(component.locate_simplex(block))
        return self.solution.space.join(parts)

    def start(self, p):
        return None

    def select(self, t, p, memory):
        key = self.key(p)
        if not self.solution.stationary and not 1 <= t <= len(self.solution.policies):
            raise SolverError(settings.ERROR_MESSAGES["uncovered"].format(t=t, key=key))
        return int(self.solution.table(t).gamma[key])


class TreeMixedPolicy(MixedPolicy):
    """Политика дерева: ключ строится по истории наблюдений и выбранных профилей."""

    def __init__(self, solution: TreeSolution, lattices: dict[int, Any]):
        self.solution = solution
        self.lattices = lattices
        self.observed = solution.observed

    def start(self, p):
        return observed_ranks(self.lattices, p)

    def select(self, t, p, memory):
        try:
            return self.solution.policy[memory]
        except KeyError:
            raise SolverError(settings.ERROR_MESSAGES["uncovered"].format(t=t, key=memory)) from None

    def advance(self, memory, g, p_next):
        return f"{memory}/{g}:{observed_ranks(self.lattices, p_next)}"
