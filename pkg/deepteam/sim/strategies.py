from abc import ABC, abstractmethod
from typing import Any, Sequence

import numpy as np

from deepteam.config import settings
from deepteam.dss.schemas import DPSolution
from deepteam.exceptions import SolverError
from deepteam.model.models import TeamModel
from deepteam.pdss.schemas import MixedPolicy
from deepteam.pdss.tracking import MixedTracker

Counts = Sequence[np.ndarray]


class Strategy(ABC):
    """
    Справедливая стратегия: профиль законов выбирается по глубоким состояниям
    (и памяти), одинаково для всех агентов подпопуляции.
    """
    name: str = "strategy"

    def start(self, counts: Counts) -> Any:
        return None

    @abstractmethod
    def select(self, t: int, counts: Counts, memory: Any) -> int:
        ...

    def advance(self, memory: Any, t: int, g: int, counts_next: Counts) -> Any:
        return memory


class ConstantStrategy(Strategy):
    def __init__(self, gamma_index: int, name: str = "constant"):
        self.gamma_index = gamma_index
        self.name = name

    def select(self, t, counts, memory):
        return self.gamma_index


class TableStrategy(Strategy):
    """Политика DSS или квантованного DSS: поиск по рангу (при необходимости после квантования)."""

    def __init__(self, solution: DPSolution, name: str | None = None):
        self.solution = solution
        self.name = name or ("dss_quantized" if solution.quantized else "dss")

    def key(self, counts: Counts) -> int:
        parts = []
        for k, component in enumerate(self.solution.space.components):
            block = np.asarray(counts[k], dtype=np.int64)
            if k in self.solution.quantized:
                parts.append(component.locate_simplex(block))
            else:
                parts.append(component.rank(block))
        return self.solution.space.join(parts)

    def select(self, t, counts, memory):
        key = self.key(counts)
        if not self.solution.stationary and not 1 <= t <= len(self.solution.policies):
            raise SolverError(settings.ERROR_MESSAGES["uncovered"].format(t=t, key=key))
        return int(self.solution.table(t).gamma[key])


class MixedStrategy(Strategy):
    """Стратегия PDSS: отслеживает смешанное состояние по наблюдаемым подпопуляциям."""

    def __init__(self, model: TeamModel, policy: MixedPolicy, name: str = "pdss"):
        self.tracker = MixedTracker(model, policy)
        self.policy = policy
        self.name = name
        self._order = sorted(policy.observed)

    def start(self, counts):
        return self.tracker.start([counts[k] for k in self._order])

    def select(self, t, counts, memory):
        p, inner = memory
        return self.policy.select(t, p, inner)

    def advance(self, memory, t, g, counts_next):
        p, inner = memory
        return self.tracker.step(t, p, inner, g, [counts_next[k] for k in self._order])
