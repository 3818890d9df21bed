import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ValueTable(BaseModel):
    """Значения по рангам состояний; t = -1 для стационарной таблицы."""
    t: int
    values: np.ndarray
    model_config = ConfigDict(arbitrary_types_allowed=True)


class PolicyTable(BaseModel):
    """Индекс профиля локальных законов для каждого ранга состояния."""
    t: int
    gamma: np.ndarray
    model_config = ConfigDict(arbitrary_types_allowed=True)


class DPSolution(BaseModel):
    """Результат динамического программирования над пространством-произведением."""
    values: list[ValueTable]
    policies: list[PolicyTable]
    optimal_cost: float
    space: object = Field(exclude=True)
    laws: object = Field(exclude=True)
    quantized: frozenset[int] = frozenset()
    r: int | None = None
    iterations: int | None = None
    deltas: list[float] = []
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def stationary(self) -> bool:
        return bool(self.values) and self.values[0].t == -1

    def table(self, t: int) -> PolicyTable:
        if self.stationary:
            return self.policies[0]
        return self.policies[t - 1]

    def value_table(self, t: int) -> ValueTable:
        if self.stationary:
            return self.values[0]
        return self.values[t - 1]


class ValueRow(BaseModel):
    t: int
    state_rank: int
    value: float


class PolicyRow(BaseModel):
    t: int
    state_rank: int
    gamma_index: int


class GridValueRow(BaseModel):
    t: int
    grid_key: int
    value: float


class GridPolicyRow(BaseModel):
    t: int
    grid_key: int
    gamma_index: int


class GammaRow(BaseModel):
    gamma_index: int
    subpop: str
    state: str
    action: str
