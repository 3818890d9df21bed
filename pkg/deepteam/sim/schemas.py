import numpy as np
from pydantic import BaseModel, ConfigDict


class RolloutNoise(BaseModel):
    """Равномерные случайные числа одной реплики: начальные состояния и по одному на агента за шаг."""
    init: tuple[np.ndarray, ...]
    steps: tuple[np.ndarray, ...]
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class Trajectory(BaseModel):
    rep: int
    counts: list[tuple[tuple[int, ...], ...]]
    gammas: list[int]
    costs: list[float]
    total: float
    discounted: bool = False


class StrategyEvaluation(BaseModel):
    strategy: str
    mean: float
    ci_half: float
    reps: int
    seed: int
    exact: bool = False
    horizon: int
    truncation: float = 0.0


class GapEstimate(BaseModel):
    gap: float
    ci_half: float
    mean_a: float
    mean_b: float
    reps: int
    seed: int
    exact: bool = False


class TrajectoryStateRow(BaseModel):
    rep: int
    t: int
    subpop: str
    state_symbol: str
    count: int


class TrajectoryCostRow(BaseModel):
    rep: int
    t: int
    cost: float


class SummaryRow(BaseModel):
    strategy: str
    J_mean: float
    CI_half: float
    reps: int
    seed: int
