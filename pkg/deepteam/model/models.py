from abc import ABC, abstractmethod
from typing import Callable, Self, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from deepteam.exceptions import ModelValidationError
from deepteam.model.expr import Expression

# Распределение пар (состояние, действие) по подпопуляциям: массивы формы (|X^k|, |U^k|)
StateActionDist = tuple[np.ndarray, ...]


def at_time(tables: np.ndarray | Sequence, t: int):
    """Таблица для шага t (с 1); последняя таблица действует дальше горизонта."""
    return tables[min(max(t, 1), len(tables)) - 1]


class Dynamics(ABC):
    """Функциональная форма x' = f^k_t(x, u, D, w)."""
    depends_on_distribution: bool = True

    @abstractmethod
    def next_state(self, t: int, x: int, u: int, dist: StateActionDist, w: int) -> int:
        ...


class TableDynamics(Dynamics):
    depends_on_distribution = False

    def __init__(self, tables: np.ndarray):
        # форма (T, |X|, |U|, |W|), значения - индексы состояний
        self.tables = np.asarray(tables, dtype=np.int64)

    def next_state(self, t, x, u, dist, w):
        return int(at_time(self.tables, t)[x, u, w])


class CallableDynamics(Dynamics):
    def __init__(self, fn: Callable[[int, int, int, StateActionDist, int], int], depends_on_distribution: bool = True):
        self.fn = fn
        self.depends_on_distribution = depends_on_distribution

    def next_state(self, t, x, u, dist, w):
        return int(self.fn(t, x, u, dist, w))


class Kernel(ABC):
    """Переходная матрица P^k(y | x, u, D), определённая на всём гиперкубе D."""
    depends_on_distribution: bool = True

    @abstractmethod
    def row(self, t: int, x: int, u: int, dist: StateActionDist) -> np.ndarray:
        ...

    def rows(self, t: int, law: np.ndarray, dist: StateActionDist) -> np.ndarray:
        """Строки P(.|x, law[x], D) для всех x."""
        return np.vstack([self.row(t, x, int(u), dist) for x, u in enumerate(law)])


class TableKernel(Kernel):
    depends_on_distribution = False

    def __init__(self, tables: np.ndarray):
        # форма (T, |X|, |U|, |X|)
        self.tables = np.asarray(tables, dtype=float)

    def row(self, t, x, u, dist):
        return at_time(self.tables, t)[x, u]

    def rows(self, t, law, dist):
        table = at_time(self.tables, t)
        return table[np.arange(table.shape[0]), np.asarray(law)]


class ExprKernel(Kernel):
    def __init__(self, exprs: Sequence[Sequence[Sequence[Expression]]]):
        self.exprs = exprs
        self.depends_on_distribution = any(e.reads_distribution for by_u in exprs for by_y in by_u for e in by_y)

    def row(self, t, x, u, dist):
        return np.array([e.evaluate(t, dist) for e in self.exprs[x][u]], dtype=float)


class FunctionalKernel(Kernel):
    """Ядро, порождённое динамикой и распределением шума."""

    def __init__(self, dynamics: Dynamics, noise_pmf: np.ndarray, m: int):
        self.dynamics = dynamics
        self.noise_pmf = np.atleast_2d(np.asarray(noise_pmf, dtype=float))
        self.m = m
        self.depends_on_distribution = dynamics.depends_on_distribution

    def row(self, t, x, u, dist):
        out = np.zeros(self.m)
        for w, p in enumerate(at_time(self.noise_pmf, t)):
            if p > 0:
                out[self.dynamics.next_state(t, x, u, dist, w)] += p
        return out


class AgentCost(ABC):
    """Индивидуальная стоимость c^k_t(x, u, D)."""

    @abstractmethod
    def value(self, t: int, x: int, u: int, dist: StateActionDist) -> float:
        ...


class TableAgentCost(AgentCost):
    def __init__(self, tables: np.ndarray):
        self.tables = np.asarray(tables, dtype=float)

    def value(self, t, x, u, dist):
        return float(at_time(self.tables, t)[x, u])


class ExprAgentCost(AgentCost):
    def __init__(self, exprs: Sequence[Sequence[Expression]]):
        self.exprs = exprs

    def value(self, t, x, u, dist):
        return self.exprs[x][u].evaluate(t, dist)


class JointCost(ABC):
    @abstractmethod
    def value(self, t: int, dist: StateActionDist) -> float:
        ...


class ExprJointCost(JointCost):
    def __init__(self, expr: Expression):
        self.expr = expr

    def value(self, t, dist):
        return self.expr.evaluate(t, dist)


class CallableJointCost(JointCost):
    def __init__(self, fn: Callable[[int, StateActionDist], float]):
        self.fn = fn

    def value(self, t, dist):
        return float(self.fn(t, dist))


class CostSpec(BaseModel):
    """
    Стоимость c_t(D): совместный член плюс индивидуальные стоимости,
    агрегированные как sum_k sum_(x,u) D^k(x,u) c^k_t(x,u,D).
    """
    per_agent: tuple[AgentCost | None, ...] = ()
    joint: JointCost | None = None
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def evaluate(self, t: int, dist: StateActionDist) -> float:
        total = self.joint.value(t, dist) if self.joint is not None else 0.0
        for k, cost in enumerate(self.per_agent):
            if cost is None:
                continue
            block = dist[k]
            # только ненулевые ячейки: на них держится вся сумма
            for x, u in zip(*np.nonzero(block)):
                total += float(block[x, u]) * cost.value(t, int(x), int(u), dist)
        return total


class Horizon(BaseModel):
    T: int | None = Field(default=None, ge=1)
    beta: float | None = Field(default=None, gt=0.0, lt=1.0)
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_kind(self) -> Self:
        if (self.T is None) == (self.beta is None):
            raise ValueError("horizon needs exactly one of T or beta")
        return self

    @property
    def discounted(self) -> bool:
        return self.beta is not None


def check_alphabet(path: str, symbols: Sequence[str]) -> None:
    if not symbols:
        raise ModelValidationError(f"{path}: alphabet is empty")
    seen = set()
    for symbol in symbols:
        if symbol in seen:
            raise ModelValidationError(f"{path}: duplicate symbol {symbol!r}")
        seen.add(symbol)


class SubPopSpec(BaseModel):
    name: str
    size: int = Field(ge=1)
    states: tuple[str, ...]
    actions: tuple[str, ...]
    noises: tuple[str, ...] = ("0",)
    noise_pmf: np.ndarray
    init_pmf: np.ndarray | None = None
    init_states: tuple[int, ...] | None = None
    kernel: Kernel
    dynamics: Dynamics | None = None
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_shapes(self) -> Self:
        for field in ("states", "actions", "noises"):
            check_alphabet(f"subpops.{self.name}.{field}", getattr(self, field))
        pmf = np.atleast_2d(self.noise_pmf)
        if pmf.shape[1] != len(self.noises):
            raise ModelValidationError(
                f"subpops.{self.name}.noise_pmf: length {pmf.shape[1]} does not match {len(self.noises)} noises")
        object.__setattr__(self, "noise_pmf", pmf)
        if (self.init_pmf is None) == (self.init_states is None):
            raise ModelValidationError(f"subpops.{self.name}: give exactly one of init_pmf or init_states")
        if self.init_pmf is not None and len(self.init_pmf) != len(self.states):
            raise ModelValidationError(f"subpops.{self.name}.init_pmf: length does not match states")
        if self.init_states is not None and len(self.init_states) != self.size:
            raise ModelValidationError(f"subpops.{self.name}.init_states: {len(self.init_states)} states for {self.size} agents")
        return self

    @property
    def m(self) -> int:
        return len(self.states)

    @property
    def a(self) -> int:
        return len(self.actions)

    @property
    def major(self) -> bool:
        return self.size == 1

    def state_index(self, symbol: str) -> int:
        return _index_of(f"subpops.{self.name}.states", self.states, symbol)

    def action_index(self, symbol: str) -> int:
        return _index_of(f"subpops.{self.name}.actions", self.actions, symbol)


def _index_of(path: str, alphabet: Sequence[str], symbol: str) -> int:
    try:
        return alphabet.index(symbol)
    except ValueError:
        raise ModelValidationError(f"{path}: symbol {symbol!r} is not in alphabet {list(alphabet)}") from None


class TeamModel(BaseModel):
    subpops: tuple[SubPopSpec, ...]
    cost: CostSpec
    horizon: Horizon
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_structure(self) -> Self:
        if not self.subpops:
            raise ModelValidationError("subpops: at least one sub-population is required")
        check_alphabet("subpops.name", [s.name for s in self.subpops])
        if self.cost.per_agent and len(self.cost.per_agent) != len(self.subpops):
            raise ModelValidationError("cost.per_agent: one entry per sub-population is required")
        return self

    @property
    def K(self) -> int:
        return len(self.subpops)

    @property
    def T(self) -> int | None:
        return self.horizon.T

    @property
    def beta(self) -> float | None:
        return self.horizon.beta

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.size for s in self.subpops)

    @property
    def is_decoupled(self) -> bool:
        """Все ядра постоянны по D."""
        return not any(s.kernel.depends_on_distribution for s in self.subpops)

    @property
    def has_dynamics(self) -> bool:
        return all(s.dynamics is not None for s in self.subpops)

    def subpop_index(self, ref: str | int) -> int:
        """Индекс подпопуляции по имени или по номеру с единицы."""
        names = [s.name for s in self.subpops]
        if isinstance(ref, str) and ref in names:
            return names.index(ref)
        try:
            k = int(ref) - 1
        except (TypeError, ValueError):
            raise ModelValidationError(f"unknown sub-population {ref!r}; known: {names}") from None
        if not 0 <= k < self.K:
            raise ModelValidationError(f"sub-population number {ref} is out of range 1..{self.K}")
        return k

    def resolve(self, refs: Sequence[str | int]) -> frozenset[int]:
        return frozenset(self.subpop_index(r) for r in refs)


class RawSubPop(BaseModel):
    name: str
    size: int = Field(ge=1)
    states: tuple[str, ...]
    actions: tuple[str, ...]
    noises: tuple[str, ...]
    model_config = ConfigDict(frozen=True)


class RawAgentModel(BaseModel):
    """
    Модель на уровне агентов: совместная динамика и стоимость по кортежам индексов.
    Агенты упорядочены блоками по подпопуляциям.
    """
    partition: tuple[RawSubPop, ...]
    dynamics: Callable[[int, tuple[int, ...], tuple[int, ...], tuple[int, ...]], tuple[int, ...]]
    cost: Callable[[int, tuple[int, ...], tuple[int, ...]], float]
    T: int = Field(default=1, ge=1)
    n_agents: int | None = None
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_count(self) -> Self:
        total = sum(p.size for p in self.partition)
        if self.n_agents is not None and self.n_agents != total:
            raise ModelValidationError(f"raw model: {self.n_agents} agents but partition sums to {total}")
        return self

    @property
    def total(self) -> int:
        return sum(p.size for p in self.partition)

    def blocks(self) -> list[range]:
        out, start = [], 0
        for p in self.partition:
            out.append(range(start, start + p.size))
            start += p.size
        return out
