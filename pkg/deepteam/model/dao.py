from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import ValidationError

from deepteam.dao.session_maker import OutputSession
from deepteam.exceptions import ModelValidationError
from deepteam.model.expr import Expression
from deepteam.model.models import (
    CostSpec, ExprAgentCost, ExprJointCost, ExprKernel, FunctionalKernel, Horizon, SubPopSpec,
    TableAgentCost, TableDynamics, TableKernel, TeamModel, check_alphabet,
)
from deepteam.model.schemas import AgentCostSchema, KernelSchema, ModelSchema, SubPopSchema


def _array(path: str, data, shape_tail: tuple[int, ...], dtype=float) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=dtype)
    except ValueError:
        raise ModelValidationError(f"{path}: ragged table") from None
    if arr.shape[1:] != shape_tail:
        raise ModelValidationError(f"{path}: shape {arr.shape[1:]} does not match expected {shape_tail}")
    return arr


class ModelDAO:
    """Загрузка и выгрузка файлов модели (один JSON-документ)."""

    @classmethod
    def load(cls, path: str | Path) -> TeamModel:
        logger.info(f"Загрузка модели из {path}")
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Не удалось прочитать файл модели {path}: {e}")
            raise ModelValidationError(f"cannot read model file {path}: {e.strerror}") from None
        return cls.from_schema(cls.parse(text))

    @classmethod
    def parse(cls, text: str) -> ModelSchema:
        try:
            return ModelSchema.model_validate_json(text)
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"])
            logger.error(f"Файл модели не прошёл проверку схемы: {where}: {first['msg']}")
            raise ModelValidationError(f"schema: {where}: {first['msg']}") from None

    @classmethod
    def dump(cls, session: OutputSession, filename: str, schema: ModelSchema) -> Path:
        logger.info(f"Выгрузка модели в {filename}")
        return session.stage_text(filename, schema.model_dump_json(indent=2, exclude_none=True) + "\n")

    @classmethod
    def from_schema(cls, schema: ModelSchema) -> TeamModel:
        check_alphabet("subpops.name", [s.name for s in schema.subpops])
        for sp in schema.subpops:
            for field in ("states", "actions", "noises"):
                check_alphabet(f"subpops.{sp.name}.{field}", getattr(sp, field))
        alphabets = {sp.name: (k, sp.states, sp.actions) for k, sp in enumerate(schema.subpops)}
        subpops = tuple(cls._subpop(sp, alphabets) for sp in schema.subpops)
        cost = cls._cost(schema, alphabets)
        model = TeamModel(subpops=subpops, cost=cost, horizon=Horizon(T=schema.horizon.T, beta=schema.horizon.beta))
        logger.info(f"Модель собрана: {model.K} подпопуляций, размеры {model.sizes}")
        return model

    @classmethod
    def _subpop(cls, sp: SubPopSchema, alphabets) -> SubPopSpec:
        path = f"subpops.{sp.name}"
        noise_pmf = np.atleast_2d(np.asarray(sp.noise_pmf, dtype=float))
        init_states = None
        if sp.init_states is not None:
            init_states = tuple(cls._symbol(f"{path}.init_states", sp.states, s) for s in sp.init_states)
        init_pmf = np.asarray(sp.init_pmf, dtype=float) if sp.init_pmf is not None else None
        kernel, dynamics = cls._kernel(path, sp.kernel, sp, noise_pmf, alphabets)
        return SubPopSpec(
            name=sp.name, size=sp.size, states=tuple(sp.states), actions=tuple(sp.actions), noises=tuple(sp.noises),
            noise_pmf=noise_pmf, init_pmf=init_pmf, init_states=init_states, kernel=kernel, dynamics=dynamics,
        )

    @classmethod
    def _kernel(cls, path: str, ks: KernelSchema, sp: SubPopSchema, noise_pmf, alphabets):
        m, a, nw = len(sp.states), len(sp.actions), len(sp.noises)
        dynamics = None
        if ks.dynamics is not None:
            if len(ks.dynamics) != m or any(len(r) != a or any(len(c) != nw for c in r) for r in ks.dynamics):
                raise ModelValidationError(f"{path}.kernel.dynamics: expected shape ({m}, {a}, {nw})")
            table = [[[cls._symbol(f"{path}.kernel.dynamics[{x}][{u}]", sp.states, y) for y in by_w]
                      for u, by_w in enumerate(by_u)] for x, by_u in enumerate(ks.dynamics)]
            dynamics = TableDynamics(np.asarray([table], dtype=np.int64))
        if ks.mode == "expr":
            exprs = []
            for x, by_u in enumerate(ks.expr):
                row = []
                for u, by_y in enumerate(by_u):
                    row.append([Expression(src, f"{path}.kernel.expr[{x}][{u}][{y}]", alphabets)
                                for y, src in enumerate(by_y)])
                exprs.append(row)
            if len(exprs) != m or any(len(r) != a or any(len(c) != m for c in r) for r in exprs):
                raise ModelValidationError(f"{path}.kernel.expr: expected shape ({m}, {a}, {m})")
            return ExprKernel(exprs), dynamics
        if ks.table is not None:
            return TableKernel(_array(f"{path}.kernel.table", [ks.table], (m, a, m))), dynamics
        if ks.tables is not None:
            return TableKernel(_array(f"{path}.kernel.tables", ks.tables, (m, a, m))), dynamics
        return FunctionalKernel(dynamics, noise_pmf, m), dynamics

    @classmethod
    def _cost(cls, schema: ModelSchema, alphabets) -> CostSpec:
        joint = None
        if schema.cost.joint is not None:
            joint = ExprJointCost(Expression(schema.cost.joint, "cost.joint", alphabets))
        per_agent = [None] * len(schema.subpops)
        for name, entry in schema.cost.per_agent.items():
            if name not in alphabets:
                raise ModelValidationError(f"cost.per_agent: unknown sub-population {name!r}")
            k, states, actions = alphabets[name]
            per_agent[k] = cls._agent_cost(f"cost.per_agent.{name}", entry, len(states), len(actions), alphabets)
        return CostSpec(per_agent=tuple(per_agent) if schema.cost.per_agent else (), joint=joint)

    @classmethod
    def _agent_cost(cls, path: str, entry: AgentCostSchema, m: int, a: int, alphabets):
        if entry.expr is not None:
            if len(entry.expr) != m or any(len(r) != a for r in entry.expr):
                raise ModelValidationError(f"{path}.expr: expected shape ({m}, {a})")
            return ExprAgentCost([[Expression(src, f"{path}.expr[{x}][{u}]", alphabets) for u, src in enumerate(r)]
                                  for x, r in enumerate(entry.expr)])
        tables = [entry.table] if entry.table is not None else entry.tables
        return TableAgentCost(_array(f"{path}.table", tables, (m, a)))

    @staticmethod
    def _symbol(path: str, alphabet, symbol: str) -> int:
        if symbol not in alphabet:
            raise ModelValidationError(f"{path}: symbol {symbol!r} is not in alphabet {list(alphabet)}")
        return list(alphabet).index(symbol)
