from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class KernelSchema(BaseModel):
    """
    Ядро подпопуляции в файле модели.

    mode="table": table[x][u][y] (или tables[t][x][u][y]) либо dynamics[x][u][w] -> символ состояния;
    mode="expr": expr[x][u][y] - выражения над координатами D.
    """
    mode: Literal["table", "expr"]
    table: list[list[list[float]]] | None = None
    tables: list[list[list[list[float]]]] | None = None
    expr: list[list[list[str]]] | None = None
    dynamics: list[list[list[str]]] | None = None
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_mode(self) -> Self:
        if self.mode == "table":
            given = [self.table is not None, self.tables is not None]
            if sum(given) > 1 or (not any(given) and self.dynamics is None):
                raise ValueError("table kernel needs exactly one of table, tables, or dynamics alone")
            if self.expr is not None:
                raise ValueError("table kernel does not take expr")
        else:
            if self.expr is None or self.table is not None or self.tables is not None:
                raise ValueError("expr kernel needs expr only")
        return self


class SubPopSchema(BaseModel):
    name: str = Field(min_length=1)
    size: int = Field(ge=1)
    states: list[str]
    actions: list[str]
    noises: list[str] = ["0"]
    noise_pmf: list[float] | list[list[float]] = [1.0]
    init_pmf: list[float] | None = None
    init_states: list[str] | None = None
    kernel: KernelSchema
    model_config = ConfigDict(extra="forbid")


class AgentCostSchema(BaseModel):
    table: list[list[float]] | None = None
    tables: list[list[list[float]]] | None = None
    expr: list[list[str]] | None = None
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_one(self) -> Self:
        if sum(v is not None for v in (self.table, self.tables, self.expr)) != 1:
            raise ValueError("per-agent cost needs exactly one of table, tables, expr")
        return self


class CostSchema(BaseModel):
    mode: Literal["per_agent", "joint"]
    per_agent: dict[str, AgentCostSchema] = {}
    joint: str | None = None
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_mode(self) -> Self:
        if self.mode == "joint" and (self.joint is None or self.per_agent):
            raise ValueError("joint cost mode needs a joint expression and no per_agent entries")
        if self.mode == "per_agent" and not self.per_agent:
            raise ValueError("per_agent cost mode needs at least one per_agent entry")
        return self


class HorizonSchema(BaseModel):
    T: int | None = Field(default=None, ge=1)
    beta: float | None = Field(default=None, gt=0.0, lt=1.0)
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_kind(self) -> Self:
        if (self.T is None) == (self.beta is None):
            raise ValueError("horizon needs exactly one of T or beta")
        return self


class ModelSchema(BaseModel):
    subpops: list[SubPopSchema] = Field(min_length=1)
    cost: CostSchema
    horizon: HorizonSchema
    model_config = ConfigDict(extra="forbid")
