from typing import Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ServiceParams(BaseModel):
    """Параметры примера с сервером и пользователями; значения по умолчанию - базовый сценарий."""
    n: int = Field(default=200, ge=1)
    beta: float = Field(default=0.8, gt=0.0, lt=1.0)
    mu: float = Field(default=0.8, ge=0.0, le=1.0)
    q: list[float] = [0.1, 0.05, 0.2]
    alpha: list[float] = [0.0, 0.85, 0.0]
    base_price: float = Field(default=0.59, ge=0.0)
    service_price: float = Field(default=0.65, ge=0.0)
    discount_markup: float = Field(default=0.2, ge=0.0)
    outsource_base: float = Field(default=0.3, ge=0.0)
    outsource_service: float = Field(default=0.5, ge=0.0)
    penalty: float = Field(default=15.0, ge=0.0)
    patch_price: float = Field(default=0.5, ge=0.0)
    capacities: list[float] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    capacity_prices: list[float] = [0.02, 0.04, 0.07, 0.12, 0.15, 0.2]
    fault_prob: float = Field(default=0.05, ge=0.0, le=1.0)
    init_users: list[float] = [0.2, 0.8]
    init_capacity: float = 0.3
    model_config = ConfigDict(extra="forbid")

    @field_validator("q", "alpha", "init_users", "capacities")
    @classmethod
    def check_probabilities(cls, values: list[float]) -> list[float]:
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"values must lie in [0, 1], got {values}")
        return values

    @field_validator("capacity_prices")
    @classmethod
    def check_prices(cls, values: list[float]) -> list[float]:
        if any(v < 0 for v in values):
            raise ValueError(f"prices must be nonnegative, got {values}")
        return values

    @model_validator(mode="after")
    def check_lengths(self) -> Self:
        if len(self.q) != len(self.alpha) or len(self.q) != 3:
            raise ValueError("q and alpha need one entry per service option (3 options)")
        if len(self.capacities) != len(self.capacity_prices):
            raise ValueError("capacities and capacity_prices must have the same length")
        if len(self.init_users) != 2 or abs(sum(self.init_users) - 1.0) > 1e-12:
            raise ValueError("init_users must be a pmf over the two user states")
        if self.init_capacity not in self.capacities:
            raise ValueError(f"init_capacity {self.init_capacity} is not one of {self.capacities}")
        return self

    def with_n(self, n: int) -> "ServiceParams":
        return self.model_copy(update={"n": n})


class OptionRow(BaseModel):
    d: float
    x0: float
    option: int


class CapacityRow(BaseModel):
    d: float
    x0: float
    u0: float


class TrajectoryRow(BaseModel):
    t: int
    d_t: float
    x0_t: float


class ConvergenceRow(BaseModel):
    n: int
    J_dss: float
    J_pdss_quantized: float
    gap: float
