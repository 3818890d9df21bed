from typing import Literal

from pydantic import BaseModel, Field

BoundMode = Literal["poi", "poc", "both"]


class LipschitzProfile(BaseModel):
    """
    Константы Липшица по шагам (индекс 0 - шаг t=1). Для стационарной
    задачи списки имеют длину 1, T = None.
    """
    T: int | None = None
    H1: list[float] = []
    H2: list[float] = []
    H3: list[float] = []
    H4: list[float] = []
    H5: list[float] = []
    H6: list[float] = []
    C: float = Field(default=1.0, ge=0.0)
    probes: int = 0
    r_probe: int | None = None
    max_ratio: float = 0.0
    source: Literal["estimated", "supplied"] = "estimated"

    @property
    def H5_1(self) -> float:
        return self.H5[0] if self.H5 else 0.0

    @property
    def H6_1(self) -> float:
        return self.H6[0] if self.H6 else 0.0


class BoundRow(BaseModel):
    quantity: str
    value: float
    mode: str
    n: int
    r: str
    beta: str
    H5_1: float
    H6_1: float
    C: float
    estimated_or_supplied: str
