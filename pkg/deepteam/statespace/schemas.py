from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class DeepState(BaseModel):
    """Счётчики состояний по подпопуляциям; значение d^k = c^k / n_k."""
    counts: tuple[tuple[int, ...], ...]
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_counts(self) -> Self:
        if any(c < 0 for block in self.counts for c in block):
            raise ValueError("deep-state counts must be nonnegative")
        return self

    @classmethod
    def from_arrays(cls, arrays) -> "DeepState":
        return cls(counts=tuple(tuple(int(c) for c in a) for a in arrays))

    def values(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(block, dtype=float) / sum(block) for block in self.counts)


class NoiseEmpirical(BaseModel):
    counts: tuple[int, ...]
    weight: float = Field(ge=0.0, le=1.0)
    model_config = ConfigDict(frozen=True)

    def values(self) -> np.ndarray:
        counts = np.asarray(self.counts, dtype=float)
        return counts / counts.sum()


class GridPoint(BaseModel):
    """Точка квантованного пространства: числители для сеточных компонент, счётчики для остальных."""
    numerators: tuple[tuple[int, ...], ...]
    quantized: frozenset[int]
    r: int = Field(ge=1)
    model_config = ConfigDict(frozen=True)

    def values(self) -> tuple[np.ndarray, ...]:
        out = []
        for k, block in enumerate(self.numerators):
            block = np.asarray(block, dtype=float)
            out.append(block / self.r if k in self.quantized else block / block.sum())
        return tuple(out)


class MixedState(BaseModel):
    """
    Смешанное состояние: наблюдаемые подпопуляции (observed) хранят счётчики,
    остальные хранят среднее поле на симплексе.
    """
    components: tuple[np.ndarray, ...]
    observed: frozenset[int]
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_mean_fields(self) -> Self:
        for k, block in enumerate(self.components):
            if k in self.observed:
                continue
            if (block < -1e-12).any() or abs(float(block.sum()) - 1.0) > 1e-10:
                raise ValueError(f"mean-field component {k} is not on the simplex: {block.tolist()}")
        return self

    def values(self) -> tuple[np.ndarray, ...]:
        return tuple(block / block.sum() if k in self.observed else np.asarray(block, dtype=float)
                     for k, block in enumerate(self.components))
