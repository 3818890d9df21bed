import math
from typing import Sequence

import numpy as np

from deepteam.exceptions import check_cap
from deepteam.statespace.grid import Grid
from deepteam.statespace.lattice import Lattice


class ProductSpace:
    """
    Произведение компонент (решётки и сетки) по подпопуляциям.
    Ранг состояния - смешанная система счисления, k=1 - старший разряд,
    так что таблица значений переформируется в тензор формы (L_1, ..., L_K).
    """

    def __init__(self, components: Sequence[Lattice | Grid], cap: int | None = None):
        self.components = tuple(components)
        self.shape = tuple(c.size for c in self.components)
        self.size = math.prod(self.shape)
        check_cap("state space", " * ".join(str(s) for s in self.shape), self.size, cap)

    def split(self, rank: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(rank, self.shape))

    def join(self, parts: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(p) for p in parts), self.shape))

    def values(self, rank: int) -> tuple[np.ndarray, ...]:
        return tuple(c.values[i] for c, i in zip(self.components, self.split(rank)))

    def numerators(self, rank: int) -> tuple[np.ndarray, ...]:
        return tuple(c.points[i] for c, i in zip(self.components, self.split(rank)))
