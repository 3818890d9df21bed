from fractions import Fraction
from math import ceil, comb, floor
from typing import Sequence

import numpy as np
from loguru import logger

from deepteam.exceptions import SolverError, check_cap
from deepteam.statespace.lattice import _compositions, nearest_lattice_point


def quantize(point: Sequence[float | Fraction], r: int) -> np.ndarray:
    """
    Покоординатное округление к ближайшему кратному 1/r.

    Возвращает целые числители. Ничья округляется к меньшему кратному.
    """
    if r < 1:
        raise SolverError(f"quantize: r must be >= 1, got {r}")
    if any(isinstance(v, Fraction) for v in point):
        numerators = [ceil(Fraction(v) * r - Fraction(1, 2)) for v in point]
        return np.clip(np.array(numerators, dtype=np.int64), 0, r)
    scaled = np.asarray(point, dtype=float) * r
    return np.clip(np.ceil(scaled - 0.5), 0, r).astype(np.int64)


def _near_simplex_sums(m: int, r: int) -> range:
    # |sum/r - 1| <= m/(2r)  <=>  |sum - r| <= m/2
    return range(max(0, ceil(r - m / 2)), min(m * r, floor(r + m / 2)) + 1)


def count_grid(m: int, r: int, near_simplex: bool) -> int:
    if not near_simplex:
        return (r + 1) ** m
    return sum(int((_compositions(s, m) <= r).all(axis=1).sum()) for s in _near_simplex_sums(m, r))


def enumerate_grid(m: int, r: int, near_simplex: bool, cap: int | None = None) -> np.ndarray:
    """
    Точки сетки {0, 1/r, ..., 1}^m в лексикографическом порядке (числители).

    При near_simplex оставляются только точки с |сумма - 1| <= m/(2r):
    это все возможные образы точек симплекса при квантовании.
    """
    if not near_simplex:
        check_cap("quantized grid", f"({r}+1)^{m}", (r + 1) ** m, cap)
        axes = np.indices((r + 1,) * m).reshape(m, -1).T
        return axes.astype(np.int64)
    sums = _near_simplex_sums(m, r)
    # оценка сверху до фактического перечисления
    estimate = sum(comb(s + m - 1, m - 1) for s in sums)
    check_cap("near-simplex grid", f"sum_s C(s+{m}-1,{m}-1), s in [{sums.start},{sums.stop - 1}]", estimate, cap)
    blocks = []
    for s in sums:
        points = _compositions(s, m)
        blocks.append(points[(points <= r).all(axis=1)])
    points = np.vstack(blocks)
    order = np.lexsort(points.T[::-1])
    return points[order]


class Grid:
    """Квантованная компонента состояния: m координат с шагом 1/r."""

    exact = False

    def __init__(self, m: int, r: int, near_simplex: bool = True, cap: int | None = None):
        self.m = m
        self.r = r
        self.near_simplex = near_simplex
        self.points = enumerate_grid(m, r, near_simplex, cap)
        self.size = self.points.shape[0]
        self.values = self.points / float(r)
        self._index = {tuple(int(v) for v in p): i for i, p in enumerate(self.points)}
        logger.debug(f"Сетка m={m}, r={r}, near_simplex={near_simplex}: {self.size} точек")

    def locate(self, numerators: Sequence[int]) -> int:
        key = tuple(int(v) for v in numerators)
        try:
            return self._index[key]
        except KeyError:
            raise SolverError(f"grid point {key} (r={self.r}) is outside the enumerated grid") from None

    def locate_values(self, values: np.ndarray) -> int:
        return self.locate(quantize(values, self.r))

    def locate_simplex(self, values: np.ndarray) -> int:
        """Нормирует ненулевой вектор на симплекс и квантует его."""
        values = np.asarray(values, dtype=float)
        total = float(values.sum())
        if total > 0.0:
            values = values / total
        return self.locate_values(values)

    def anchor(self, index: int, n: int) -> np.ndarray:
        """Ближайшая точка решётки размера n к точке сетки."""
        return nearest_lattice_point(self.values[index], n)
