import math
from typing import Literal, Sequence

import numpy as np
from loguru import logger
from scipy import sparse

from deepteam.config import settings
from deepteam.exceptions import SolverError, check_cap
from deepteam.kernel.dynamics import ell, model_phi
from deepteam.kernel.transition import initial_subpop_distribution, subpop_row, subpop_transition_by_noise
from deepteam.model.models import StateActionDist, TeamModel
from deepteam.scheduler.pool import chunk_ranges, run_ordered
from deepteam.statespace.grid import Grid, quantize
from deepteam.statespace.lattice import Lattice
from deepteam.statespace.laws import LawSpace
from deepteam.statespace.space import ProductSpace

# Режим компоненты: точная решётка, сетка с привязкой к решётке (квантованный DSS)
# или квантованное среднее поле (PDSS)
Mode = Literal["lattice", "anchored", "mean_field"]
Successor = tuple[np.ndarray, np.ndarray]


def pick_argmin(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Минимум по строкам; при равенстве (с точностью округления) - меньший индекс."""
    best = q.min(axis=1)
    slack = 1e-12 * np.maximum(1.0, np.abs(best))
    policy = np.argmax(q <= (best + slack)[:, None], axis=1)
    return q[np.arange(q.shape[0]), policy], policy.astype(np.int64)


def zero_distribution(model: TeamModel) -> StateActionDist:
    return tuple(np.zeros((sp.m, sp.a)) for sp in model.subpops)


class BackwardInduction:
    """
    Оператор Беллмана над пространством-произведением компонент.

    Для каждой подпопуляции k компонента задаёт свой закон перехода;
    законы независимы по k при фиксированных состоянии и профиле.
    """

    def __init__(self, model: TeamModel, space: ProductSpace, laws: LawSpace, modes: Sequence[Mode],
                 route: Literal["kernel", "noise"] = "kernel", cap: int | None = None, workers: int | None = None):
        if len(modes) != model.K:
            raise SolverError(f"expected {model.K} component modes, got {len(modes)}")
        if route not in ("kernel", "noise"):
            raise SolverError(f"unknown transition route {route!r}")
        self.model = model
        self.space = space
        self.laws = laws
        self.modes = tuple(modes)
        self.route = route
        self.cap = cap
        self.workers = settings.WORKERS if workers is None else workers
        check_cap("DP state-law pairs", f"{space.size} * {laws.size}", space.size * laws.size, cap)
        # вспомогательные решётки для привязки квантованных компонент
        self._anchors: dict[int, tuple[Lattice, np.ndarray]] = {}
        for k, mode in enumerate(self.modes):
            if mode == "anchored":
                lattice = Lattice(model.subpops[k].size, model.subpops[k].m, cap)
                grid = space.components[k]
                to_grid = np.array([grid.locate(quantize(v, grid.r)) for v in lattice.values], dtype=np.int64)
                self._anchors[k] = (lattice, to_grid)
        self.decoupled = model.is_decoupled and (route == "kernel" or all(
            sp.dynamics is not None and not sp.dynamics.depends_on_distribution for sp in model.subpops))
        self._matrices: dict[tuple[int, int, int], sparse.csr_matrix] = {}
        self._costs: dict[int, np.ndarray] = {}
        logger.info(f"DP: {space.size} состояний x {laws.size} профилей, режимы {list(self.modes)}, "
                    f"{'разделимые ядра' if self.decoupled else 'ядра зависят от D'}")

    def component_successor(self, t: int, k: int, index: int, law: np.ndarray, dist: StateActionDist) -> Successor:
        """Закон следующего индекса компоненты k из индекса index при законе law."""
        mode = self.modes[k]
        sp = self.model.subpops[k]
        component = self.space.components[k]
        if mode == "mean_field":
            # точки сетки лежат около симплекса; образ возвращается на симплекс перед квантованием
            nxt = component.values[index] @ sp.kernel.rows(t, law, dist)
            return np.array([component.locate_simplex(nxt)], dtype=np.int64), np.ones(1)
        if mode == "anchored":
            lattice, to_grid = self._anchors[k]
            counts = component.anchor(index, sp.size)
        else:
            lattice, to_grid = component, None
            counts = component.points[index]
        if self.route == "noise":
            law_map = subpop_transition_by_noise(self.model, t, k, counts, dist, law, self.cap)
            ranks = np.array([lattice.rank(c) for c in law_map], dtype=np.int64)
            probs = np.array(list(law_map.values()))
        else:
            ranks, probs = subpop_row(self.model, t, k, lattice, counts, dist, law)
        return (ranks if to_grid is None else to_grid[ranks]), probs

    def _matrix(self, t: int, k: int, law_index: int) -> sparse.csr_matrix:
        key = (t, k, law_index)
        if key not in self._matrices:
            law = self.laws.per_subpop[k][law_index]
            dist = zero_distribution(self.model)
            size = self.space.shape[k]
            rows, cols, vals = [], [], []
            for i in range(size):
                idx, p = self.component_successor(t, k, i, law, dist)
                rows.append(np.full(idx.size, i))
                cols.append(idx)
                vals.append(p)
            # повторяющиеся индексы сетки суммируются при построении
            self._matrices[key] = sparse.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))
        return self._matrices[key]

    def successors(self, t: int, rank: int, g: int) -> list[Successor]:
        parts = self.space.split(rank)
        gamma = self.laws.profile(g)
        if self.decoupled:
            out = []
            for k, (i, law_index) in enumerate(zip(parts, self.laws.split(g))):
                m = self._matrix(t, k, law_index)
                lo, hi = m.indptr[i], m.indptr[i + 1]
                out.append((m.indices[lo:hi].astype(np.int64), m.data[lo:hi]))
            return out
        dist = model_phi(self.model, self.space.values(rank), gamma)
        return [self.component_successor(t, k, i, gamma[k], dist) for k, i in enumerate(parts)]

    def stage_costs(self, t: int) -> np.ndarray:
        """Матрица ell_t(z, gamma) формы (|пространство|, |G|)."""
        if t not in self._costs:
            def block(ranks: range) -> np.ndarray:
                out = np.empty((len(ranks), self.laws.size))
                for row, rank in enumerate(ranks):
                    z = self.space.values(rank)
                    for g in range(self.laws.size):
                        out[row, g] = ell(self.model, t, z, self.laws.profile(g))
                return out

            chunks = chunk_ranges(self.space.size, self.workers)
            self._costs[t] = np.vstack(run_ordered(block, chunks, self.workers))
        return self._costs[t]

    def expectation(self, t: int, v_next: np.ndarray) -> np.ndarray:
        """E[V(следующее состояние)] для всех пар (ранг, профиль)."""
        tensor = v_next.reshape(self.space.shape)
        if self.decoupled:
            def column(g: int) -> np.ndarray:
                out = tensor
                for k, law_index in enumerate(self.laws.split(g)):
                    moved = np.moveaxis(out, k, 0)
                    flat = self._matrix(t, k, law_index) @ moved.reshape(moved.shape[0], -1)
                    out = np.moveaxis(np.asarray(flat).reshape(moved.shape), 0, k)
                return out.reshape(-1)

            return np.column_stack(run_ordered(column, list(range(self.laws.size)), self.workers))

        def block(ranks: range) -> np.ndarray:
            out = np.empty((len(ranks), self.laws.size))
            for row, rank in enumerate(ranks):
                for g in range(self.laws.size):
                    acc = tensor
                    for idx, p in self.successors(t, rank, g):
                        acc = np.tensordot(p, acc[idx], axes=1)
                    out[row, g] = float(acc)
            return out

        chunks = chunk_ranges(self.space.size, self.workers)
        return np.vstack(run_ordered(block, chunks, self.workers))

    def sweep(self, t: int, v_next: np.ndarray | None, discount: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        q = self.stage_costs(t)
        if v_next is not None:
            q = q + discount * self.expectation(t, v_next)
        return pick_argmin(q)

    def transition_matrix(self, t: int, policy: np.ndarray) -> sparse.csr_matrix:
        """Матрица переходов замкнутой системы при стационарной политике."""
        rows, cols, vals = [], [], []
        for rank in range(self.space.size):
            ranks = np.zeros(1, dtype=np.int64)
            probs = np.ones(1)
            for (idx, p), size in zip(self.successors(t, rank, int(policy[rank])), self.space.shape):
                ranks = (ranks[:, None] * size + idx[None, :]).ravel()
                probs = (probs[:, None] * p[None, :]).ravel()
            rows.append(np.full(ranks.size, rank))
            cols.append(ranks)
            vals.append(probs)
        n = self.space.size
        return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))

    def initial_law(self) -> tuple[np.ndarray, np.ndarray]:
        """Закон начального индекса в пространстве-произведении."""
        ranks = np.zeros(1, dtype=np.int64)
        probs = np.ones(1)
        for k, (mode, component) in enumerate(zip(self.modes, self.space.components)):
            sp = self.model.subpops[k]
            if mode == "mean_field":
                if sp.init_states is not None:
                    z = np.bincount(np.asarray(sp.init_states), minlength=sp.m) / sp.size
                else:
                    z = np.asarray(sp.init_pmf, dtype=float)
                idx, p = np.array([component.locate_values(z)], dtype=np.int64), np.ones(1)
            elif mode == "anchored":
                lattice, to_grid = self._anchors[k]
                idx, p = initial_subpop_distribution(self.model, k, lattice)
                idx = to_grid[idx]
            else:
                idx, p = initial_subpop_distribution(self.model, k, component)
            ranks = (ranks[:, None] * component.size + idx[None, :]).ravel()
            probs = (probs[:, None] * p[None, :]).ravel()
        return ranks, probs

    def initial_value(self, values: np.ndarray) -> float:
        ranks, probs = self.initial_law()
        return math.fsum(float(p) * float(values[r]) for r, p in zip(ranks, probs))


def value_iteration(engine: BackwardInduction, beta: float, tol: float,
                    max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray, int, list[float]]:
    """
    Итерации оператора Беллмана от V = 0 до sup|V_new - V| < tol (1 - beta) / (2 beta),
    затем жадная политика по итоговой таблице.
    """
    threshold = tol * (1.0 - beta) / (2.0 * beta)
    values = np.zeros(engine.space.size)
    deltas: list[float] = []
    for iteration in range(1, max_iter + 1):
        updated, _ = engine.sweep(1, values, beta)
        delta = float(np.max(np.abs(updated - values)))
        deltas.append(delta)
        values = updated
        logger.debug(f"Итерация {iteration}: delta = {delta:.3e}")
        if delta < threshold:
            break
    else:
        raise SolverError(f"value iteration did not reach tolerance {tol} in {max_iter} sweeps")
    _, policy = engine.sweep(1, values, beta)
    logger.info(f"Итерация значений сошлась за {iteration} шагов, последняя delta = {deltas[-1]:.3e}")
    return values, policy, iteration, deltas


def grid_components(model: TeamModel, quantized: frozenset[int], r: int, cap: int | None = None) -> list[Lattice | Grid]:
    """Точные решётки для k вне quantized, сетки около симплекса для k из quantized."""
    return [Grid(sp.m, r, near_simplex=True, cap=cap) if k in quantized else Lattice(sp.size, sp.m, cap)
            for k, sp in enumerate(model.subpops)]
