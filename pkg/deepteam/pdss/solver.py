import math
from itertools import product
from typing import Collection

import numpy as np
from loguru import logger

from deepteam.bounds.estimator import estimate_lipschitz
from deepteam.bounds.recursions import check_beta_h3
from deepteam.config import settings
from deepteam.dss.engine import BackwardInduction, grid_components, pick_argmin, value_iteration
from deepteam.dss.schemas import DPSolution, PolicyTable, ValueTable
from deepteam.dss.solver import require_discounted, require_finite, backward_induction
from deepteam.exceptions import check_cap
from deepteam.kernel.dynamics import ell, hat_f, model_phi
from deepteam.kernel.mixed import check_decoupled
from deepteam.kernel.transition import combine_rows, initial_subpop_distribution, subpop_row
from deepteam.model.models import TeamModel
from deepteam.pdss.schemas import TreeMixedPolicy, TreeSolution
from deepteam.pdss.tracking import initial_mean_field
from deepteam.scheduler.pool import run_ordered
from deepteam.sim.evaluation import Z_95
from deepteam.statespace.lattice import Lattice
from deepteam.statespace.laws import LawSpace
from deepteam.statespace.space import ProductSpace


def _mean_field_engine(model: TeamModel, observed: frozenset[int], r: int, cap: int | None,
                       workers: int | None) -> tuple[BackwardInduction, frozenset[int]]:
    hidden = frozenset(range(model.K)) - observed
    check_decoupled(model, observed)
    space = ProductSpace(grid_components(model, hidden, r, cap), cap)
    laws = LawSpace(model, cap)
    modes = ["mean_field" if k in hidden else "lattice" for k in range(model.K)]
    return BackwardInduction(model, space, laws, modes, cap=cap, workers=workers), hidden


def solve_pdss_quantized_finite(model: TeamModel, observed: Collection[int], r: int, cap: int | None = None,
                                workers: int | None = None) -> DPSolution:
    """
    Квантованный DP над смешанными состояниями: средние поля S^c на сетке с шагом 1/r,
    глубокие состояния S - точные. Переход средних полей детерминирован (f̂ и Q).
    """
    T = require_finite(model, "solve_pdss_quantized_finite")
    observed = frozenset(observed)
    logger.info(f"Квантованный PDSS: S={sorted(observed)}, r={r}, T={T}")
    engine, hidden = _mean_field_engine(model, observed, r, cap, workers)
    values, policies = backward_induction(engine, T)
    return DPSolution(values=values, policies=policies, optimal_cost=engine.initial_value(values[0].values),
                      space=engine.space, laws=engine.laws, quantized=hidden, r=r)


def value_iteration_pdss_quantized(model: TeamModel, observed: Collection[int], r: int, tol: float = 1e-6,
                                   h3: float | None = None, cap: int | None = None,
                                   workers: int | None = None) -> DPSolution:
    """
    Стационарная квантованная задача PDSS. Требует beta H3 < 1; без явного h3
    константа оценивается пробами f̂.
    """
    beta = require_discounted(model, "value_iteration_pdss_quantized")
    observed = frozenset(observed)
    if h3 is None:
        h3 = max(estimate_lipschitz(model, workers=workers).H3)
    check_beta_h3(beta, h3)
    logger.info(f"Итерация значений PDSS: S={sorted(observed)}, r={r}, beta*H3={beta * h3:.4g}")
    engine, hidden = _mean_field_engine(model, observed, r, cap, workers)
    values, policy, iterations, deltas = value_iteration(engine, beta, tol)
    return DPSolution(values=[ValueTable(t=-1, values=values)], policies=[PolicyTable(t=-1, gamma=policy)],
                      optimal_cost=engine.initial_value(values), space=engine.space, laws=engine.laws,
                      quantized=hidden, r=r, iterations=iterations, deltas=deltas)


def _node_expander(model: TeamModel, laws: LawSpace, lattices: dict[int, Lattice], order: list[int], t: int, T: int):
    """Разворачивает один узел: стоимости шага по профилям и рёбра к детям."""
    observed = set(order)

    def expand(node: tuple[str, tuple[np.ndarray, ...]]) -> tuple[np.ndarray, list[tuple[int, float, str, tuple]]]:
        key, blocks = node
        z = tuple(blocks[k] / model.subpops[k].size if k in observed else blocks[k] for k in range(model.K))
        stage = np.empty(laws.size)
        edges = []
        for g in range(laws.size):
            gamma = laws.profile(g)
            stage[g] = ell(model, t, z, gamma)
            if t == T:
                continue
            dist = model_phi(model, z, gamma)
            means = hat_f(model, t, z, gamma)
            parts = [subpop_row(model, t, k, lattices[k], blocks[k], dist, gamma[k]) for k in order]
            for combo in product(*(range(ranks.size) for ranks, _ in parts)):
                prob = 1.0
                child = list(means)
                labels = []
                for k, (ranks, probs), j in zip(order, parts, combo):
                    prob *= float(probs[j])
                    child[k] = lattices[k].points[ranks[j]]
                    labels.append(str(int(ranks[j])))
                edges.append((g, prob, f"{key}/{g}:{'.'.join(labels)}", tuple(child)))
        return stage, edges

    return expand


def _sample_roots(root_ranks: np.ndarray, root_probs: np.ndarray, samples: int,
                  seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Выборка начальных наблюдаемых состояний; возвращает уникальные ранги и их частоты."""
    rng = np.random.default_rng(seed)
    drawn = rng.choice(root_ranks.size, size=samples, p=root_probs / root_probs.sum())
    unique, counts = np.unique(drawn, return_counts=True)
    return root_ranks[unique], counts


def solve_pdss_exact_small(model: TeamModel, observed: Collection[int], cap: int | None = None,
                           workers: int | None = None, root_limit: int | None = None,
                           samples: int | None = None, seed: int = 0) -> TreeSolution:
    """
    Точный DP на дереве достижимых смешанных состояний.

    Ключ узла - история: ранги наблюдаемых глубоких состояний при t=1,
    затем для каждого шага "/<индекс профиля>:<ранги>". Дерево строится
    по уровням, узлы уровня разворачиваются через run_ordered; значения
    поднимаются от t=T к t=1. Если начальных состояний больше root_limit,
    усреднение по начальному закону заменяется выборкой с 95% интервалом.
    """
    T = require_finite(model, "solve_pdss_exact_small")
    observed = frozenset(observed)
    order = sorted(observed)
    check_decoupled(model, observed)
    root_limit = settings.TREE_ROOT_LIMIT if root_limit is None else root_limit
    samples = settings.TREE_ROOT_SAMPLES if samples is None else samples
    laws = LawSpace(model, cap)
    lattices = {k: Lattice(model.subpops[k].size, model.subpops[k].m, cap) for k in order}
    shape = [lattices[k].size for k in order]
    init_parts = [initial_subpop_distribution(model, k, lattices[k]) for k in order]
    root_ranks, root_probs = combine_rows(init_parts, shape)
    exact = root_ranks.size <= root_limit
    if exact:
        weights = root_probs.astype(float)
    else:
        root_ranks, counts = _sample_roots(root_ranks, root_probs, samples, seed)
        weights = counts / float(samples)
        logger.warning(f"Дерево PDSS: начальных состояний больше {root_limit}, "
                       f"выборка {samples} (seed={seed}), уникальных {root_ranks.size}")
    branching = laws.size * math.prod(shape)
    estimate = root_ranks.size * sum(branching ** t for t in range(T))
    check_cap("reachable mixed-state tree", f"{root_ranks.size} * sum_(t<{T}) ({laws.size}*{math.prod(shape)})^t",
              estimate, cap)
    logger.info(f"Дерево PDSS: S={order}, T={T}, оценка узлов {estimate}")

    # уровни: ключ, блоки; рёбра хранят индекс ребёнка на следующем уровне
    level = []
    for flat in root_ranks:
        ranks = np.unravel_index(int(flat), shape) if shape else ()
        blocks = [initial_mean_field(model, k) for k in range(model.K)]
        for k, rank in zip(order, ranks):
            blocks[k] = lattices[k].points[int(rank)]
        level.append((".".join(str(int(rank)) for rank in ranks), tuple(blocks)))
    levels = []
    for t in range(1, T + 1):
        expanded = run_ordered(_node_expander(model, laws, lattices, order, t, T), level, workers)
        children = []
        stages, links = [], []
        for stage, edges in expanded:
            stages.append(stage)
            links.append([(g, prob, len(children) + i) for i, (g, prob, _, _) in enumerate(edges)])
            children.extend((key, blocks) for _, _, key, blocks in edges)
        levels.append(([key for key, _ in level], stages, links))
        logger.debug(f"Уровень t={t}: {len(level)} узлов")
        level = children

    values: dict[str, float] = {}
    policy: dict[str, int] = {}
    v_next = np.zeros(0)
    for keys, stages, links in reversed(levels):
        v = np.empty(len(keys))
        for i, (key, stage, edges) in enumerate(zip(keys, stages, links)):
            q = stage.copy()
            for g, prob, child in edges:
                q[g] += prob * v_next[child]
            best, choice = pick_argmin(q[None, :])
            v[i] = best[0]
            values[key] = float(best[0])
            policy[key] = int(choice[0])
        v_next = v

    roots = {key: float(value) for key, value in zip(levels[0][0], v_next)}
    initial = math.fsum(float(w) * float(value) for w, value in zip(weights, v_next))
    half_width = 0.0
    if not exact:
        drawn = np.repeat(v_next, counts)
        half_width = Z_95 * float(np.std(drawn, ddof=1)) / math.sqrt(samples) if samples > 1 else math.inf
        logger.info(f"Дерево PDSS: оценка V_1 по выборке {initial:.10g} +- {half_width:.3g}")
    logger.info(f"Дерево PDSS: {len(values)} узлов, V_1 = {initial:.10g}")
    return TreeSolution(values=values, policy=policy, roots=roots, initial_value=initial, observed=observed, T=T,
                        initial_exact=exact, initial_half_width=half_width, samples=0 if exact else samples)


def tree_policy(model: TeamModel, solution: TreeSolution) -> TreeMixedPolicy:
    lattices = {k: Lattice(model.subpops[k].size, model.subpops[k].m) for k in sorted(solution.observed)}
    return TreeMixedPolicy(solution, lattices)
