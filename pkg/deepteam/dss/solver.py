from typing import Collection, Literal

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse.linalg import spsolve

from deepteam.config import settings
from deepteam.dss.engine import BackwardInduction, grid_components, value_iteration
from deepteam.dss.schemas import DPSolution, PolicyTable, ValueTable
from deepteam.exceptions import SolverError
from deepteam.kernel.mixed import check_decoupled
from deepteam.kernel.transition import lattices_for
from deepteam.model.models import TeamModel
from deepteam.statespace.laws import LawSpace
from deepteam.statespace.space import ProductSpace


def require_finite(model: TeamModel, operation: str) -> int:
    if model.horizon.discounted:
        raise SolverError(settings.ERROR_MESSAGES["horizon_finite"].format(operation=operation))
    return model.T


def require_discounted(model: TeamModel, operation: str) -> float:
    if not model.horizon.discounted:
        raise SolverError(settings.ERROR_MESSAGES["horizon_discounted"].format(operation=operation))
    return model.beta


def backward_induction(engine: BackwardInduction, T: int) -> tuple[list[ValueTable], list[PolicyTable]]:
    """V_{T+1} = 0, затем V_t = min_gamma [ell_t + E V_{t+1}] для t = T..1."""
    values: list[ValueTable] = []
    policies: list[PolicyTable] = []
    v_next = None
    for t in range(T, 0, -1):
        v, policy = engine.sweep(t, v_next)
        values.append(ValueTable(t=t, values=v))
        policies.append(PolicyTable(t=t, gamma=policy))
        v_next = v
        logger.info(f"Шаг t={t}: max V = {float(v.max()):.6g}")
    return values[::-1], policies[::-1]


def solve_dss_finite(model: TeamModel, cap: int | None = None, workers: int | None = None,
                     route: Literal["kernel", "noise"] = "kernel") -> DPSolution:
    """
    Оптимальное решение при полном обмене глубоким состоянием (конечный горизонт).

    Возвращает таблицы V_t, политики и J = E[V_1(d_1)] по начальному закону.
    """
    T = require_finite(model, "solve_dss_finite")
    logger.info(f"DSS конечный горизонт: T={T}, маршрут {route}")
    space = ProductSpace(lattices_for(model, cap), cap)
    laws = LawSpace(model, cap)
    engine = BackwardInduction(model, space, laws, ["lattice"] * model.K, route=route, cap=cap, workers=workers)
    values, policies = backward_induction(engine, T)
    optimal = engine.initial_value(values[0].values)
    logger.info(f"Оптимальная стоимость J = {optimal:.10g}")
    return DPSolution(values=values, policies=policies, optimal_cost=optimal, space=space, laws=laws)


def solve_dss_quantized(model: TeamModel, r: int, quantize_subpops: Collection[int], cap: int | None = None,
                        workers: int | None = None) -> DPSolution:
    """
    Квантованный DP: компоненты из quantize_subpops - сетка с шагом 1/r около симплекса,
    остальные - точные решётки. Перед поиском в таблице следующее состояние квантуется.
    """
    T = require_finite(model, "solve_dss_quantized")
    quantized = frozenset(quantize_subpops)
    check_decoupled(model, frozenset(range(model.K)) - quantized)
    logger.info(f"Квантованный DSS: r={r}, квантуются {sorted(quantized)}")
    space = ProductSpace(grid_components(model, quantized, r, cap), cap)
    laws = LawSpace(model, cap)
    modes = ["anchored" if k in quantized else "lattice" for k in range(model.K)]
    engine = BackwardInduction(model, space, laws, modes, cap=cap, workers=workers)
    values, policies = backward_induction(engine, T)
    optimal = engine.initial_value(values[0].values)
    return DPSolution(values=values, policies=policies, optimal_cost=optimal, space=space, laws=laws,
                      quantized=quantized, r=r)


def value_iteration_dss(model: TeamModel, tol: float = 1e-6, cap: int | None = None,
                        workers: int | None = None) -> DPSolution:
    """Стационарное решение дисконтированной задачи итерацией значений."""
    beta = require_discounted(model, "value_iteration_dss")
    logger.info(f"Итерация значений DSS: beta={beta}, tol={tol}")
    space = ProductSpace(lattices_for(model, cap), cap)
    laws = LawSpace(model, cap)
    engine = BackwardInduction(model, space, laws, ["lattice"] * model.K, cap=cap, workers=workers)
    values, policy, iterations, deltas = value_iteration(engine, beta, tol)
    return DPSolution(values=[ValueTable(t=-1, values=values)], policies=[PolicyTable(t=-1, gamma=policy)],
                      optimal_cost=engine.initial_value(values), space=space, laws=laws,
                      iterations=iterations, deltas=deltas)


def evaluate_stationary_dss(model: TeamModel, solution: DPSolution, workers: int | None = None) -> np.ndarray:
    """
    Точная стоимость стационарной политики: решение (I - beta P) J = c
    разреженным методом.
    """
    beta = require_discounted(model, "evaluate_stationary_dss")
    if not solution.stationary:
        raise SolverError("evaluate_stationary_dss needs a stationary policy table")
    modes = ["anchored" if k in solution.quantized else "lattice" for k in range(model.K)]
    engine = BackwardInduction(model, solution.space, solution.laws, modes, workers=workers)
    policy = solution.policies[0].gamma
    costs = engine.stage_costs(1)[np.arange(solution.space.size), policy]
    matrix = sparse.identity(solution.space.size, format="csc") - beta * engine.transition_matrix(1, policy).tocsc()
    values = np.asarray(spsolve(matrix, costs)).reshape(-1)
    logger.info(f"Оценка политики: max J = {float(values.max()):.6g}")
    return values
