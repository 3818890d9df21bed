import math
from pathlib import Path
from typing import Sequence

from loguru import logger

from deepteam.dao.session_maker import OutputSession
from deepteam.dss.schemas import DPSolution
from deepteam.dss.solver import value_iteration_dss
from deepteam.exceptions import ModelValidationError
from deepteam.model.models import TeamModel
from deepteam.pdss.schemas import GridMixedPolicy
from deepteam.pdss.solver import value_iteration_pdss_quantized
from deepteam.scheduler.pool import run_ordered
from deepteam.service.dao import CapacityDAO, ConvergenceDAO, OptionDAO, ServiceTrajectoryDAO
from deepteam.service.model import SERVER, USERS, build_service_model
from deepteam.service.schemas import ConvergenceRow, ServiceParams
from deepteam.sim.evaluation import empirical_gap
from deepteam.sim.rollout import simulate_rollout
from deepteam.sim.strategies import MixedStrategy, TableStrategy

DEFAULT_NS = (10, 20, 50, 100, 200)


def resolve_levels(rule: str, n: int) -> int:
    """Правило числа уровней квантования: "n", "sqrt" (ceil(sqrt n)) или фиксированное число."""
    if rule == "n":
        return n
    if rule == "sqrt":
        return math.ceil(math.sqrt(n))
    try:
        value = int(rule)
    except ValueError:
        raise ModelValidationError(f"unknown quantization rule {rule!r}; use n, sqrt or an integer") from None
    if value < 1:
        raise ModelValidationError(f"quantization levels must be >= 1, got {value}")
    return value


def _indices(model: TeamModel) -> tuple[int, int]:
    return model.subpop_index(USERS), model.subpop_index(SERVER)


def policy_cells(model: TeamModel, solution: DPSolution) -> list[tuple[float, float, int, int, float]]:
    """Для каждой клетки (d, x0): вариант для x=0, вариант для x=1 и следующая мощность u0."""
    users, server = _indices(model)
    n = model.subpops[users].size
    capacities = [float(s) for s in model.subpops[server].states]
    options = model.subpops[users].actions
    table = solution.table(1).gamma
    cells = []
    for c in range(n + 1):
        for j, x0 in enumerate(capacities):
            parts = [0] * model.K
            parts[users] = solution.space.components[users].rank([n - c, c])
            parts[server] = solution.space.components[server].rank([1 if i == j else 0 for i in range(len(capacities))])
            gamma = solution.laws.profile(int(table[solution.space.join(parts)]))
            cells.append((c / n, x0, int(options[gamma[users][0]]), int(options[gamma[users][1]]),
                          capacities[int(gamma[server][j])]))
    return cells


def _convergence_point(params: ServiceParams, n: int, rule: str, tol: float, reps: int, seed: int,
                       cap: int | None) -> ConvergenceRow:
    model = build_service_model(params.with_n(n))
    users, server = _indices(model)
    dss = value_iteration_dss(model, tol=tol, cap=cap)
    pdss = value_iteration_pdss_quantized(model, {server}, resolve_levels(rule, n), tol=tol, cap=cap)
    gap = empirical_gap(model, MixedStrategy(model, GridMixedPolicy(pdss, frozenset({server}))),
                        TableStrategy(dss), reps=reps, seed=seed, exact=False)
    logger.info(f"n={n}: J_dss={dss.optimal_cost:.6g}, разрыв {gap.gap:.4g} ± {gap.ci_half:.3g}")
    return ConvergenceRow(n=n, J_dss=dss.optimal_cost, J_pdss_quantized=dss.optimal_cost + gap.mean_a - gap.mean_b,
                          gap=gap.gap)


def reproduce_figures(session: OutputSession, params: ServiceParams | None = None,
                      ns: Sequence[int] = DEFAULT_NS, rule: str = "n", tol: float = 1e-6, reps: int = 200,
                      seed: int = 0, steps: int = 100, cap: int | None = None,
                      workers: int | None = None) -> list[Path]:
    """
    Данные рисунков: fig1a/fig1b - вариант обслуживания при x=0/x=1, fig1c - мощность,
    fig2 - одна траектория, fig3 - сходимость квантованного PDSS к DSS по n.
    """
    params = params or ServiceParams()
    header = (f"params {params.model_dump_json()} ns={list(ns)} rule={rule} tol={tol} reps={reps} "
              f"seed={seed} steps={steps}")
    logger.info(f"Воспроизведение рисунков: n={params.n}, ns={list(ns)}")
    model = build_service_model(params)
    solution = value_iteration_dss(model, tol=tol, cap=cap, workers=workers)
    cells = policy_cells(model, solution)

    trajectory = simulate_rollout(model, TableStrategy(solution), horizon=steps, seed=seed)
    users, server = _indices(model)
    capacities = [float(s) for s in model.subpops[server].states]
    path = [(t, counts[users][1] / params.n, capacities[counts[server].index(1)])
            for t, counts in enumerate(trajectory.counts, start=1)]

    points = run_ordered(lambda n: _convergence_point(params, n, rule, tol, reps, seed, cap), list(ns), workers)
    return [
        OptionDAO.write_rows(session, [(d, x0, idle) for d, x0, idle, _, _ in cells], "fig1a.csv", header),
        OptionDAO.write_rows(session, [(d, x0, busy) for d, x0, _, busy, _ in cells], "fig1b.csv", header),
        CapacityDAO.write_rows(session, [(d, x0, u0) for d, x0, _, _, u0 in cells], "fig1c.csv", header),
        ServiceTrajectoryDAO.write_rows(session, path, "fig2.csv", header),
        ConvergenceDAO.write_rows(session, points, "fig3.csv", header),
    ]
