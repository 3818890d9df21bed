import math
from itertools import product
from typing import Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from deepteam.config import settings
from deepteam.exceptions import ModelValidationError
from deepteam.model.models import StateActionDist, TableKernel, TeamModel
from deepteam.statespace.lattice import count_deep_states


class ValidationReport(BaseModel):
    valid: bool
    violations: list[str]
    probes: int
    # сокращения перебора вершин; не делают модель некорректной
    notes: list[str] = []


def _check_dist(model: TeamModel, dist: StateActionDist) -> None:
    if len(dist) != model.K:
        raise ModelValidationError(f"D has {len(dist)} blocks for {model.K} sub-populations")
    for sp, block in zip(model.subpops, dist):
        if np.shape(block) != (sp.m, sp.a):
            raise ModelValidationError(f"D block for {sp.name} has shape {np.shape(block)}, expected {(sp.m, sp.a)}")
        if (np.asarray(block) < 0).any() or (np.asarray(block) > 1).any():
            raise ModelValidationError(f"D block for {sp.name} has coordinates outside [0, 1]")


def kernel_eval(model: TeamModel, k: int | str, t: int, y: str, x: str, u: str, dist: StateActionDist) -> float:
    """Вероятность P^k_t(y | x, u, D) по символам алфавитов."""
    sp = model.subpops[model.subpop_index(k) if isinstance(k, str) else k]
    _check_dist(model, dist)
    row = sp.kernel.row(t, sp.state_index(x), sp.action_index(u), dist)
    return float(row[sp.state_index(y)])


def cost_eval(model: TeamModel, t: int, dist: StateActionDist) -> float:
    """Стоимость c_t(D); отрицательное или бесконечное значение - ошибка."""
    value = model.cost.evaluate(t, dist)
    if not math.isfinite(value) or value < 0:
        message = settings.ERROR_MESSAGES["cost"].format(t=t, value=value, dist=[b.tolist() for b in dist])
        logger.error(message)
        raise ModelValidationError(message)
    return value


def random_distribution(model: TeamModel, rng: np.random.Generator) -> StateActionDist:
    """Случайная точка гиперкуба D."""
    return tuple(rng.random((sp.m, sp.a)) for sp in model.subpops)


def _vertex_block(point: Sequence[int], shape: tuple[int, int], r: int) -> np.ndarray:
    return np.asarray(point, dtype=float).reshape(shape) / r


def grid_distributions(model: TeamModel, r: int = 2,
                       limit: int | None = None) -> tuple[list[StateActionDist], list[str]]:
    """
    Вершины сетки {0, 1/r, ..., 1} гиперкуба D.

    Если полная сетка больше limit, она обходится поблочно (остальные блоки 1/2),
    а для слишком больших блоков - по одному столбцу действия. Каждое сокращение
    перебора возвращается заметкой.
    """
    limit = settings.VERTEX_LIMIT if limit is None else limit
    shapes = [(sp.m, sp.a) for sp in model.subpops]
    sizes = [m * a for m, a in shapes]
    if (r + 1) ** sum(sizes) <= limit:
        dists = []
        bounds = np.cumsum([0] + sizes)
        for point in product(range(r + 1), repeat=sum(sizes)):
            dists.append(tuple(_vertex_block(point[lo:hi], shape, r)
                               for lo, hi, shape in zip(bounds[:-1], bounds[1:], shapes)))
        return dists, []

    dists: list[StateActionDist] = []
    notes = [f"grid: {(r + 1) ** sum(sizes)} joint vertices exceed limit {limit}; swept per sub-population"]
    for k, (sp, shape, size) in enumerate(zip(model.subpops, shapes, sizes)):
        def with_block(block: np.ndarray) -> StateActionDist:
            dist = [np.full(s, 0.5) for s in shapes]
            dist[k] = block
            return tuple(dist)

        if (r + 1) ** size <= limit:
            dists += [with_block(_vertex_block(point, shape, r)) for point in product(range(r + 1), repeat=size)]
        elif (r + 1) ** sp.m <= limit:
            notes.append(f"subpops.{sp.name}: {(r + 1) ** size} block vertices exceed limit {limit}; "
                         f"swept one action column at a time")
            for point in product(range(r + 1), repeat=sp.m):
                for u in range(sp.a):
                    block = np.zeros(shape)
                    block[:, u] = np.asarray(point) / r
                    dists.append(with_block(block))
        else:
            notes.append(f"subpops.{sp.name}: {(r + 1) ** sp.m} column vertices exceed limit {limit}; skipped")
    for note in notes:
        logger.warning(f"Перебор вершин сокращён: {note}")
    return dists, notes


def _pmf_violations(path: str, pmf: np.ndarray) -> list[str]:
    out = []
    for t, row in enumerate(np.atleast_2d(pmf), start=1):
        total = float(row.sum())
        if (row < 0).any():
            out.append(f"{path}[t={t}]: negative entry")
        if abs(total - 1.0) > settings.ROW_SUM_TOL:
            out.append(f"{path}[t={t}]: pmf sum {total:.12g} ≠ 1")
    return out


def validate_model(model: TeamModel, probe_count: int | None = None, seed: int = 0) -> ValidationReport:
    """
    Проверяет инварианты модели: распределения шума и начальные распределения,
    нормировку строк ядер и неотрицательность стоимости в пробных точках.
    """
    probe_count = settings.PROBE_COUNT if probe_count is None else probe_count
    logger.info(f"Проверка модели: {probe_count} случайных проб, seed={seed}")
    violations: list[str] = []
    for sp in model.subpops:
        violations += _pmf_violations(f"subpops.{sp.name}.noise_pmf", sp.noise_pmf)
        if sp.init_pmf is not None:
            violations += _pmf_violations(f"subpops.{sp.name}.init_pmf", sp.init_pmf)
        if model.horizon.discounted and len(sp.noise_pmf) > 1:
            violations.append(f"subpops.{sp.name}.noise_pmf: time-varying noise in a discounted model")
        if model.T is not None and 1 < len(sp.noise_pmf) < model.T:
            violations.append(f"subpops.{sp.name}.noise_pmf: {len(sp.noise_pmf)} steps given for T={model.T}")

    rng = np.random.default_rng(seed)
    probes = [random_distribution(model, rng) for _ in range(probe_count)]
    vertices, notes = grid_distributions(model, r=2)
    probes += vertices
    # стационарная модель не зависит от t; конечная проверяется на каждом шаге
    times = list(range(1, (model.T or 1) + 1))

    for sp in model.subpops:
        kernel = sp.kernel
        if isinstance(kernel, TableKernel):
            checks = [(t, 0, probes[0] if probes else None) for t in range(1, len(kernel.tables) + 1)]
        elif not kernel.depends_on_distribution:
            checks = [(t, 0, probes[0] if probes else None) for t in times]
        else:
            checks = [(t, i, d) for t in times for i, d in enumerate(probes)]
        for t, i, dist in checks:
            for x in range(sp.m):
                for u in range(sp.a):
                    row = kernel.row(t, x, u, dist)
                    where = f"(k={sp.name}, t={t}, x={sp.states[x]}, u={sp.actions[u]}, probe={i})"
                    if row.shape != (sp.m,):
                        violations.append(f"subpops.{sp.name}.kernel: row has shape {row.shape} at {where}")
                        continue
                    total = float(row.sum())
                    if abs(total - 1.0) > settings.ROW_SUM_TOL:
                        violations.append(f"subpops.{sp.name}.kernel: row sum {total:.12g} ≠ 1 at {where}")
                    if (row < 0).any() or (row > 1).any() or not np.isfinite(row).all():
                        violations.append(f"subpops.{sp.name}.kernel: entry outside [0, 1] at {where}")

    for t in times:
        for i, dist in enumerate(probes):
            value = model.cost.evaluate(t, dist)
            if not math.isfinite(value) or value < 0:
                violations.append(f"cost: value {value!r} at (t={t}, probe={i}) is negative or non-finite")

    report = ValidationReport(valid=not violations, violations=violations, probes=len(probes), notes=notes)
    if report.valid:
        logger.info(f"Модель корректна, проб: {report.probes}")
    else:
        logger.warning(f"Найдено нарушений: {len(violations)}")
    return report


def space_report(model: TeamModel, r: int | None = None) -> dict[str, int]:
    """Размеры пространств: решётки, оценка (n+1)^m, число законов."""
    lattice = math.prod(count_deep_states(sp.size, sp.m) for sp in model.subpops)
    bound = math.prod((sp.size + 1) ** sp.m for sp in model.subpops)
    laws = math.prod(sp.a if sp.major else sp.a ** sp.m for sp in model.subpops)
    report = {"deep_states": lattice, "deep_state_bound": bound, "local_laws": laws,
              "dp_pairs_per_step": lattice * laws}
    if r is not None:
        report["grid_full"] = math.prod((r + 1) ** sp.m for sp in model.subpops)
    return report
