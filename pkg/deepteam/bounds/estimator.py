import math

import numpy as np
from loguru import logger

from deepteam.bounds.schemas import LipschitzProfile
from deepteam.exceptions import LipschitzError
from deepteam.kernel.dynamics import ell, hat_f
from deepteam.model.models import StateActionDist, TeamModel
from deepteam.model.utils import random_distribution
from deepteam.scheduler.pool import run_ordered
from deepteam.statespace.laws import LawSpace


def population_constant(model: TeamModel) -> float:
    """C = max_k |X^k| |W^k|."""
    return float(max(sp.m * len(sp.noises) for sp in model.subpops))


def _hypercube_point(model: TeamModel, rng: np.random.Generator, r_probe: int, on_grid: bool) -> StateActionDist:
    if on_grid:
        return tuple(rng.integers(0, r_probe + 1, size=(sp.m, sp.a)) / r_probe for sp in model.subpops)
    return random_distribution(model, rng)


def _simplex_point(model: TeamModel, rng: np.random.Generator, r_probe: int, on_grid: bool) -> tuple[np.ndarray, ...]:
    if on_grid:
        return tuple(rng.multinomial(r_probe, np.full(sp.m, 1.0 / sp.m)) / r_probe for sp in model.subpops)
    return tuple(rng.dirichlet(np.ones(sp.m)) for sp in model.subpops)


def _sup(a, b) -> float:
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))


def _l1(a, b) -> float:
    return max(float(np.sum(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))


def _ratio(numerator: float, denominator: float, what: str, t: int, pair: int) -> float:
    value = numerator / denominator
    if not math.isfinite(value):
        raise LipschitzError(f"{what}: non-finite ratio at t={t}, probe pair {pair}")
    return value


def _pair_ratios(model: TeamModel, laws: LawSpace, t: int, pair: int, seed: int, r_probe: int) -> tuple[float, ...]:
    """Отношения для одной пары проб: (H1, H2, H3, H4)."""
    rng = np.random.default_rng([seed, t, pair])
    on_grid = pair % 2 == 0
    d1 = _hypercube_point(model, rng, r_probe, on_grid)
    d2 = _hypercube_point(model, rng, r_probe, on_grid and pair % 4 == 0)
    h1 = h2 = h3 = h4 = 0.0
    gap = _sup(d1, d2)
    if gap > 0:
        for sp in model.subpops:
            if not sp.kernel.depends_on_distribution:
                continue
            for x in range(sp.m):
                for u in range(sp.a):
                    diff = float(np.max(np.abs(sp.kernel.row(t, x, u, d1) - sp.kernel.row(t, x, u, d2))))
                    h1 = max(h1, _ratio(diff, gap, "kernel", t, pair))
        h2 = _ratio(abs(model.cost.evaluate(t, d1) - model.cost.evaluate(t, d2)), gap, "cost", t, pair)
    z1 = _simplex_point(model, rng, r_probe, on_grid)
    z2 = _simplex_point(model, rng, r_probe, False)
    gap = _l1(z1, z2)
    if gap > 0:
        gamma = laws.profile(int(rng.integers(laws.size)))
        h3 = _ratio(_l1(hat_f(model, t, z1, gamma), hat_f(model, t, z2, gamma)), gap, "hat_f", t, pair)
        h4 = _ratio(abs(ell(model, t, z1, gamma) - ell(model, t, z2, gamma)), gap, "ell", t, pair)
    return h1, h2, h3, h4


def estimate_lipschitz(model: TeamModel, r_probe: int = 2, pairs: int = 64, seed: int = 0,
                       overrides: dict[str, float | list[float]] | None = None,
                       workers: int | None = None) -> LipschitzProfile:
    """
    Оценка констант Липшица как максимума отношений по парам проб.

    H1, H2 - по парам точек гиперкуба D (сетка r_probe и равномерные точки),
    sup-норма. H3, H4 - по парам точек симплекса для f̂ и ell, норма - max_k ||.||_1.
    Пары с номером i совпадают при любом pairs >= i, так что оценка не убывает по pairs.
    Переданные значения overrides заменяют оценки.
    """
    times = list(range(1, (model.T or 1) + 1))
    laws = LawSpace(model)
    logger.info(f"Оценка констант Липшица: {pairs} пар, r_probe={r_probe}, шагов {len(times)}")
    profile = {name: [] for name in ("H1", "H2", "H3", "H4")}
    for t in times:
        ratios = run_ordered(lambda i: _pair_ratios(model, laws, t, i, seed, r_probe), list(range(pairs)), workers)
        for j, name in enumerate(("H1", "H2", "H3", "H4")):
            profile[name].append(max((row[j] for row in ratios), default=0.0))
    max_ratio = max((max(v) for v in profile.values() if v), default=0.0)
    source = "estimated"
    for name, value in (overrides or {}).items():
        if name not in profile:
            raise LipschitzError(f"unknown Lipschitz constant {name!r}")
        profile[name] = list(value) if isinstance(value, (list, tuple)) else [float(value)] * len(times)
        source = "supplied"
    result = LipschitzProfile(T=model.T, C=population_constant(model), probes=pairs, r_probe=r_probe,
                              max_ratio=max_ratio, source=source, **profile)
    logger.info(f"Константы: H1={max(result.H1):.4g}, H2={max(result.H2):.4g}, "
                f"H3={max(result.H3):.4g}, H4={max(result.H4):.4g} ({source})")
    return result


def supplied_profile(T: int | None, H3: float | list[float], H4: float | list[float], C: float,
                     H1: float = 0.0, H2: float = 0.0) -> LipschitzProfile:
    """Профиль из аналитически известных констант."""
    steps = T or 1

    def spread(value):
        return list(value) if isinstance(value, (list, tuple)) else [float(value)] * steps

    return LipschitzProfile(T=T, H1=spread(H1), H2=spread(H2), H3=spread(H3), H4=spread(H4), C=C,
                            source="supplied")
