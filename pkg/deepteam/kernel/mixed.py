from typing import Collection, Sequence

import numpy as np
from loguru import logger

from deepteam.config import settings
from deepteam.exceptions import AssumptionError
from deepteam.kernel.dynamics import bar_f, hat_f
from deepteam.model.models import TeamModel
from deepteam.model.utils import random_distribution
from deepteam.statespace.schemas import MixedState, NoiseEmpirical


def check_decoupled(model: TeamModel, observed: Collection[int], seed: int = 0, probes: int | None = None) -> None:
    """
    Проба: возмущение координат D ненаблюдаемых подпопуляций не должно менять
    ядра (и динамику) наблюдаемых. Иначе - AssumptionError с указанием (k, x, u, пробы).
    """
    probes = settings.DECOUPLING_PROBES if probes is None else probes
    hidden = [k for k in range(model.K) if k not in observed]
    if not hidden:
        return
    rng = np.random.default_rng(seed)
    times = sorted({1, model.T or 1})
    for k in sorted(observed):
        sp = model.subpops[k]
        if not sp.kernel.depends_on_distribution and (sp.dynamics is None or not sp.dynamics.depends_on_distribution):
            continue
        for x in range(sp.m):
            for u in range(sp.a):
                for i in range(probes):
                    base = random_distribution(model, rng)
                    moved = list(base)
                    for h in hidden:
                        moved[h] = rng.random(base[h].shape)
                    moved = tuple(moved)
                    for t in times:
                        same = np.allclose(sp.kernel.row(t, x, u, base), sp.kernel.row(t, x, u, moved),
                                           rtol=0.0, atol=settings.ROW_SUM_TOL)
                        if same and sp.dynamics is not None:
                            same = all(sp.dynamics.next_state(t, x, u, base, w) == sp.dynamics.next_state(t, x, u, moved, w)
                                       for w in range(len(sp.noises)))
                        if not same:
                            message = settings.ERROR_MESSAGES["decoupling"].format(
                                k=sp.name, x=sp.states[x], u=sp.actions[u], probe=i)
                            logger.error(message)
                            raise AssumptionError(message)
    logger.debug(f"Проба независимости пройдена для наблюдаемых {sorted(observed)}")


def mixed_step(model: TeamModel, t: int, p: MixedState, gamma: Sequence[np.ndarray],
               noise_emp: Sequence[NoiseEmpirical | Sequence[int] | None], check: bool = True) -> MixedState:
    """
    Шаг смешанного состояния: наблюдаемые компоненты - через f̄ с данным
    эмпирическим распределением шума, ненаблюдаемые - детерминированно через f̂.
    """
    if check:
        check_decoupled(model, p.observed)
    z = p.values()
    observed = sorted(p.observed)
    stochastic = bar_f(model, t, z, gamma, noise_emp, subpops=observed) if observed else (None,) * model.K
    mean_field = hat_f(model, t, z, gamma)
    components = []
    for k, sp in enumerate(model.subpops):
        if k in p.observed:
            # для наблюдаемых хранятся счётчики (ожидаемые, если шум не вырожден)
            components.append(stochastic[k] * sp.size)
        else:
            components.append(mean_field[k])
    return MixedState(components=tuple(components), observed=p.observed)
