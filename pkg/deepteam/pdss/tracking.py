from typing import Collection, Sequence

import numpy as np
from loguru import logger

from deepteam.exceptions import SolverError
from deepteam.kernel.dynamics import hat_f
from deepteam.kernel.mixed import check_decoupled
from deepteam.model.models import TeamModel
from deepteam.pdss.schemas import MixedPolicy
from deepteam.statespace.laws import LawSpace
from deepteam.statespace.schemas import MixedState


def initial_mean_field(model: TeamModel, k: int) -> np.ndarray:
    sp = model.subpops[k]
    if sp.init_states is not None:
        return np.bincount(np.asarray(sp.init_states), minlength=sp.m) / sp.size
    return np.asarray(sp.init_pmf, dtype=float)


def assemble(model: TeamModel, observed: frozenset[int], counts: Sequence[np.ndarray],
             mean_fields: Sequence[np.ndarray]) -> MixedState:
    """Смешанное состояние из счётчиков наблюдаемых (в порядке возрастания k) и средних полей."""
    order = sorted(observed)
    if len(counts) != len(order):
        raise SolverError(f"expected counts for {len(order)} observed sub-populations, got {len(counts)}")
    by_k = dict(zip(order, counts))
    components = tuple(np.asarray(by_k[k], dtype=float) if k in observed else np.asarray(mean_fields[k], dtype=float)
                       for k in range(model.K))
    return MixedState(components=components, observed=observed)


class MixedTracker:
    """
    Онлайн-отслеживание смешанного состояния: наблюдаемые компоненты берутся
    из наблюдений, остальные продвигаются детерминированно через f̂.
    """

    def __init__(self, model: TeamModel, policy: MixedPolicy, laws: LawSpace | None = None):
        self.model = model
        self.policy = policy
        self.laws = laws or LawSpace(model)
        self.observed = frozenset(policy.observed)

    def start(self, counts: Sequence[np.ndarray]) -> tuple[MixedState, object]:
        means = [initial_mean_field(self.model, k) for k in range(self.model.K)]
        p = assemble(self.model, self.observed, counts, means)
        return p, self.policy.start(p)

    def step(self, t: int, p: MixedState, memory, g: int, counts_next: Sequence[np.ndarray]) -> tuple[MixedState, object]:
        means = hat_f(self.model, t, p.values(), self.laws.profile(g))
        p_next = assemble(self.model, self.observed, counts_next, means)
        return p_next, self.policy.advance(memory, g, p_next)


def mixed_trajectory(model: TeamModel, policy: MixedPolicy, observations: Sequence[Sequence[np.ndarray]],
                     check: bool = True) -> list[MixedState]:
    """
    Последовательность смешанных состояний по наблюдениям глубоких состояний S.

    observations[t-1] - счётчики наблюдаемых подпопуляций в порядке возрастания k.
    """
    if model.T is not None and len(observations) != model.T:
        raise SolverError(f"observation sequence has length {len(observations)}, horizon is T={model.T}")
    if not observations:
        raise SolverError("observation sequence is empty")
    if check:
        check_decoupled(model, policy.observed)
    tracker = MixedTracker(model, policy)
    p, memory = tracker.start(observations[0])
    states = [p]
    for t in range(1, len(observations)):
        g = policy.select(t, p, memory)
        p, memory = tracker.step(t, p, memory, g, observations[t])
        states.append(p)
    logger.debug(f"Смешанная траектория длины {len(states)} для S={sorted(policy.observed)}")
    return states


def observed_subpops(model: TeamModel, refs: Collection[str | int] | None) -> frozenset[int]:
    return frozenset(range(model.K)) if refs is None else model.resolve(list(refs))
