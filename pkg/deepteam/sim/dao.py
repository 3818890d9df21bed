from typing import Iterable

from deepteam.dao.base import BaseCsvDAO
from deepteam.model.models import TeamModel
from deepteam.sim.schemas import (StrategyEvaluation, SummaryRow, Trajectory, TrajectoryCostRow,
                                  TrajectoryStateRow)


class TrajectoryStateDAO(BaseCsvDAO[TrajectoryStateRow]):
    model = TrajectoryStateRow
    filename = "trajectory.csv"

    @classmethod
    def rows_for(cls, model: TeamModel, trajectories: Iterable[Trajectory]) -> list[tuple]:
        rows = []
        for trajectory in trajectories:
            for t, counts in enumerate(trajectory.counts, start=1):
                for sp, block in zip(model.subpops, counts):
                    rows.extend((trajectory.rep, t, sp.name, state, c) for state, c in zip(sp.states, block))
        return rows


class TrajectoryCostDAO(BaseCsvDAO[TrajectoryCostRow]):
    model = TrajectoryCostRow
    filename = "trajectory_costs.csv"

    @classmethod
    def rows_for(cls, trajectories: Iterable[Trajectory]) -> list[tuple]:
        return [(trajectory.rep, t, cost) for trajectory in trajectories
                for t, cost in enumerate(trajectory.costs, start=1)]


class SummaryDAO(BaseCsvDAO[SummaryRow]):
    model = SummaryRow
    filename = "summary.csv"

    @classmethod
    def rows_for(cls, evaluations: Iterable[StrategyEvaluation]) -> list[tuple]:
        return [(e.strategy, e.mean, e.ci_half, e.reps, e.seed) for e in evaluations]
