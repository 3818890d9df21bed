from pathlib import Path

from deepteam.dao.base import BaseCsvDAO
from deepteam.dao.session_maker import OutputSession
from deepteam.dss.schemas import (DPSolution, GammaRow, GridPolicyRow, GridValueRow, PolicyRow, ValueRow)
from deepteam.model.models import TeamModel


class ValueDAO(BaseCsvDAO[ValueRow]):
    model = ValueRow
    filename = "values.csv"


class PolicyDAO(BaseCsvDAO[PolicyRow]):
    model = PolicyRow
    filename = "policy.csv"


class GridValueDAO(BaseCsvDAO[GridValueRow]):
    model = GridValueRow
    filename = "values.csv"


class GridPolicyDAO(BaseCsvDAO[GridPolicyRow]):
    model = GridPolicyRow
    filename = "policy.csv"


class GammaDAO(BaseCsvDAO[GammaRow]):
    """Расшифровка индекса профиля в действия по (k, состояние)."""
    model = GammaRow
    filename = "gamma.csv"

    @classmethod
    def rows_for(cls, model: TeamModel, solution: DPSolution) -> list[tuple]:
        names = [sp.name for sp in model.subpops]
        used = sorted({int(g) for table in solution.policies for g in table.gamma})
        return [(g, names[k], state, action) for g in used for k, state, action in solution.laws.decode(g)]


def write_solution(session: OutputSession, model: TeamModel, solution: DPSolution,
                   comment: str | None = None) -> list[Path]:
    """Записывает values.csv, policy.csv и gamma.csv; для квантованных таблиц ключ - grid_key."""
    value_dao, policy_dao = (GridValueDAO, GridPolicyDAO) if solution.quantized else (ValueDAO, PolicyDAO)
    values = [(table.t, rank, float(v)) for table in solution.values for rank, v in enumerate(table.values)]
    policy = [(table.t, rank, int(g)) for table in solution.policies for rank, g in enumerate(table.gamma)]
    return [
        value_dao.write_rows(session, values, comment=comment),
        policy_dao.write_rows(session, policy, comment=comment),
        GammaDAO.write_rows(session, GammaDAO.rows_for(model, solution), comment=comment),
    ]
