from pathlib import Path

from deepteam.dao.base import BaseCsvDAO
from deepteam.dao.session_maker import OutputSession
from deepteam.pdss.schemas import TreeRow, TreeSolution


class TreeDAO(BaseCsvDAO[TreeRow]):
    model = TreeRow
    filename = "tree.csv"

    @classmethod
    def rows_for(cls, solution: TreeSolution) -> list[tuple]:
        # шаг узла - число переходов в ключе плюс один
        rows = [(key.count("/") + 1, key, value, solution.policy[key]) for key, value in solution.values.items()]
        return sorted(rows, key=lambda row: (row[0], row[1]))


def write_tree(session: OutputSession, solution: TreeSolution, comment: str | None = None) -> Path:
    return TreeDAO.write_rows(session, TreeDAO.rows_for(solution), comment=comment)
