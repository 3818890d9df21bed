from deepteam.dao.base import BaseCsvDAO
from deepteam.service.schemas import CapacityRow, ConvergenceRow, OptionRow, TrajectoryRow


class OptionDAO(BaseCsvDAO[OptionRow]):
    model = OptionRow
    filename = "fig1a.csv"


class CapacityDAO(BaseCsvDAO[CapacityRow]):
    model = CapacityRow
    filename = "fig1c.csv"


class ServiceTrajectoryDAO(BaseCsvDAO[TrajectoryRow]):
    model = TrajectoryRow
    filename = "fig2.csv"


class ConvergenceDAO(BaseCsvDAO[ConvergenceRow]):
    model = ConvergenceRow
    filename = "fig3.csv"
