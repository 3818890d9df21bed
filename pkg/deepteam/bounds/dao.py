from deepteam.bounds.schemas import BoundRow, LipschitzProfile
from deepteam.dao.base import BaseCsvDAO


class BoundsDAO(BaseCsvDAO[BoundRow]):
    model = BoundRow
    filename = "bounds.csv"

    @classmethod
    def row(cls, quantity: str, value: float, mode: str, n: int, profile: LipschitzProfile,
            r: int | None = None, beta: float | None = None) -> BoundRow:
        return BoundRow(quantity=quantity, value=value, mode=mode, n=n,
                        r="inf" if r is None else str(r), beta="" if beta is None else format(beta, ".17g"),
                        H5_1=profile.H5_1, H6_1=profile.H6_1, C=profile.C,
                        estimated_or_supplied=profile.source)
