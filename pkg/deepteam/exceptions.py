from deepteam.config import settings


class DeepTeamError(Exception):
    """Базовая ошибка пакета: несёт код выхода CLI."""
    exit_code: int = 1
    kind: str = "DeepTeamError"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def line(self) -> str:
        # одна строка для stderr, пригодная для разбора
        text = " ".join(self.message.split())
        return f"error kind={self.kind} code={self.exit_code} message={text}"


class ModelValidationError(DeepTeamError):
    exit_code = 2
    kind = "ModelValidation"


class SolverError(DeepTeamError):
    exit_code = 2
    kind = "Solver"


class LipschitzError(DeepTeamError):
    exit_code = 2
    kind = "Lipschitz"


class CapExceededError(DeepTeamError):
    exit_code = 3
    kind = "CapExceeded"

    def __init__(self, space: str, formula: str, value: int, cap: int):
        super().__init__(settings.ERROR_MESSAGES["cap"].format(space=space, formula=formula, value=value, cap=cap))
        self.space = space
        self.value = value


class AssumptionError(DeepTeamError):
    exit_code = 4
    kind = "Assumption"


def check_cap(space: str, formula: str, value: int, cap: int | None = None) -> None:
    """Отказ, если размер пространства превышает лимит."""
    limit = settings.CAP if cap is None else cap
    if value > limit:
        raise CapExceededError(space, formula, value, limit)
