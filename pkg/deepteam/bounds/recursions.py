import math

from loguru import logger

from deepteam.bounds.schemas import BoundMode, LipschitzProfile
from deepteam.config import settings
from deepteam.exceptions import AssumptionError, SolverError


def _at(values: list[float], t: int) -> float:
    # последнее значение действует для всех следующих шагов
    return values[min(t, len(values)) - 1]


def h_recursions(profile: LipschitzProfile, T: int | None = None) -> LipschitzProfile:
    """
    H5_t = H4_t + H5_{t+1} H3_t,  H6_t = H5_{t+1} + H6_{t+1},  H5_{T+1} = H6_{T+1} = 0.
    """
    T = T or profile.T
    if T is None or T < 1:
        raise SolverError("h_recursions needs a horizon T >= 1")
    if not profile.H3 or not profile.H4:
        raise SolverError("h_recursions needs H3 and H4 for every step")
    h5 = [0.0] * (T + 1)
    h6 = [0.0] * (T + 1)
    for t in range(T, 0, -1):
        h5[t - 1] = _at(profile.H4, t) + h5[t] * _at(profile.H3, t)
        h6[t - 1] = h5[t] + h6[t]
    logger.debug(f"H5_1={h5[0]:.6g}, H6_1={h6[0]:.6g} при T={T}")
    return profile.model_copy(update={"H5": h5[:T], "H6": h6[:T], "T": T})


def epsilon_finite(profile: LipschitzProfile, n: int, r: int | None = None, mode: BoundMode = "both") -> float:
    """
    Границы потерь: poi - (H5_1 + H6_1) C / sqrt(n), poc - (H5_1 + H6_1) / r,
    both - сумма. r = None означает r = бесконечность.
    """
    if n < 1 or (r is not None and r < 1):
        raise SolverError(f"epsilon_finite: need n >= 1 and r >= 1, got n={n}, r={r}")
    if not profile.H5:
        profile = h_recursions(profile)
    total = profile.H5_1 + profile.H6_1
    information = total * profile.C / math.sqrt(n)
    computation = 0.0 if r is None else total / r
    if mode == "poi":
        return information
    if mode == "poc":
        return computation
    if mode == "both":
        return information + computation
    raise SolverError(f"unknown bound mode {mode!r}")


def check_beta_h3(beta: float, h3: float) -> None:
    if beta * h3 >= 1.0:
        message = settings.ERROR_MESSAGES["beta_h3"].format(value=beta * h3, beta=beta, h3=h3)
        logger.error(message)
        raise AssumptionError(message)


def epsilon_discounted(profile: LipschitzProfile, n: int, beta: float) -> float:
    """H4 C / ((1 - beta)(1 - beta H3) sqrt(n)), требует beta H3 < 1."""
    h3 = max(profile.H3) if profile.H3 else 0.0
    h4 = max(profile.H4) if profile.H4 else 0.0
    check_beta_h3(beta, h3)
    return h4 * profile.C / ((1.0 - beta) * (1.0 - beta * h3) * math.sqrt(n))
