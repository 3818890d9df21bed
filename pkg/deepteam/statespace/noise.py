import numpy as np
from loguru import logger
from scipy.special import gammaln, xlogy

from deepteam.config import settings
from deepteam.exceptions import ModelValidationError, check_cap
from deepteam.statespace.lattice import count_deep_states, enumerate_deep_states
from deepteam.statespace.schemas import NoiseEmpirical


def multinomial_log_pmf(counts: np.ndarray, pmf: np.ndarray) -> np.ndarray:
    """Логарифм мультиномиальной вероятности для строк counts."""
    counts = np.atleast_2d(counts)
    n = counts.sum(axis=1)
    return gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) + xlogy(counts, pmf).sum(axis=1)


def enumerate_noise_empiricals(n: int, noise_pmf, cap: int | None = None) -> list[NoiseEmpirical]:
    """
    Все эмпирические распределения шума n агентов с их вероятностями.

    Атомы нулевой вероятности опускаются.
    """
    pmf = np.asarray(noise_pmf, dtype=float)
    size = count_deep_states(n, pmf.size)
    check_cap("noise empiricals", f"C({n}+{pmf.size}-1,{pmf.size}-1)", size, cap)
    counts = enumerate_deep_states(n, pmf.size, cap)
    weights = np.exp(multinomial_log_pmf(counts, pmf))
    keep = weights > 0
    total = float(weights[keep].sum())
    if abs(total - 1.0) > settings.WEIGHT_SUM_TOL:
        logger.error(f"Сумма весов шума {total} отличается от 1")
        raise ModelValidationError(f"noise empirical weights sum to {total!r}, expected 1")
    logger.debug(f"Эмпирических распределений шума: {int(keep.sum())} из {size}")
    return [NoiseEmpirical(counts=tuple(int(c) for c in row), weight=float(w))
            for row, w in zip(counts[keep], weights[keep])]
