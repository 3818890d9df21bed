from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

from loguru import logger

from deepteam.config import settings

T = TypeVar("T")
R = TypeVar("R")


def chunk_ranges(total: int, workers: int) -> list[range]:
    """Делит 0..total-1 на непрерывные диапазоны по числу воркеров."""
    workers = max(1, min(workers, total)) if total else 1
    step, extra = divmod(total, workers)
    ranges, start = [], 0
    for i in range(workers):
        stop = start + step + (1 if i < extra else 0)
        ranges.append(range(start, stop))
        start = stop
    return ranges


def run_ordered(fn: Callable[[T], R], items: Sequence[T], workers: int | None = None) -> list[R]:
    """
    Выполняет fn для каждого элемента и возвращает результаты в исходном порядке.

    Порядок результатов не зависит от числа воркеров, поэтому последующие
    редукции детерминированы.
    """
    workers = settings.WORKERS if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug(f"Запуск {len(items)} задач на {workers} воркерах")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
