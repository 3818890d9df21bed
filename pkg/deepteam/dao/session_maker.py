import os
import tempfile
from contextlib import contextmanager
from functools import wraps
from pathlib import Path
from typing import Generator

from loguru import logger

from deepteam.config import settings
from deepteam.exceptions import ModelValidationError


class OutputSession:
    """Набор файлов, подготовленных во временных копиях до фиксации."""

    def __init__(self, outdir: Path, force: bool = False):
        self.outdir = outdir
        self.force = force
        self._staged: dict[Path, Path] = {}

    def target(self, filename: str) -> Path:
        return self.outdir / filename

    def stage_text(self, filename: str, text: str) -> Path:
        final = self.target(filename)
        if final.exists() and not self.force:
            raise ModelValidationError(settings.ERROR_MESSAGES["exists"].format(path=final))
        if final in self._staged:
            os.unlink(self._staged.pop(final))
        fd, tmp = tempfile.mkstemp(dir=self.outdir, prefix=f".{filename}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        self._staged[final] = Path(tmp)
        logger.debug(f"Подготовлен файл {final}")
        return final

    def commit(self) -> list[Path]:
        written = []
        for final, tmp in self._staged.items():
            os.replace(tmp, final)
            written.append(final)
        self._staged.clear()
        logger.info(f"Записано файлов: {len(written)} в {self.outdir}")
        return written

    def rollback(self) -> None:
        for tmp in self._staged.values():
            if tmp.exists():
                tmp.unlink()
        self._staged.clear()


class OutputSessionManager:
    """
    Управляет каталогом результатов: все файлы пишутся во временные копии
    и переименовываются на место только при успешном завершении.
    """

    def __init__(self, outdir: str | Path, force: bool = False):
        self.outdir = Path(outdir)
        self.force = force

    @contextmanager
    def create_session(self) -> Generator[OutputSession, None, None]:
        self.outdir.mkdir(parents=True, exist_ok=True)
        session = OutputSession(self.outdir, self.force)
        try:
            yield session
        finally:
            session.rollback()

    @contextmanager
    def transaction(self, session: OutputSession) -> Generator[None, None, None]:
        """Фиксация при успехе, откат при ошибке."""
        try:
            yield
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"Ошибка записи результатов: {e}")
            raise

    def connection(self, commit: bool = True):
        """Декоратор: передаёт в функцию session= и фиксирует файлы после вызова."""

        def decorator(method):
            @wraps(method)
            def wrapper(*args, **kwargs):
                with self.create_session() as session:
                    if not commit:
                        return method(*args, session=session, **kwargs)
                    with self.transaction(session):
                        return method(*args, session=session, **kwargs)

            return wrapper

        return decorator
