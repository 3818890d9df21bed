import csv
import io
from pathlib import Path
from typing import Any, Generic, Iterable, TypeVar

from loguru import logger
from pydantic import BaseModel

from deepteam.config import settings
from deepteam.dao.session_maker import OutputSession

T = TypeVar("T", bound=BaseModel)


def format_value(value: Any) -> str:
    """Числа с плавающей точкой - 17 значащих цифр, остальное как есть."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, f".{settings.CSV_DIGITS}g")
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


class BaseCsvDAO(Generic[T]):
    model: type[T]
    filename: str

    @classmethod
    def header(cls) -> list[str]:
        return list(cls.model.model_fields)

    @classmethod
    def render(cls, rows: Iterable[T | tuple], comment: str | None = None) -> str:
        buffer = io.StringIO()
        if comment:
            buffer.write(f"# {comment}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        header = cls.header()
        writer.writerow(header)
        for row in rows:
            values = [getattr(row, name) for name in header] if isinstance(row, BaseModel) else row
            writer.writerow([format_value(v) for v in values])
        return buffer.getvalue()

    @classmethod
    def write_rows(cls, session: OutputSession, rows: Iterable[T | tuple],
                   filename: str | None = None, comment: str | None = None) -> Path:
        # строки - либо схемы, либо кортежи в порядке заголовка
        name = filename or cls.filename
        logger.info(f"Запись {cls.model.__name__} в {name}")
        try:
            return session.stage_text(name, cls.render(rows, comment))
        except OSError as e:
            logger.error(f"Ошибка при записи {name}: {e}")
            raise

    @classmethod
    def read_rows(cls, path: str | Path) -> list[T]:
        logger.info(f"Чтение {cls.model.__name__} из {path}")
        with open(path, encoding="utf-8", newline="") as handle:
            lines = [line for line in handle if not line.startswith("#")]
        records = [cls.model.model_validate(row) for row in csv.DictReader(lines)]
        logger.info(f"Прочитано {len(records)} записей.")
        return records
