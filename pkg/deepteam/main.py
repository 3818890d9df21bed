import sys
from typing import Sequence

from loguru import logger

from deepteam.cli.parser import build_parser
from deepteam.config import settings
from deepteam.exceptions import DeepTeamError


def run(argv: Sequence[str] | None = None) -> int:
    """
    Точка входа CLI: разбирает аргументы, вызывает обработчик подкоманды
    и переводит ошибки пакета в код выхода и строку на stderr.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse завершает работу сам: --help или ошибка грамматики
        return int(e.code or 0)
    logger.remove()
    logger.add(sys.stderr, level=settings.LOG_LEVEL)
    try:
        code = args.func(args)
        logger.info(f"Команда {args.command} завершена")
        return code
    except DeepTeamError as e:
        logger.error(f"Команда {args.command} прервана: {e.message}")
        print(e.line(), file=sys.stderr)
        return e.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
