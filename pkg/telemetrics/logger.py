import inspect
import logging
import os
from datetime import datetime
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler

from static_memory_cache import StaticMemoryCache
from telemetrics.request_manager import RequestIdManager


class _ContextFilter(logging.Filter):
    """Attach run id and tag to every record."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = getattr(record, "run_id", None) or RequestIdManager.get()
        record.tag = getattr(record, "tag", None)
        return True


class RichLogger:
    """Rich console logger writing to stderr, so stdout stays reserved for reports."""

    def __init__(self, name: str, level: int = logging.INFO, file_logging: bool = False):
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        self.logger.handlers.clear()
        self.logger.propagate = False
        self.logger.addFilter(_ContextFilter())

        self.console = Console(stderr=True)
        rich_handler = RichHandler(
            console=self.console,
            show_time=True,
            show_level=True,
            show_path=False,
            markup=False,
            rich_tracebacks=True,
        )
        rich_handler.setLevel(level)
        rich_handler.setFormatter(self._ConsoleFormatter())
        self.logger.addHandler(rich_handler)

        if file_logging:
            self._setup_file_handler(level)

    def _setup_file_handler(self, level: int):
        log_dir = Path(StaticMemoryCache.get_config("logging", "log_dir", "logs"))
        log_dir.mkdir(exist_ok=True)
        log_file = log_dir / f"{self.name}_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(
            logging.Formatter(
                fmt="%(asctime)s [%(levelname)s] %(caller)s [RID:%(run_id)s] %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        )
        self.logger.addHandler(file_handler)

    class _ConsoleFormatter(logging.Formatter):
        def format(self, record):
            parts = [f"[{record.caller}]"]
            if record.run_id:
                parts.append(f"[RID:{record.run_id}]")
            if record.tag:
                parts.append(f"[{record.tag}]")
            parts.append(record.getMessage())
            return " ".join(parts)

    def _log(self, level: int, message: str, tag: str | None):
        if self.logger.isEnabledFor(level):
            self.logger.log(level, message, extra={"tag": tag, "caller": self._caller_of_log()})

    def _caller_of_log(self, depth: int = 3) -> str:
        frame = inspect.currentframe()
        for _ in range(depth):
            frame = frame.f_back
        module = inspect.getmodule(frame)
        module_name = module.__name__ if module else "unknown"
        return f"{module_name}:{frame.f_code.co_name}:{frame.f_lineno}"

    def info(self, message: str, tag: str | None = None):
        self._log(logging.INFO, message, tag)

    def debug(self, message: str, tag: str | None = None):
        self._log(logging.DEBUG, message, tag)

    def warning(self, message: str, tag: str | None = None):
        self._log(logging.WARNING, message, tag)

    def error(self, message: str, tag: str | None = None):
        self._log(logging.ERROR, message, tag)

    def exception(self, message: str, tag: str | None = None):
        self.logger.exception(message, extra={"tag": tag, "caller": self._caller_of_log(2)})


def _configured_level() -> int:
    name = os.getenv("OPERADIA_LOG_LEVEL") or StaticMemoryCache.get_config("logging", "level", "INFO")
    return logging.getLevelNamesMapping().get(str(name).upper(), logging.INFO)


logger = RichLogger(
    name=StaticMemoryCache.get_config("logging", "name", "operadia"),
    level=_configured_level(),
    file_logging=bool(StaticMemoryCache.get_config("logging", "file_logging", False)),
)
