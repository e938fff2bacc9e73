import logging
import os
from typing import Dict, Optional
from pathlib import Path
from rich.logging import RichHandler
from rich.console import Console

import psutil

LOGGER_NAME = "effectbench"


def _console_level(verbose: int) -> int:
    # 0: WARNING, -v: INFO, -vv and beyond: DEBUG
    if verbose <= 0:
        return logging.WARNING
    if verbose == 1:
        return logging.INFO
    return logging.DEBUG


def setup_logging(cfg: Optional[Dict] = None, verbose: int = 0, console: Optional[Console] = None) -> logging.Logger:
    cfg = cfg or {}
    level_name = str(cfg.get("level", "INFO")).upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ValueError(f"Unknown log level '{level_name}'")

    if console is None:
        console = Console(stderr=True)

    rich_handler = RichHandler(
        console=console,
        level=_console_level(verbose),
        show_time=True,
        show_path=False,
        markup=False,
        rich_tracebacks=True,
    )
    handlers = [rich_handler]

    log_file = cfg.get("file")
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(path, encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s %(message)s"))
        handlers.append(file_handler)

    logging.basicConfig(
        level=logging.NOTSET,
        format="%(message)s",
        handlers=handlers,
        force=True,
    )
    # matplotlib's font manager is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    return logging.getLogger(LOGGER_NAME)


def log_memory_usage(logger: logging.Logger, context: str = ""):
    try:
        process = psutil.Process(os.getpid())
        mem_info = process.memory_info()
        logger.info(
            f"Memory Usage [{context}]: RSS={mem_info.rss / 1024 / 1024:.1f} MB, "
            f"VMS={mem_info.vms / 1024 / 1024:.1f} MB"
        )
    except Exception as e:
        logger.warning(f"Failed to log memory usage: {e}")


__all__ = ["setup_logging", "log_memory_usage", "LOGGER_NAME"]
