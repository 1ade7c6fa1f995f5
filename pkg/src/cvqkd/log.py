"""
Handles logging setup and run timing.
"""

from __future__ import annotations

import collections.abc
import contextlib
import datetime
import logging
import os
import sys
import typing


LOGGER = logging.getLogger("cvqkd")

LOG_LEVEL_ENV_VAR = "CVQKD_LOG_LEVEL"

_HANDLER_NAME = "cvqkd-screen"


def setup_logging(log_level: int | None = None) -> None:

    if log_level is None:
        log_level = get_log_level()

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # the package is imported once per process, but the tests re-run this
    if any(handler.get_name() == _HANDLER_NAME for handler in root_logger.handlers):
        return

    fmt = "%(asctime)s :: %(levelname)s :: %(message)s"
    formatter = logging.Formatter(fmt=fmt)

    screen_handler = logging.StreamHandler()
    screen_handler.set_name(_HANDLER_NAME)
    screen_handler.setLevel(log_level)
    screen_handler.setFormatter(formatter)

    root_logger.addHandler(screen_handler)


def get_log_level() -> int:

    log_level_str = os.environ.get(LOG_LEVEL_ENV_VAR, "INFO").upper()

    log_level = getattr(logging, log_level_str, None)

    if not isinstance(log_level, int):
        print(f"Invalid log level in {LOG_LEVEL_ENV_VAR}: {log_level_str}")
        sys.exit(1)

    return typing.cast(int, log_level)


@contextlib.contextmanager
def log_elapsed(description: str) -> collections.abc.Iterator[None]:
    """
    Logs the start, end, and duration of a block of work.

    Parameters
    ----------
    description
        Short name of the work, used as the prefix of each message.
    """

    start_time = datetime.datetime.now()

    LOGGER.info(f"{description}: started at {start_time}")

    yield

    end_time = datetime.datetime.now()

    time_taken_s = (end_time - start_time).total_seconds()

    LOGGER.info(f"{description}: finished at {end_time} ({time_taken_s:.2f} s)")
