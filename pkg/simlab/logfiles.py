"""Module handling the simlab log files"""

import os
import sys
from datetime import datetime
import logging
from logging.handlers import TimedRotatingFileHandler


_LOGGER = logging.getLogger('simlab')

_DEFAULT_LOG_FILE = 'log/simlab'
_DEFAULT_LOG_FORMAT = '[%(asctime)s] [%(module)s] [%(levelname)s] %(message)s'
_DEFAULT_LOG_LEVEL = 'INFO'
_DEBUG_ENV_VAR = 'SIMLAB_DEBUG'


def debug_enabled() -> bool:
    """True when the debug environment variable is set."""
    return os.getenv(_DEBUG_ENV_VAR, 'False').lower() in ('true', '1', 't')


def start(log_file=_DEFAULT_LOG_FILE, console=True):
    """Create the application log."""
    log_format = _DEFAULT_LOG_FORMAT
    log_level = 'DEBUG' if debug_enabled() else _DEFAULT_LOG_LEVEL

    now = datetime.now()
    filename = os.path.expanduser(log_file + "_" + now.strftime("%Y-%m-%d") + ".log")

    # Create the directory if needed
    log_dir = os.path.dirname(filename)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
    filename = os.path.abspath(filename)

    # Repeated starts (tests, nested CLI calls) must not stack handlers
    for handler in list(_LOGGER.handlers):
        _LOGGER.removeHandler(handler)
        handler.close()

    # Change log files at midnight
    handler = TimedRotatingFileHandler(filename, when='midnight', interval=1, backupCount=10)
    handler.suffix = "%Y-%m-%d"
    handler.setLevel(log_level)
    handler.setFormatter(logging.Formatter(log_format))
    _LOGGER.addHandler(handler)

    if console:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(logging.Formatter(log_format))
        _LOGGER.addHandler(console_handler)
    _LOGGER.setLevel(log_level)

    _LOGGER.info("Created simlab log %s", filename)
    return filename
