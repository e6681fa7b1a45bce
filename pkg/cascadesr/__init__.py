import time
from datetime import timedelta
import logging
import random
import numpy as np
import torch

logger = logging.getLogger()


class LogFormatter():
    """Prefix records with level, wall time and time elapsed since import.
    """
    def __init__(self):
        self.start_time = time.time()

    def format(self, record):
        elapsed_seconds = round(record.created - self.start_time)

        prefix = "%s - %s - %s" % (
            record.levelname,
            time.strftime('%x %X'),
            timedelta(seconds=elapsed_seconds)
        )
        message = record.getMessage()
        return "%s - %s" % (prefix, message) if message else ''


_LOGGER_FORMAT = False
if not _LOGGER_FORMAT:
    logging.basicConfig(level=logging.INFO)
    logger.handlers = []
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(LogFormatter())
    logger.addHandler(console_handler)
    _LOGGER_FORMAT = True


def add_log_file(file, level=logging.INFO):
    handler = logging.FileHandler(file)
    handler.setLevel(level)
    handler.setFormatter(LogFormatter())
    logger.addHandler(handler)
    return handler


def set_log_level(level):
    if isinstance(level, str):
        level = getattr(logging, level.upper())
    logger.setLevel(level)
    for h in logger.handlers:
        h.setLevel(level)


def set_random_state(seed):
    if seed is None:
        logger.info('No seed is set.')
        return
    assert isinstance(seed, int), f'seed should be an int, got {type(seed)}'
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
