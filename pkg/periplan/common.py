import logging
import math
import sys
from datetime import datetime

LOGGER = logging.getLogger("periplan")

EPSILON = 1e-9


class PlanningException(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class TopologyError(PlanningException):
    pass


class SpectrumError(PlanningException):
    pass


class PhysicsError(PlanningException):
    pass


class RoutingError(PlanningException):
    pass


class ConfigurationError(PlanningException):
    pass


class UnknownCommand(PlanningException):
    pass


def configure_logging(verbosity: int = 0):
    """ Attaches a stderr handler to the periplan logger; 0 = warnings only, 1 = info, 2+ = debug. """

    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    if not LOGGER.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        LOGGER.addHandler(handler)
    LOGGER.setLevel(level)


def log(text, *args):
    LOGGER.info(" ".join(str(x) for x in (f"[{datetime.now().isoformat()}] {text}", *args)))


def debug_log(text, *args):
    LOGGER.debug(" ".join(str(x) for x in (text, *args)))


def error_log(text, *args):
    LOGGER.error(" ".join(str(x) for x in (f"[{datetime.now().isoformat()}] ERROR: {text}", *args)),
                 exc_info=sys.exc_info()[0] is not None)


def clean_text(text):
    return (text or '').replace('\t', '').replace('\n', '').replace('\u200e', '').strip()


def extract_err_msg(e: Exception):
    try:
        if hasattr(e, "message"):
            return e.message
        return " " + str(e.args[0] if str(e.args).startswith('(') else e.args)
    except Exception as _:
        return str(e.args)


def db2lin(value):
    return 10 ** (value / 10)


def lin2db(value):
    return 10 * math.log10(value)


def parse_int_list(text: str):
    """ Parses a comma-separated list of integers, e.g. the --seeds flag. """

    values = []
    for part in clean_text(text).split(","):
        if not part.strip():
            continue
        try:
            values.append(int(part.strip()))
        except ValueError:
            raise UnknownCommand(f"Invalid integer {part.strip()!r} in list {text!r}")
    return values
