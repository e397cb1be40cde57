from periplan.common import error_log
from periplan.data.filenames import *


def read_version() -> str:
    """ Reads the package version from the bundled version file. """

    try:
        with open(VERSION_FILE, "r") as f:
            version = f.readline().strip()
    except OSError as e:
        error_log(f"Cannot read {VERSION_FILE}: {e}")
        return "unknown"
    return version or "unknown"
