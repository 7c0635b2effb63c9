"""CSV data files written by the command line tool."""

from collections.abc import Iterable, Sequence
import csv
import logging
import math
import os
from pathlib import Path
import tempfile

from .exceptions import ConfigurationError

_LOGGER = logging.getLogger(__name__)

MAYER_COLUMNS = ('beta', 'mayer_integral', 'error_estimate', 'truncation_radius')
REGIONS_COLUMNS = ('method', 'beta', 'z_bar', 'certified', 'error_estimate')
ZBAR_COLUMNS = ('a', 'mode', 'z_bar', 'saturated')
CHECK_A3_COLUMNS = ('a', 'psi_integral', 'mayer_integral', 'gap')
CHAIN_COLUMNS = ('step', 'count', 'intensity_center', 'min_pair_distance')
PROBE_COLUMNS = ('window', 'boundary', 'intensity', 'se', 'metric')


def format_value(value) -> str:
    """Render one CSV cell; floats round-trip through repr, infinities as +inf/-inf."""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        if math.isinf(value):
            return '+inf' if value > 0 else '-inf'
        return repr(value)
    return str(value)


def prepare_directory(directory: Path) -> Path:
    """Create the output directory and check it is writable."""
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(
            f"cannot create {directory}: {exc}", "output.directory"
        ) from exc
    if not os.access(directory, os.W_OK):
        raise ConfigurationError(f"{directory} is not writable", "output.directory")
    return directory


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write header and rows at once through a temporary file; return the row count."""
    records = []
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row {row} does not match columns {columns}")
        records.append([format_value(value) for value in row])

    handle, temporary = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix='.tmp'
    )
    try:
        with os.fdopen(handle, 'w', encoding='utf-8', newline='') as file:
            writer = csv.writer(file, lineterminator='\n')
            writer.writerow(columns)
            writer.writerows(records)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    _LOGGER.debug("Wrote %s rows to %s", len(records), path)
    return len(records)
