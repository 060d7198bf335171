"""Exception hierarchy shared across the package.

The grouping matters to the CLI: ``DataError`` maps to exit code 1 and
``TrainingError`` to exit code 2. I/O failures are plain ``OSError`` and
map to exit code 3.
"""


class HfmError(Exception):
    """Base class for every error raised by this package."""


class DataError(HfmError):
    """Invalid or inconsistent measurement data, file, or configuration."""


class TrainingError(HfmError):
    """Training could not produce a usable model."""
