"""Shared exception types, mapped to CLI exit codes in :mod:`levelsvm.cli`."""


class DataError(Exception):
    """Malformed or inconsistent input data (CLI exit code 3)."""


class TrainingError(Exception):
    """Training cannot proceed, e.g. single-class input (CLI exit code 4)."""
