"""Exception types shared across the package.

Contract violations (bad parameter values, infeasible settings) raise plain
``ValueError``; problems with input *data* (malformed files, inconsistent
records) raise ``DataError`` so the CLI can map them to distinct exit codes.
"""


class DataError(Exception):
    """Raised when an input file or record is malformed or inconsistent."""
