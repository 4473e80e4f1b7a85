"""Exception types shared across the toolkit.

Argument/configuration problems raise plain ValueError; the two classes
below mark problems with input *files* and *data sets* so the CLI can map
them to its data-error exit code.
"""


class FormatError(Exception):
    """An input file is malformed or truncated (bad magic, short payload, ...)."""


class DataError(Exception):
    """Structurally valid inputs that violate a data contract (mismatched
    dimensions, zero ground-truth boxes, mismatched frame counts, ...)."""
