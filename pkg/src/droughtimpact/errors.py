"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit with 1,
I/O problems (plain OSError/FileNotFoundError) with 2, and numerical
failures with 3.
"""


class DroughtImpactError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DroughtImpactError):
    """Malformed input data, configuration, or violated preconditions."""


class FitError(DroughtImpactError):
    """A numerical procedure (distribution fit, training) could not proceed."""
