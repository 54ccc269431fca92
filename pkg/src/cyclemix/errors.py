"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit with 2,
capacity problems with 3.
"""


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class CapacityError(RuntimeError):
    """A computation would exceed a documented size cap."""
