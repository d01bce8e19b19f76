"""Error taxonomy shared across the package.

The CLI maps these onto exit codes: usage 2, validation 3,
construction 4, acceptance 5.
"""


class SlowVaryError(Exception):
    pass


class UsageError(SlowVaryError):
    pass


class ValidationError(SlowVaryError):
    pass


class ConstructionError(SlowVaryError):
    pass


class AcceptanceError(SlowVaryError):
    pass
