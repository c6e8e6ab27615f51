"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: InputError -> 2, NumericError -> 3,
ContractError -> 4.
"""


class StocastError(Exception):
    """Base class for all package errors."""


class InputError(StocastError):
    """Bad user-supplied data, file, or configuration."""


class IngestionError(InputError):
    """Event data files are missing, malformed, or inconsistent."""


class ForecastInputError(InputError):
    """A rolling forecast lacks required weather or outage coverage."""


class NumericError(StocastError):
    """A numeric invariant failed at runtime (non-finite loss, overflow)."""


class ContractError(StocastError):
    """An internal call contract was violated; indicates a programming bug."""
