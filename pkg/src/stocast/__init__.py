"""STO-CAST: spatiotemporal outage forecasting for tropical cyclones."""

__version__ = "0.1.0"

from .errors import (
    ContractError,
    ForecastInputError,
    IngestionError,
    InputError,
    NumericError,
    StocastError,
)

__all__ = [
    "ContractError",
    "ForecastInputError",
    "IngestionError",
    "InputError",
    "NumericError",
    "StocastError",
    "__version__",
]
