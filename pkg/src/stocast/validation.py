"""Small input-validation helpers used at public API boundaries."""

from __future__ import annotations

import numpy as np

from .errors import ContractError, InputError


def as_float_array(x, *, name: str, ndim: int | None = None, shape=None) -> np.ndarray:
    """Coerce to a C-contiguous float64 array and check its shape."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ContractError(f"{name}: expected {ndim} dimensions, got {arr.ndim}")
    if shape is not None:
        for want, got in zip(shape, arr.shape):
            if want is not None and want != got:
                raise ContractError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, *, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name}: contains non-finite values")
    return arr


def check_lat_lon(lat: float, lon: float, *, name: str = "point") -> None:
    if not (-90.0 <= lat <= 90.0):
        raise InputError(f"{name}: latitude {lat} outside [-90, 90]")
    if not (-180.0 <= lon <= 180.0):
        raise InputError(f"{name}: longitude {lon} outside [-180, 180]")


def check_consistent_length(*arrays, names: str = "arrays") -> int:
    lengths = {len(a) for a in arrays}
    if len(lengths) != 1:
        raise ContractError(f"{names}: inconsistent lengths {sorted(lengths)}")
    return lengths.pop()


def check_fitted(obj, attribute: str) -> None:
    if getattr(obj, attribute, None) is None:
        raise ContractError(
            f"{type(obj).__name__} is not fitted; call fit() before using it"
        )
