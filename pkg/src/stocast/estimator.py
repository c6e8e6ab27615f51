"""Estimator facade with a scikit-learn-style fit/predict surface.

`StoCastRegressor` wraps dataset standardization, training, and prediction
behind the conventional estimator API: hyperparameters are constructor
arguments mirrored by get_params/set_params, `fit` learns from a flat
feature matrix, and fitted state lives in trailing-underscore attributes.
The flat layout is the WindowSet matrix form: 48 dynamic values hour-major
(W, R, D, O_ratio per hour) followed by the 6 statics (E, S, A, G, I, C),
so column 53 carries the transformer count used for the count scale.
"""

from __future__ import annotations

import inspect

import numpy as np

from .dataset import (
    N_INPUT_FEATURES,
    TRAIN_FRACTION,
    WindowSet,
    apply_standardization,
    fit_standardization,
    round_half_up,
)
from .errors import ContractError, InputError
from .evaluation import r_squared
from .nn import Architecture, StoCastModel
from .rng import SplitMix64, derive_seed
from .training import TrainConfig, predict_ratios, train_loop

__all__ = [
    "StoCastRegressor",
    "check_feature_matrix",
    "check_ratio_labels",
]


def check_feature_matrix(X) -> np.ndarray:
    """Validate and coerce a [n, 54] finite float feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_INPUT_FEATURES:
        raise InputError(
            f"X must be a 2-d matrix with {N_INPUT_FEATURES} columns, "
            f"got shape {X.shape}"
        )
    if X.shape[0] == 0:
        raise InputError("X must contain at least one sample")
    if not np.isfinite(X).all():
        bad = int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])
        raise InputError(f"X contains non-finite values (first bad row {bad})")
    return X


def check_ratio_labels(y, n_samples: int) -> np.ndarray:
    """Validate a [n, 6] outage-ratio label matrix in [0, 1]."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape != (n_samples, 6):
        raise InputError(f"y must have shape ({n_samples}, 6), got {y.shape}")
    if not np.isfinite(y).all():
        raise InputError("y contains non-finite values")
    if (y < 0).any() or (y > 1).any():
        raise InputError("y values must be outage ratios in [0, 1]")
    return y


class StoCastRegressor:
    """Sequence model regressor over flattened 12-hour windows.

    Parameters mirror TrainConfig plus the architecture; all are plain
    constructor arguments so get_params/set_params round-trip them.
    """

    def __init__(self, arch: Architecture | None = None, lr0: float = 5e-4,
                 batch_size: int = 256, max_epochs: int = 1000,
                 early_stop_patience: int = 99, plateau_patience: int = 9,
                 lr_factor: float = 0.99, delta: float = 10.0,
                 weight_w: float = 1000.0, threshold_t: float = 5.0,
                 validation_fraction: float = 1.0 - TRAIN_FRACTION,
                 seed: int = 0):
        self.arch = arch
        self.lr0 = lr0
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.early_stop_patience = early_stop_patience
        self.plateau_patience = plateau_patience
        self.lr_factor = lr_factor
        self.delta = delta
        self.weight_w = weight_w
        self.threshold_t = threshold_t
        self.validation_fraction = validation_fraction
        self.seed = seed

    # -- sklearn parameter plumbing --------------------------------------

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "StoCastRegressor":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise InputError(
                    f"invalid parameter {name!r} for StoCastRegressor; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            delta=self.delta, weight_w=self.weight_w,
            threshold_t=self.threshold_t, lr0=self.lr0,
            batch_size=self.batch_size,
            plateau_patience=self.plateau_patience,
            lr_factor=self.lr_factor,
            early_stop_patience=self.early_stop_patience,
            max_epochs=self.max_epochs, seed=self.seed,
        )

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise InputError(
                "this StoCastRegressor instance is not fitted yet; "
                "call fit before predict/score"
            )

    # -- estimator API ----------------------------------------------------

    def fit(self, X, y, sample_counts=None) -> "StoCastRegressor":
        """Fit on raw (unstandardized) windows.

        X: [n, 54] matrix; y: [n, 6] outage ratios.  Counts for the loss
        come from `sample_counts` or, by default, column 53 of X (the C
        static).  An internal validation split drives early stopping.
        """
        X = check_feature_matrix(X)
        y = check_ratio_labels(y, X.shape[0])
        if sample_counts is None:
            counts = X[:, N_INPUT_FEATURES - 1]
        else:
            counts = np.asarray(sample_counts, dtype=np.float64)
            if counts.shape != (X.shape[0],):
                raise InputError(
                    f"sample_counts must have shape ({X.shape[0]},), "
                    f"got {counts.shape}"
                )
        if (counts < 0).any():
            raise InputError("transformer counts must be >= 0")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InputError(
                f"validation_fraction must be in (0, 1), "
                f"got {self.validation_fraction}"
            )

        ws = WindowSet.from_matrix(X, counts, labels=y)
        n = len(ws)
        n_val = max(1, round_half_up(n * self.validation_fraction))
        if n_val >= n:
            raise InputError(
                f"validation split leaves no training data (n={n})"
            )
        order = SplitMix64(derive_seed(self.seed, "estimator_split")
                           ).permutation(n)
        val_idx = order[:n_val]
        train_idx = order[n_val:]
        train_raw = ws.subset(train_idx)
        val_raw = ws.subset(val_idx)

        self.stats_ = fit_standardization(train_raw)
        train = apply_standardization(self.stats_, train_raw)
        val = apply_standardization(self.stats_, val_raw)

        config = self._train_config()
        arch = self.arch if self.arch is not None else Architecture()
        self.model_, self.history_ = train_loop(config, train, val, arch=arch)
        self.n_features_in_ = N_INPUT_FEATURES
        return self

    def predict(self, X) -> np.ndarray:
        """Predicted outage ratios [n, 6] for raw windows."""
        self._check_fitted()
        X = check_feature_matrix(X)
        ws = apply_standardization(
            self.stats_,
            WindowSet.from_matrix(X, X[:, N_INPUT_FEATURES - 1]),
        )
        return predict_ratios(self.model_, ws.dynamic, ws.static)

    def predict_counts(self, X, sample_counts=None) -> np.ndarray:
        """Predicted outage counts [n, 6]: ratios scaled by C."""
        X = check_feature_matrix(X)
        if sample_counts is None:
            counts = X[:, N_INPUT_FEATURES - 1]
        else:
            counts = np.asarray(sample_counts, dtype=np.float64)
        return self.predict(X) * counts[:, None]

    def score(self, X, y, sample_counts=None) -> float:
        """R^2 of 6-hour summed predicted counts against observed counts."""
        X = check_feature_matrix(X)
        y = check_ratio_labels(y, X.shape[0])
        counts = (X[:, N_INPUT_FEATURES - 1] if sample_counts is None
                  else np.asarray(sample_counts, dtype=np.float64))
        pred = self.predict(X) * counts[:, None]
        obs = y * counts[:, None]
        return r_squared(pred.sum(axis=1), obs.sum(axis=1))

    def __repr__(self) -> str:
        params = ", ".join(
            f"{k}={v!r}" for k, v in self.get_params().items()
            if k != "arch"
        )
        return f"StoCastRegressor({params})"
