"""Evaluation metrics and spatial aggregation on the count scale."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InputError
from .grid import Grid
from .losses import (
    DELTA_DEFAULT,
    THRESHOLD_T_DEFAULT,
    WEIGHT_W_DEFAULT,
    huber,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricReport:
    """MAE / MSE / WHL of one split, on counts."""

    split: str
    mae: float
    mse: float
    whl: float
    n_samples: int

    def as_dict(self) -> dict[str, float]:
        return {"MAE": self.mae, "MSE": self.mse, "WHL": self.whl}


def metrics(pred_counts, obs_counts, split: str = "",
            delta: float = DELTA_DEFAULT, weight_w: float = WEIGHT_W_DEFAULT,
            threshold_t: float = THRESHOLD_T_DEFAULT) -> MetricReport:
    """Element-wise mean MAE, MSE, and WHL between counts."""
    pred = np.asarray(pred_counts, dtype=np.float64)
    obs = np.asarray(obs_counts, dtype=np.float64)
    if pred.shape != obs.shape:
        raise ContractError(
            f"predictions {pred.shape} and observations {obs.shape} differ"
        )
    if pred.size == 0:
        raise ContractError("metrics need at least one element")
    err = pred - obs
    w = np.where(obs > threshold_t, weight_w, 1.0)
    return MetricReport(
        split=split,
        mae=float(np.abs(err).mean()),
        mse=float((err * err).mean()),
        whl=float((w * huber(obs, pred, delta)).mean()),
        n_samples=int(pred.shape[0]),
    )


def r_squared(pred, obs) -> float:
    """1 - SS_res/SS_tot about the observed mean; NaN on zero variance."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    obs = np.asarray(obs, dtype=np.float64).ravel()
    if pred.shape != obs.shape:
        raise ContractError(f"r_squared inputs differ: {pred.shape} vs {obs.shape}")
    if obs.size < 2:
        raise ContractError("r_squared needs at least 2 units")
    ss_tot = float(((obs - obs.mean()) ** 2).sum())
    if ss_tot == 0.0:
        logger.warning("r_squared undefined: observed values have zero variance")
        return float("nan")
    ss_res = float(((obs - pred) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def aggregate_regions(values, grid: Grid, level: str,
                      cells=None) -> dict[str, float]:
    """Sum per-cell values into administrative regions, ordered by id.

    When `cells` is given, only those cells are aggregated (and must all
    carry a region id); otherwise all cells with a region id contribute
    and cells without one must have zero value.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.n_cells,):
        raise ContractError(
            f"values must be one per cell ({grid.n_cells}), got {values.shape}"
        )
    ids = grid.region_ids(level)
    use = range(grid.n_cells) if cells is None else [int(c) for c in cells]
    missing = [c for c in use if ids[c] is None
               and (cells is not None or values[c] != 0.0)]
    if missing:
        raise InputError(
            f"cells without a {level} id cannot be aggregated: {missing[:10]}"
        )
    totals: dict[str, float] = {}
    for c in use:
        rid = ids[c]
        if rid is None:
            continue
        totals[rid] = totals.get(rid, 0.0) + float(values[c])
    return dict(sorted(totals.items()))


def affected_residents(accumulated_counts, grid: Grid) -> np.ndarray:
    """population x clamp(accumulated / C, 0, 1); cells with C = 0 give 0."""
    acc = np.asarray(accumulated_counts, dtype=np.float64)
    if acc.shape != (grid.n_cells,):
        raise ContractError(
            f"accumulated counts must be one per cell, got {acc.shape}"
        )
    c = grid.transformer_count.astype(np.float64)
    frac = np.zeros(grid.n_cells)
    np.divide(acc, c, out=frac, where=c > 0)
    frac = np.clip(frac, 0.0, 1.0)
    pop = np.where(np.isnan(grid.population), 0.0, grid.population)
    return pop * frac


def write_metric_csv(path, reports: list[MetricReport]) -> None:
    """Table-4-shaped CSV: one row per split."""
    with open(path, "w") as fh:
        fh.write("split,MAE,MSE,WHL,n_samples\n")
        for r in reports:
            fh.write(f"{r.split},{r.mae!r},{r.mse!r},{r.whl!r},{r.n_samples}\n")
