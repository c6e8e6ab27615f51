"""Windowed LOSO datasets: panels to standardized training samples.

Each sample is a 12-hour window sliding by 3 hours over one cell of one
event. Its dynamic block is [12 x 4] ordered (W, R, D, O_ratio) with the
future half (hours 6..11) of the outage channel zeroed; its static block
is the cell's [6] features (E, S, A, G, I, C); its label is the outage
ratio for hours 6..11. Partitioning is leave-one-storm-out over events
crossed with a seeded 80/20 spatial split of active cells, plus a seeded
80/20 train/validation split of the pooled training-event windows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import Grid
from .ingest import CH_O, EventPanel
from .rng import SplitMix64, derive_seed

WINDOW_HOURS = 12
STRIDE_HOURS = 3
PAST_HOURS = 6
HORIZON_HOURS = 6
N_DYNAMIC_CHANNELS = 4
N_STATIC_FEATURES = 6
TRAIN_FRACTION = 0.8

# flattened sample layout: 12 hours x 4 channels hour-major, then 6 statics
N_INPUT_FEATURES = WINDOW_HOURS * N_DYNAMIC_CHANNELS + N_STATIC_FEATURES


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def window_count(n_hours: int) -> int:
    """Number of 12-hour windows at 3-hour stride in an n_hours panel."""
    if n_hours < WINDOW_HOURS:
        return 0
    return (n_hours - WINDOW_HOURS) // STRIDE_HOURS + 1


@dataclass(frozen=True)
class WindowSample:
    """One 12-hour window of one cell with its label."""

    event_id: str
    cell_id: int
    t0: int
    dynamic_in: np.ndarray  # [12, 4] (W, R, D, O_ratio), O zeroed for h 6..11
    static_in: np.ndarray   # [6] (E, S, A, G, I, C)
    label: np.ndarray       # [6] outage ratios for hours 6..11


class WindowSet:
    """A batch of window samples stored as dense arrays."""

    def __init__(self, event_ids, cell_ids, t0s, dynamic, static, labels, counts):
        self.event_ids = np.asarray(event_ids, dtype=object)
        self.cell_ids = np.asarray(cell_ids, dtype=np.int64)
        self.t0s = np.asarray(t0s, dtype=np.int64)
        self.dynamic = np.asarray(dynamic, dtype=np.float64)
        self.static = np.asarray(static, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.float64)
        n = len(self.event_ids)
        if not (len(self.cell_ids) == len(self.t0s) == self.dynamic.shape[0]
                == self.static.shape[0] == self.labels.shape[0] == len(self.counts) == n):
            raise InputError("window set arrays disagree in length")

    def __len__(self) -> int:
        return len(self.event_ids)

    def subset(self, idx) -> "WindowSet":
        return WindowSet(self.event_ids[idx], self.cell_ids[idx], self.t0s[idx],
                         self.dynamic[idx], self.static[idx], self.labels[idx],
                         self.counts[idx])

    @classmethod
    def empty(cls) -> "WindowSet":
        return cls(np.empty(0, dtype=object), [], [],
                   np.empty((0, WINDOW_HOURS, N_DYNAMIC_CHANNELS)),
                   np.empty((0, N_STATIC_FEATURES)),
                   np.empty((0, HORIZON_HOURS)), [])

    @classmethod
    def concat(cls, sets: list["WindowSet"]) -> "WindowSet":
        if not sets:
            return cls.empty()
        return cls(
            np.concatenate([s.event_ids for s in sets]),
            np.concatenate([s.cell_ids for s in sets]),
            np.concatenate([s.t0s for s in sets]),
            np.concatenate([s.dynamic for s in sets]),
            np.concatenate([s.static for s in sets]),
            np.concatenate([s.labels for s in sets]),
            np.concatenate([s.counts for s in sets]),
        )

    def keys(self) -> set[tuple[str, int, int]]:
        return {(str(e), int(c), int(t))
                for e, c, t in zip(self.event_ids, self.cell_ids, self.t0s)}

    def samples(self) -> list[WindowSample]:
        return [
            WindowSample(str(self.event_ids[i]), int(self.cell_ids[i]),
                         int(self.t0s[i]), self.dynamic[i], self.static[i],
                         self.labels[i])
            for i in range(len(self))
        ]

    def to_matrix(self) -> np.ndarray:
        """Flatten to [n, 54]: 48 dynamic values hour-major, then 6 statics."""
        n = len(self)
        return np.concatenate(
            [self.dynamic.reshape(n, WINDOW_HOURS * N_DYNAMIC_CHANNELS), self.static],
            axis=1,
        )

    @classmethod
    def from_matrix(cls, X, counts, event_ids=None, cell_ids=None, t0s=None,
                    labels=None) -> "WindowSet":
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        if X.ndim != 2 or X.shape[1] != N_INPUT_FEATURES:
            raise InputError(f"sample matrix must be [n, {N_INPUT_FEATURES}], "
                             f"got {X.shape}")
        return cls(
            event_ids if event_ids is not None else np.array(["?"] * n, dtype=object),
            cell_ids if cell_ids is not None else np.zeros(n, dtype=np.int64),
            t0s if t0s is not None else np.zeros(n, dtype=np.int64),
            X[:, : WINDOW_HOURS * N_DYNAMIC_CHANNELS].reshape(
                n, WINDOW_HOURS, N_DYNAMIC_CHANNELS),
            X[:, WINDOW_HOURS * N_DYNAMIC_CHANNELS:],
            labels if labels is not None else np.zeros((n, HORIZON_HOURS)),
            counts,
        )


# ---------------------------------------------------------------------------
# Window extraction
# ---------------------------------------------------------------------------

def _windows_for_cells(panel: EventPanel, grid: Grid, cells: np.ndarray) -> WindowSet:
    """Vectorized sliding windows for the given cells, ordered (cell, t0)."""
    k = window_count(panel.n_hours)
    if k == 0:
        raise InputError(
            f"event {panel.event_id}: panel of {panel.n_hours} h is shorter "
            f"than one {WINDOW_HOURS} h window"
        )
    cells = np.asarray(sorted(int(c) for c in cells), dtype=np.int64)
    counts = grid.transformer_count[cells].astype(np.float64)

    raw = panel.channels[cells].astype(np.float64)  # [n_c, n_h, 4]
    zero_c = counts == 0.0
    if zero_c.any() and raw[zero_c][:, :, CH_O].any():
        bad = cells[zero_c & (raw[:, :, CH_O].sum(axis=1) > 0)]
        raise InputError(
            f"event {panel.event_id}: cell(s) {bad.tolist()} report outages "
            f"but have no transformers"
        )
    ratio = np.zeros_like(raw[:, :, CH_O])
    np.divide(raw[:, :, CH_O], counts[:, None], out=ratio, where=~zero_c[:, None])

    t0s = STRIDE_HOURS * np.arange(k)
    span = t0s[:, None] + np.arange(WINDOW_HOURS)  # [k, 12]

    dyn = raw[:, span, :]                           # [n_c, k, 12, 4]
    dyn[:, :, :, CH_O] = ratio[:, span]
    labels = dyn[:, :, PAST_HOURS:, CH_O].copy()    # [n_c, k, 6]
    dyn[:, :, PAST_HOURS:, CH_O] = 0.0

    n = len(cells) * k
    return WindowSet(
        event_ids=np.array([panel.event_id] * n, dtype=object),
        cell_ids=np.repeat(cells, k),
        t0s=np.tile(t0s, len(cells)),
        dynamic=dyn.reshape(n, WINDOW_HOURS, N_DYNAMIC_CHANNELS),
        static=np.repeat(grid.static_features()[cells], k, axis=0),
        labels=labels.reshape(n, HORIZON_HOURS),
        counts=np.repeat(counts, k),
    )


def slide_windows(panel: EventPanel, grid: Grid, cell_id: int) -> list[WindowSample]:
    """All 12-hour windows of one cell as WindowSample objects."""
    return _windows_for_cells(panel, grid, np.array([cell_id])).samples()


def event_windows(panel: EventPanel, grid: Grid,
                  cells: np.ndarray | None = None) -> WindowSet:
    """All windows of one event, over the given (default: active) cells."""
    if cells is None:
        cells = active_cells(grid, [panel])
    return _windows_for_cells(panel, grid, np.asarray(cells, dtype=np.int64))


# ---------------------------------------------------------------------------
# Partitioning
# ---------------------------------------------------------------------------

def active_cells(grid: Grid, panels: list[EventPanel]) -> np.ndarray:
    """Cells with transformers or any observed outage across the events."""
    active = grid.transformer_count > 0
    for panel in panels:
        if panel.n_cells != grid.n_cells:
            raise InputError(
                f"event {panel.event_id}: panel has {panel.n_cells} cells, "
                f"grid has {grid.n_cells}"
            )
        active |= panel.O().sum(axis=1) > 0
    return np.flatnonzero(active)


def split_spatial(cells, train_fraction: float = TRAIN_FRACTION,
                  seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of active cells into train/test, round-half-up size."""
    cells = np.asarray(sorted(int(c) for c in cells), dtype=np.int64)
    if len(cells) < 2:
        raise InputError(f"spatial split needs >= 2 active cells, got {len(cells)}")
    order = list(range(len(cells)))
    SplitMix64(derive_seed(seed, "spatial_split")).shuffle(order)
    n_train = round_half_up(train_fraction * len(cells))
    n_train = min(max(n_train, 1), len(cells) - 1)
    picked = cells[np.asarray(order)]
    return np.sort(picked[:n_train]), np.sort(picked[n_train:])


@dataclass(frozen=True)
class LosoExperiment:
    """One leave-one-storm-out fold: the holdout event plus cell partition."""

    holdout_event_id: str
    training_event_ids: tuple[str, ...]
    train_cell_ids: np.ndarray
    test_cell_ids: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "training_event_ids", tuple(self.training_event_ids))
        object.__setattr__(self, "train_cell_ids",
                           np.asarray(self.train_cell_ids, dtype=np.int64))
        object.__setattr__(self, "test_cell_ids",
                           np.asarray(self.test_cell_ids, dtype=np.int64))
        if self.holdout_event_id in self.training_event_ids:
            raise InputError(
                f"holdout event {self.holdout_event_id!r} also in training events"
            )
        if not self.training_event_ids:
            raise InputError("LOSO fold needs at least one training event")
        overlap = set(self.train_cell_ids.tolist()) & set(self.test_cell_ids.tolist())
        if overlap:
            raise InputError(f"train and test cells overlap: {sorted(overlap)[:5]} ...")


def build_loso_dataset(experiment: LosoExperiment,
                       panels: dict[str, EventPanel],
                       grid: Grid) -> tuple[WindowSet, WindowSet, WindowSet]:
    """(train, val, test-grid) window sets for one LOSO fold.

    Training-event windows on train cells are pooled in (event, cell, t0)
    order, shuffled with the fold seed, and split 80/20 into train and
    validation; training-event windows on test cells form the test-grid
    set. The holdout event's windows come from holdout_windows().
    """
    for eid in experiment.training_event_ids + (experiment.holdout_event_id,):
        if eid not in panels:
            raise InputError(f"missing panel for event {eid!r}")
    if len(experiment.train_cell_ids) == 0:
        raise InputError("empty train cell set")
    if len(experiment.test_cell_ids) == 0:
        raise InputError("empty test cell set")

    pooled = WindowSet.concat([
        _windows_for_cells(panels[eid], grid, experiment.train_cell_ids)
        for eid in sorted(experiment.training_event_ids)
    ])
    test_grid = WindowSet.concat([
        _windows_for_cells(panels[eid], grid, experiment.test_cell_ids)
        for eid in sorted(experiment.training_event_ids)
    ])

    order = list(range(len(pooled)))
    SplitMix64(derive_seed(experiment.seed, "sample_split",
                           experiment.holdout_event_id)).shuffle(order)
    n_train = round_half_up(TRAIN_FRACTION * len(pooled))
    n_train = min(max(n_train, 1), len(pooled) - 1)
    idx = np.asarray(order)
    train = pooled.subset(idx[:n_train])
    val = pooled.subset(idx[n_train:])
    if len(train) == 0 or len(val) == 0 or len(test_grid) == 0:
        raise InputError("a LOSO split came out empty; check panels and cells")
    return train, val, test_grid


def holdout_windows(experiment: LosoExperiment,
                    panels: dict[str, EventPanel],
                    grid: Grid) -> WindowSet:
    """Test-event set: all active (train + test) cells of the holdout event."""
    cells = np.concatenate([experiment.train_cell_ids, experiment.test_cell_ids])
    return _windows_for_cells(panels[experiment.holdout_event_id], grid, cells)


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------

@dataclass
class StandardizationStats:
    """Training-set Z-score parameters for W, R, D and the 6 statics."""

    dyn_mean: np.ndarray  # [3] for channels (W, R, D)
    dyn_std: np.ndarray   # [3]
    static_mean: np.ndarray  # [6]
    static_std: np.ndarray   # [6]

    def to_dict(self) -> dict:
        return {
            "dyn_mean": self.dyn_mean.tolist(),
            "dyn_std": self.dyn_std.tolist(),
            "static_mean": self.static_mean.tolist(),
            "static_std": self.static_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        return cls(
            dyn_mean=np.asarray(d["dyn_mean"], dtype=np.float64),
            dyn_std=np.asarray(d["dyn_std"], dtype=np.float64),
            static_mean=np.asarray(d["static_mean"], dtype=np.float64),
            static_std=np.asarray(d["static_std"], dtype=np.float64),
        )


def _population_std(values: np.ndarray, axis) -> np.ndarray:
    std = values.std(axis=axis)  # population (ddof=0)
    return np.where(std > 0.0, std, 1.0)


def fit_standardization(train: WindowSet) -> StandardizationStats:
    """Z-score parameters from training windows; constant features get std 1."""
    if len(train) == 0:
        raise InputError("cannot fit standardization on an empty training set")
    dyn = train.dynamic[:, :, :3].reshape(-1, 3)
    return StandardizationStats(
        dyn_mean=dyn.mean(axis=0),
        dyn_std=_population_std(dyn, axis=0),
        static_mean=train.static.mean(axis=0),
        static_std=_population_std(train.static, axis=0),
    )


def apply_standardization(stats: StandardizationStats, ws: WindowSet) -> WindowSet:
    """Standardize W, R, D and statics; O_ratio and labels stay untouched."""
    dyn = ws.dynamic.copy()
    dyn[:, :, :3] = (dyn[:, :, :3] - stats.dyn_mean) / stats.dyn_std
    static = (ws.static - stats.static_mean) / stats.static_std
    return WindowSet(ws.event_ids, ws.cell_ids, ws.t0s, dyn, static,
                     ws.labels.copy(), ws.counts.copy())


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def dataset_manifest(experiment: LosoExperiment, stats: StandardizationStats,
                     counts: dict[str, int]) -> dict:
    return {
        "holdout_event_id": experiment.holdout_event_id,
        "training_event_ids": list(experiment.training_event_ids),
        "seed": experiment.seed,
        "train_cell_ids": experiment.train_cell_ids.tolist(),
        "test_cell_ids": experiment.test_cell_ids.tolist(),
        "standardization": stats.to_dict(),
        "counts": dict(counts),
    }


def write_dataset_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
