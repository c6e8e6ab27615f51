"""Training: Adam, plateau scheduling, early stopping, the LOSO harness.

One epoch is a seeded reshuffle of the training windows, mini-batches of
256 (the last batch may be short), one Adam step per batch, then a full
pass over the validation set. The learning rate drops by 1% after 9
consecutive epochs without a strictly better validation loss; training
stops after 99 consecutive epochs without a new best. The scheduler and
the early-stopping counters run independently but share the best-so-far
value, and the checkpoint returned is the one with the lowest validation
loss.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import (
    LosoExperiment,
    WindowSet,
    active_cells,
    apply_standardization,
    build_loso_dataset,
    fit_standardization,
    holdout_windows,
    split_spatial,
)
from .errors import InputError, NumericError
from .grid import Grid
from .losses import (
    DELTA_DEFAULT,
    THRESHOLD_T_DEFAULT,
    WEIGHT_W_DEFAULT,
    batch_loss,
)
from .nn import Architecture, StoCastModel, model_backward, model_forward
from .rng import SplitMix64, derive_seed

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    """Hyperparameters; defaults follow the training protocol."""

    delta: float = DELTA_DEFAULT
    weight_w: float = WEIGHT_W_DEFAULT
    threshold_t: float = THRESHOLD_T_DEFAULT
    lr0: float = 5e-4
    batch_size: int = 256
    plateau_patience: int = 9
    lr_factor: float = 0.99
    early_stop_patience: int = 99
    max_epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.delta <= 0:
            raise InputError(f"delta must be > 0, got {self.delta}")
        if self.weight_w < 1:
            raise InputError(f"weight_w must be >= 1, got {self.weight_w}")
        if self.batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 < self.lr_factor < 1.0):
            raise InputError(f"lr_factor must be in (0, 1), got {self.lr_factor}")

    def to_dict(self) -> dict:
        return {
            "delta": self.delta, "weight_w": self.weight_w,
            "threshold_t": self.threshold_t, "lr0": self.lr0,
            "batch_size": self.batch_size,
            "plateau_patience": self.plateau_patience,
            "lr_factor": self.lr_factor,
            "early_stop_patience": self.early_stop_patience,
            "max_epochs": self.max_epochs, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class TrainHistory:
    """Per-epoch record of one training run."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    best_epoch: int = -1
    wall_time_s: float = 0.0

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,train_loss,val_loss,lr,best_val,is_best\n")
            best = float("inf")
            for i in range(len(self.train_loss)):
                best = min(best, self.val_loss[i])
                fh.write(f"{i},{self.train_loss[i]!r},{self.val_loss[i]!r},"
                         f"{self.lr[i]!r},{best!r},{int(i == self.best_epoch)}\n")


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

class AdamState:
    """First/second moment estimates plus the shared step counter."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float,
              beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
              eps: float = ADAM_EPS, context: str = "") -> None:
    """One in-place Adam update with bias correction."""
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericError(
                f"non-finite gradient for parameter {name!r}"
                + (f" ({context})" if context else "")
            )
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# Plateau scheduler / early stopping
# ---------------------------------------------------------------------------

class PlateauScheduler:
    """Cuts lr by (1 - factor) after `patience` epochs without a new best.

    Improvement means strictly lower than the best validation loss seen
    so far; on a cut the stagnation counter resets but the best value is
    retained.
    """

    def __init__(self, lr0: float, patience: int = 9, factor: float = 0.99):
        self.lr = lr0
        self.patience = patience
        self.factor = factor
        self.best = np.inf
        self.stagnant = 0

    def step(self, val_loss: float) -> float:
        if val_loss < self.best:
            self.best = val_loss
            self.stagnant = 0
        else:
            self.stagnant += 1
            if self.stagnant >= self.patience:
                self.lr *= self.factor
                self.stagnant = 0
        return self.lr


def lr_on_plateau(val_losses, lr0: float, patience: int = 9,
                  factor: float = 0.99) -> float:
    """Final learning rate after replaying a validation-loss history."""
    sched = PlateauScheduler(lr0, patience=patience, factor=factor)
    lr = lr0
    for v in val_losses:
        lr = sched.step(float(v))
    return lr


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def evaluate_loss(model: StoCastModel, ws: WindowSet, config: TrainConfig,
                  batch_size: int = 4096) -> float:
    """Mean WHL of the model on a window set (already standardized)."""
    if len(ws) == 0:
        raise InputError("cannot evaluate on an empty window set")
    total = 0.0
    for lo in range(0, len(ws), batch_size):
        hi = min(lo + batch_size, len(ws))
        out, _ = model_forward(model.arch, model.params,
                               ws.dynamic[lo:hi], ws.static[lo:hi])
        loss, _ = batch_loss(out, ws.labels[lo:hi], ws.counts[lo:hi],
                             delta=config.delta, weight_w=config.weight_w,
                             threshold_t=config.threshold_t)
        total += loss * (hi - lo)
    return total / len(ws)


def predict_ratios(model: StoCastModel, dynamic: np.ndarray, static: np.ndarray,
                   batch_size: int = 4096) -> np.ndarray:
    """Batched forward over a large sample set (standardized inputs)."""
    n = dynamic.shape[0]
    out = np.empty((n, model.arch.horizon_hours), dtype=np.float64)
    for lo in range(0, n, batch_size):
        hi = min(lo + batch_size, n)
        out[lo:hi], _ = model_forward(model.arch, model.params,
                                      dynamic[lo:hi], static[lo:hi])
    return out


def train_loop(config: TrainConfig, train: WindowSet, val: WindowSet,
               model: StoCastModel | None = None,
               arch: Architecture | None = None,
               log_every: int = 0) -> tuple[StoCastModel, TrainHistory]:
    """Train to the best validation loss; returns (best model, history)."""
    if len(train) == 0 or len(val) == 0:
        raise InputError("train_loop needs nonempty train and validation sets")
    t_start = time.monotonic()
    if model is None:
        model = StoCastModel.initialized(config.seed, arch)
    state = AdamState(model.params)
    sched = PlateauScheduler(config.lr0, config.plateau_patience, config.lr_factor)
    history = TrainHistory()
    best_val = np.inf
    best_model = model.copy()
    epochs_since_best = 0
    shuffler = SplitMix64(derive_seed(config.seed, "epochs"))

    for epoch in range(config.max_epochs):
        order = shuffler.permutation(len(train))
        epoch_loss = 0.0
        for lo in range(0, len(train), config.batch_size):
            idx = order[lo: lo + config.batch_size]
            out, cache = model_forward(model.arch, model.params,
                                       train.dynamic[idx], train.static[idx])
            loss, d_out = batch_loss(out, train.labels[idx], train.counts[idx],
                                     delta=config.delta, weight_w=config.weight_w,
                                     threshold_t=config.threshold_t)
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite training loss at epoch {epoch}, batch {lo // config.batch_size}"
                )
            grads = model_backward(model.arch, model.params, cache, d_out)
            adam_step(model.params, grads, state, sched.lr,
                      context=f"epoch {epoch}, batch {lo // config.batch_size}")
            epoch_loss += loss * len(idx)
        epoch_loss /= len(train)

        val_loss = evaluate_loss(model, val, config)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")

        history.train_loss.append(epoch_loss)
        history.val_loss.append(val_loss)
        history.lr.append(sched.lr)

        if val_loss < best_val:
            best_val = val_loss
            best_model = model.copy()
            history.best_epoch = epoch
            epochs_since_best = 0
        else:
            epochs_since_best += 1

        sched.step(val_loss)
        if log_every and epoch % log_every == 0:
            logger.info("epoch %d: train %.6g val %.6g lr %.3g",
                        epoch, epoch_loss, val_loss, sched.lr)
        if epochs_since_best >= config.early_stop_patience:
            break

    history.wall_time_s = time.monotonic() - t_start
    best_model.metadata = dict(best_model.metadata)
    best_model.metadata.update({
        "best_epoch": history.best_epoch,
        "best_val_loss": best_val,
        "epochs_run": len(history.val_loss),
        "train_config": config.to_dict(),
    })
    return best_model, history


# ---------------------------------------------------------------------------
# LOSO harness
# ---------------------------------------------------------------------------

@dataclass
class LosoFoldResult:
    experiment: LosoExperiment
    model: StoCastModel
    history: TrainHistory
    metrics: dict[str, dict[str, float]]  # split -> {MAE, MSE, WHL}


def _split_metrics(model: StoCastModel, ws: WindowSet, config: TrainConfig
                   ) -> dict[str, float]:
    from .evaluation import metrics

    pred = predict_ratios(model, ws.dynamic, ws.static)
    c = ws.counts[:, None]
    report = metrics(pred * c, ws.labels * c, delta=config.delta,
                     weight_w=config.weight_w, threshold_t=config.threshold_t)
    return report.as_dict()


def run_loso_fold(holdout: str, event_ids: list[str], panels: dict,
                  grid: Grid, config: TrainConfig,
                  cell_split: tuple[np.ndarray, np.ndarray],
                  arch: Architecture | None = None,
                  log_every: int = 0) -> LosoFoldResult:
    """Train and evaluate one fold (one holdout event)."""
    train_cells, test_cells = cell_split
    experiment = LosoExperiment(
        holdout_event_id=holdout,
        training_event_ids=tuple(e for e in event_ids if e != holdout),
        train_cell_ids=train_cells,
        test_cell_ids=test_cells,
        seed=config.seed,
    )
    train, val, test_grid = build_loso_dataset(experiment, panels, grid)
    stats = fit_standardization(train)
    strain = apply_standardization(stats, train)
    sval = apply_standardization(stats, val)

    model, history = train_loop(config, strain, sval, arch=arch,
                                log_every=log_every)
    model.stats = stats
    model.metadata["holdout_event_id"] = holdout

    stest_grid = apply_standardization(stats, test_grid)
    sheld = apply_standardization(stats, holdout_windows(experiment, panels, grid))
    metrics = {
        "training": _split_metrics(model, strain, config),
        "validation": _split_metrics(model, sval, config),
        "test-grid": _split_metrics(model, stest_grid, config),
        "test-event": _split_metrics(model, sheld, config),
    }
    return LosoFoldResult(experiment=experiment, model=model,
                          history=history, metrics=metrics)


def loso_harness(panels: dict, grid: Grid, config: TrainConfig,
                 arch: Architecture | None = None,
                 log_every: int = 0) -> list[LosoFoldResult]:
    """All LOSO folds: each event is held out once.

    The spatial 80/20 cell split is made once (from the config seed) and
    shared by every fold, matching the single grid partition of the
    experimental protocol.
    """
    event_ids = sorted(panels)
    if len(event_ids) < 2:
        raise InputError(f"LOSO needs >= 2 events, got {len(event_ids)}")
    act = active_cells(grid, [panels[e] for e in event_ids])
    cell_split = split_spatial(act, seed=config.seed)
    return [
        run_loso_fold(holdout, event_ids, panels, grid, config, cell_split,
                      arch=arch, log_every=log_every)
        for holdout in event_ids
    ]


def metrics_table(results: list[LosoFoldResult]) -> dict:
    """JSON-ready Table-4-shaped metric tables, one per holdout event."""
    return {
        r.experiment.holdout_event_id: r.metrics
        for r in results
    }


def write_metrics_json(path, results: list[LosoFoldResult]) -> None:
    with open(path, "w") as fh:
        json.dump(metrics_table(results), fh, sort_keys=True, indent=2)
        fh.write("\n")
