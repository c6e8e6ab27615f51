"""Huber and Weighted Huber Loss on the outage-count scale.

The network predicts outage ratios; the loss converts both predictions
and labels to counts (ratio times the cell's transformer count C) and
applies the Weighted Huber Loss there: plain Huber when the observed
count y is at most the threshold t, and w times Huber when y exceeds t.
The weighting branch depends on the observed value only, so the factor
is constant along the prediction axis and the loss stays differentiable
in the prediction.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError

DELTA_DEFAULT = 10.0
WEIGHT_W_DEFAULT = 1000.0
THRESHOLD_T_DEFAULT = 5.0


def huber(y, f, delta: float = DELTA_DEFAULT):
    """Elementwise Huber loss between observed y and predicted f (counts)."""
    if delta <= 0:
        raise ContractError(f"delta must be positive, got {delta}")
    e = np.asarray(y, dtype=np.float64) - np.asarray(f, dtype=np.float64)
    ae = np.abs(e)
    return np.where(ae <= delta, 0.5 * e * e, delta * ae - 0.5 * delta * delta)


def huber_grad_f(y, f, delta: float = DELTA_DEFAULT):
    """d huber / d f: -e inside the quadratic region, else -delta*sign(e)."""
    e = np.asarray(y, dtype=np.float64) - np.asarray(f, dtype=np.float64)
    return np.where(np.abs(e) <= delta, -e, -delta * np.sign(e))


def whl(y, f, delta: float = DELTA_DEFAULT, weight_w: float = WEIGHT_W_DEFAULT,
        threshold_t: float = THRESHOLD_T_DEFAULT):
    """Weighted Huber Loss; the branch tests the OBSERVED count y."""
    base = huber(y, f, delta)
    w = np.where(np.asarray(y, dtype=np.float64) > threshold_t, weight_w, 1.0)
    return w * base


def batch_loss(pred_ratios: np.ndarray, label_ratios: np.ndarray,
               counts: np.ndarray, delta: float = DELTA_DEFAULT,
               weight_w: float = WEIGHT_W_DEFAULT,
               threshold_t: float = THRESHOLD_T_DEFAULT
               ) -> tuple[float, np.ndarray]:
    """Mean WHL over all B x 6 elements, on counts, plus d loss / d pred.

    Returns (loss, grad w.r.t. pred_ratios). Gradient flows through the
    prediction only; the chain rule picks up the ratio-to-count factor C.
    """
    pred = np.asarray(pred_ratios, dtype=np.float64)
    label = np.asarray(label_ratios, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if pred.shape != label.shape or pred.ndim != 2:
        raise ContractError(
            f"predictions {pred.shape} and labels {label.shape} must be "
            f"matching 2-d arrays"
        )
    if counts.shape != (pred.shape[0],):
        raise ContractError(
            f"counts must be one per sample, got {counts.shape} for batch "
            f"{pred.shape[0]}"
        )
    c = counts[:, None]
    y = label * c
    f = pred * c
    w = np.where(y > threshold_t, weight_w, 1.0)
    n = pred.size
    loss = float((w * huber(y, f, delta)).sum() / n)
    grad = w * huber_grad_f(y, f, delta) * c / n
    return loss, grad
