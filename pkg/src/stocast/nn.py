"""The STO-CAST network: four GRUs, five FC layers, hand-written gradients.

No ML framework: parameters are named numpy arrays in 64-bit floats, the
forward pass records the intermediates it needs, and the backward pass
is exact reverse-mode differentiation of those equations.

Wiring (Table 3 dimensions): GRU1 reads the 12x4 dynamic window; GRU2
and GRU3 both read GRU1's output sequence in parallel; GRU4 reads their
per-step concatenation. The dynamic latent is GRU4's output over the six
future steps, flattened (6 x 32 = 192). The static branch is FC1-FC2
(6 -> 64 -> 32). Their concatenation (192 + 32 = 224, dynamic first)
passes through FC3-FC4-FC5; FC5 applies a sigmoid so the six outputs are
outage ratios in (0, 1).

GRU update, per step t (gates logistic, candidate ReLU):

    z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
    r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
    c_t = relu(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
    h_t = (1 - z_t) * h_{t-1} + z_t * c_t

The ReLU subgradient at exactly 0 is taken as 0.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import StandardizationStats
from .errors import ContractError, InputError, NumericError
from .rng import SplitMix64, derive_seed

CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_MANIFEST = "checkpoint.json"
CHECKPOINT_BINARY = "params.f64"


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class Architecture:
    """Layer widths; defaults are the Table 3 dimensions."""

    dynamic_channels: int = 4
    static_features: int = 6
    window_hours: int = 12
    horizon_hours: int = 6
    gru1: int = 32
    gru2: int = 64
    gru3: int = 64
    gru4: int = 32
    fc1: int = 64
    fc2: int = 32
    fc3: int = 64
    fc4: int = 32

    @property
    def gru4_input(self) -> int:
        return self.gru2 + self.gru3

    @property
    def dynamic_latent(self) -> int:
        return self.horizon_hours * self.gru4

    @property
    def fc3_input(self) -> int:
        return self.dynamic_latent + self.fc2

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "dynamic_channels", "static_features", "window_hours", "horizon_hours",
            "gru1", "gru2", "gru3", "gru4", "fc1", "fc2", "fc3", "fc4",
        )}

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        return cls(**{k: int(v) for k, v in d.items()})

    def fingerprint(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def param_spec(arch: Architecture) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical (name, shape) list; fixes checkpoint binary order."""
    spec: list[tuple[str, tuple[int, ...]]] = []
    grus = [
        ("gru1", arch.dynamic_channels, arch.gru1),
        ("gru2", arch.gru1, arch.gru2),
        ("gru3", arch.gru1, arch.gru3),
        ("gru4", arch.gru4_input, arch.gru4),
    ]
    for name, n_in, n_h in grus:
        for gate in ("z", "r", "h"):
            spec.append((f"{name}.W_{gate}", (n_h, n_in)))
            spec.append((f"{name}.U_{gate}", (n_h, n_h)))
            spec.append((f"{name}.b_{gate}", (n_h,)))
    fcs = [
        ("fc1", arch.static_features, arch.fc1),
        ("fc2", arch.fc1, arch.fc2),
        ("fc3", arch.fc3_input, arch.fc3),
        ("fc4", arch.fc3, arch.fc4),
        ("fc5", arch.fc4, arch.horizon_hours),
    ]
    for name, n_in, n_out in fcs:
        spec.append((f"{name}.W", (n_out, n_in)))
        spec.append((f"{name}.b", (n_out,)))
    return spec


def init_params(arch: Architecture, seed: int) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, drawn from the repo PRNG.

    Matrices are filled row-major from one sequential substream in
    canonical parameter order, so the result is bit-reproducible.
    """
    rng = SplitMix64(derive_seed(seed, "init"))
    params: dict[str, np.ndarray] = {}
    for name, shape in param_spec(arch):
        if len(shape) == 1:
            params[name] = np.zeros(shape, dtype=np.float64)
            continue
        fan_out, fan_in = shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = (rng.uniforms(fan_out * fan_in) * 2.0 - 1.0).reshape(shape) * bound
    return params


def zeros_like_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


# ---------------------------------------------------------------------------
# GRU kernels
# ---------------------------------------------------------------------------

def gru_forward(params: dict, name: str, seq: np.ndarray,
                h0: np.ndarray | None = None) -> tuple[np.ndarray, dict]:
    """Run one GRU layer over seq [B, T, in] -> (h [B, T, H], cache)."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 3:
        raise ContractError(f"{name}: sequence must be [B, T, in], got {seq.shape}")
    W_z, U_z, b_z = params[f"{name}.W_z"], params[f"{name}.U_z"], params[f"{name}.b_z"]
    W_r, U_r, b_r = params[f"{name}.W_r"], params[f"{name}.U_r"], params[f"{name}.b_r"]
    W_h, U_h, b_h = params[f"{name}.W_h"], params[f"{name}.U_h"], params[f"{name}.b_h"]
    B, T, n_in = seq.shape
    if n_in != W_z.shape[1]:
        raise ContractError(
            f"{name}: input width {n_in} does not match W_z {W_z.shape}"
        )
    H = W_z.shape[0]
    h = np.zeros((B, H), dtype=np.float64) if h0 is None else np.asarray(h0, dtype=np.float64)

    # input projections for all steps at once
    px_z = seq @ W_z.T + b_z
    px_r = seq @ W_r.T + b_r
    px_h = seq @ W_h.T + b_h

    hs = np.empty((B, T, H), dtype=np.float64)
    cache = {
        "x": seq,
        "h_prev": np.empty((B, T, H), dtype=np.float64),
        "z": np.empty((B, T, H), dtype=np.float64),
        "r": np.empty((B, T, H), dtype=np.float64),
        "c": np.empty((B, T, H), dtype=np.float64),
        "ac": np.empty((B, T, H), dtype=np.float64),
    }
    for t in range(T):
        z = sigmoid(px_z[:, t] + h @ U_z.T)
        r = sigmoid(px_r[:, t] + h @ U_r.T)
        ac = px_h[:, t] + (r * h) @ U_h.T
        c = relu(ac)
        cache["h_prev"][:, t] = h
        cache["z"][:, t] = z
        cache["r"][:, t] = r
        cache["c"][:, t] = c
        cache["ac"][:, t] = ac
        h = (1.0 - z) * h + z * c
        hs[:, t] = h
    return hs, cache


def gru_backward(params: dict, name: str, cache: dict,
                 d_out: np.ndarray, grads: dict) -> np.ndarray:
    """Backprop through time for one GRU layer.

    d_out is the gradient w.r.t. the full output sequence [B, T, H];
    parameter gradients accumulate into grads; returns the gradient
    w.r.t. the input sequence [B, T, in].
    """
    U_z, U_r, U_h = params[f"{name}.U_z"], params[f"{name}.U_r"], params[f"{name}.U_h"]
    W_z, W_r, W_h = params[f"{name}.W_z"], params[f"{name}.W_r"], params[f"{name}.W_h"]
    x = cache["x"]
    B, T, _ = x.shape
    dx = np.zeros_like(x)
    dh = np.zeros((B, U_z.shape[0]), dtype=np.float64)

    for t in range(T - 1, -1, -1):
        g = dh + d_out[:, t]
        h_prev = cache["h_prev"][:, t]
        z = cache["z"][:, t]
        r = cache["r"][:, t]
        c = cache["c"][:, t]
        ac = cache["ac"][:, t]

        dz = g * (c - h_prev)
        dc = g * z
        dh = g * (1.0 - z)

        dac = dc * (ac > 0.0)
        daz = dz * z * (1.0 - z)

        rh = r * h_prev
        d_rh = dac @ U_h
        dr = d_rh * h_prev
        dar = dr * r * (1.0 - r)
        dh += d_rh * r

        grads[f"{name}.W_h"] += dac.T @ x[:, t]
        grads[f"{name}.U_h"] += dac.T @ rh
        grads[f"{name}.b_h"] += dac.sum(axis=0)
        grads[f"{name}.W_z"] += daz.T @ x[:, t]
        grads[f"{name}.U_z"] += daz.T @ h_prev
        grads[f"{name}.b_z"] += daz.sum(axis=0)
        grads[f"{name}.W_r"] += dar.T @ x[:, t]
        grads[f"{name}.U_r"] += dar.T @ h_prev
        grads[f"{name}.b_r"] += dar.sum(axis=0)

        dh += daz @ U_z + dar @ U_r
        dx[:, t] = dac @ W_h + daz @ W_z + dar @ W_r
    return dx


# ---------------------------------------------------------------------------
# FC kernels
# ---------------------------------------------------------------------------

def fc_forward(params: dict, name: str, x: np.ndarray,
               activation: str) -> tuple[np.ndarray, dict]:
    W, b = params[f"{name}.W"], params[f"{name}.b"]
    a = x @ W.T + b
    if activation == "relu":
        out = relu(a)
    elif activation == "sigmoid":
        out = sigmoid(a)
    elif activation == "none":
        out = a
    else:
        raise ContractError(f"unknown activation {activation!r}")
    return out, {"x": x, "a": a, "out": out, "activation": activation}


def fc_backward(params: dict, name: str, cache: dict,
                d_out: np.ndarray, grads: dict) -> np.ndarray:
    act = cache["activation"]
    if act == "relu":
        da = d_out * (cache["a"] > 0.0)
    elif act == "sigmoid":
        s = cache["out"]
        da = d_out * s * (1.0 - s)
    else:
        da = d_out
    grads[f"{name}.W"] += da.T @ cache["x"]
    grads[f"{name}.b"] += da.sum(axis=0)
    return da @ params[f"{name}.W"]


# ---------------------------------------------------------------------------
# The model
# ---------------------------------------------------------------------------

@dataclass
class StoCastModel:
    """Architecture + parameters (+ optional embedded standardization)."""

    arch: Architecture
    params: dict[str, np.ndarray]
    stats: StandardizationStats | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def initialized(cls, seed: int, arch: Architecture | None = None) -> "StoCastModel":
        arch = arch or Architecture()
        return cls(arch=arch, params=init_params(arch, seed))

    def forward(self, dynamic: np.ndarray, static: np.ndarray
                ) -> tuple[np.ndarray, dict]:
        return model_forward(self.arch, self.params, dynamic, static)

    def backward(self, cache: dict, d_out: np.ndarray) -> dict[str, np.ndarray]:
        return model_backward(self.arch, self.params, cache, d_out)

    def predict(self, dynamic: np.ndarray, static: np.ndarray) -> np.ndarray:
        out, _ = self.forward(dynamic, static)
        return out

    def copy(self) -> "StoCastModel":
        return StoCastModel(arch=self.arch,
                            params={k: v.copy() for k, v in self.params.items()},
                            stats=self.stats, metadata=dict(self.metadata))


def _check_batched(arch: Architecture, dynamic, static):
    dynamic = np.asarray(dynamic, dtype=np.float64)
    static = np.asarray(static, dtype=np.float64)
    single = dynamic.ndim == 2
    if single:
        dynamic = dynamic[None]
        static = static[None]
    if dynamic.ndim != 3 or dynamic.shape[1:] != (arch.window_hours, arch.dynamic_channels):
        raise ContractError(
            f"dynamic input must be [B, {arch.window_hours}, "
            f"{arch.dynamic_channels}], got {dynamic.shape}"
        )
    if static.ndim != 2 or static.shape != (dynamic.shape[0], arch.static_features):
        raise ContractError(
            f"static input must be [B, {arch.static_features}], got {static.shape}"
        )
    return dynamic, static, single


def model_forward(arch: Architecture, params: dict,
                  dynamic: np.ndarray, static: np.ndarray) -> tuple[np.ndarray, dict]:
    """Full forward pass -> (ratios [B, 6] in (0,1), cache for backward)."""
    dynamic, static, single = _check_batched(arch, dynamic, static)
    B = dynamic.shape[0]

    h1, c1 = gru_forward(params, "gru1", dynamic)
    h2, c2 = gru_forward(params, "gru2", h1)
    h3, c3 = gru_forward(params, "gru3", h1)
    h4, c4 = gru_forward(params, "gru4", np.concatenate([h2, h3], axis=2))
    dyn_latent = h4[:, -arch.horizon_hours:, :].reshape(B, arch.dynamic_latent)

    s1, cf1 = fc_forward(params, "fc1", static, "relu")
    s2, cf2 = fc_forward(params, "fc2", s1, "relu")

    latent = np.concatenate([dyn_latent, s2], axis=1)
    f3, cf3 = fc_forward(params, "fc3", latent, "relu")
    f4, cf4 = fc_forward(params, "fc4", f3, "relu")
    out, cf5 = fc_forward(params, "fc5", f4, "sigmoid")

    if not np.isfinite(out).all():
        raise NumericError("model forward produced non-finite outputs")
    cache = {
        "B": B, "single": single,
        "gru1": c1, "gru2": c2, "gru3": c3, "gru4": c4,
        "fc1": cf1, "fc2": cf2, "fc3": cf3, "fc4": cf4, "fc5": cf5,
    }
    return (out[0] if single else out), cache


def model_backward(arch: Architecture, params: dict, cache: dict,
                   d_out: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of the forward computation w.r.t. every parameter."""
    if not isinstance(cache, dict) or "fc5" not in cache:
        raise ContractError("model_backward requires the cache from model_forward")
    d_out = np.asarray(d_out, dtype=np.float64)
    if cache["single"] and d_out.ndim == 1:
        d_out = d_out[None]
    B = cache["B"]
    if d_out.shape != (B, arch.horizon_hours):
        raise ContractError(
            f"upstream gradient must be [{B}, {arch.horizon_hours}], got {d_out.shape}"
        )

    grads = {name: np.zeros(shape, dtype=np.float64) for name, shape in param_spec(arch)}

    d_f4 = fc_backward(params, "fc5", cache["fc5"], d_out, grads)
    d_f3 = fc_backward(params, "fc4", cache["fc4"], d_f4, grads)
    d_latent = fc_backward(params, "fc3", cache["fc3"], d_f3, grads)

    d_dyn = d_latent[:, : arch.dynamic_latent]
    d_s2 = d_latent[:, arch.dynamic_latent:]

    d_s1 = fc_backward(params, "fc2", cache["fc2"], d_s2, grads)
    fc_backward(params, "fc1", cache["fc1"], d_s1, grads)

    T = arch.window_hours
    d_h4 = np.zeros((B, T, arch.gru4), dtype=np.float64)
    d_h4[:, -arch.horizon_hours:, :] = d_dyn.reshape(B, arch.horizon_hours, arch.gru4)
    d_concat = gru_backward(params, "gru4", cache["gru4"], d_h4, grads)
    d_h2 = d_concat[:, :, : arch.gru2]
    d_h3 = d_concat[:, :, arch.gru2:]
    d_h1 = gru_backward(params, "gru2", cache["gru2"], d_h2, grads)
    d_h1 += gru_backward(params, "gru3", cache["gru3"], d_h3, grads)
    gru_backward(params, "gru1", cache["gru1"], d_h1, grads)
    return grads


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(model: StoCastModel, directory) -> None:
    """Write manifest JSON + little-endian f64 parameter sidecar."""
    os.makedirs(directory, exist_ok=True)
    spec = param_spec(model.arch)
    blob = np.concatenate([model.params[name].ravel() for name, _ in spec])
    raw = blob.astype("<f8").tobytes()
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "architecture": model.arch.to_dict(),
        "architecture_fingerprint": model.arch.fingerprint(),
        "param_order": [name for name, _ in spec],
        "dtype": "<f8",
        "checksum_sha256": hashlib.sha256(raw).hexdigest(),
        "standardization": model.stats.to_dict() if model.stats else None,
        "metadata": model.metadata,
    }
    with open(os.path.join(directory, CHECKPOINT_MANIFEST), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(os.path.join(directory, CHECKPOINT_BINARY), "wb") as fh:
        fh.write(raw)


def load_checkpoint(directory) -> StoCastModel:
    """Read a checkpoint; any corruption or mismatch raises InputError."""
    manifest_path = os.path.join(directory, CHECKPOINT_MANIFEST)
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"checkpoint manifest not found: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"checkpoint manifest is not valid JSON: {manifest_path}") from exc

    if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise InputError(
            f"unsupported checkpoint format_version {manifest.get('format_version')!r}"
        )
    try:
        arch = Architecture.from_dict(manifest["architecture"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"checkpoint {directory}: bad architecture table") from exc
    spec = param_spec(arch)
    if manifest.get("param_order") != [name for name, _ in spec]:
        raise InputError(f"checkpoint {directory}: parameter order mismatch")

    with open(os.path.join(directory, CHECKPOINT_BINARY), "rb") as fh:
        raw = fh.read()
    if hashlib.sha256(raw).hexdigest() != manifest.get("checksum_sha256"):
        raise InputError(f"checkpoint {directory}: checksum mismatch (corrupt file)")
    blob = np.frombuffer(raw, dtype="<f8")
    expect = sum(int(np.prod(shape)) for _, shape in spec)
    if blob.size != expect:
        raise InputError(
            f"checkpoint {directory}: expected {expect} parameters, found {blob.size}"
        )
    params = {}
    offset = 0
    for name, shape in spec:
        size = int(np.prod(shape))
        params[name] = blob[offset: offset + size].reshape(shape).astype(np.float64)
        offset += size
    stats = manifest.get("standardization")
    return StoCastModel(
        arch=arch,
        params=params,
        stats=StandardizationStats.from_dict(stats) if stats else None,
        metadata=manifest.get("metadata") or {},
    )
