"""Minimal dense-network core: forward/backward, softmax, Adam, checkpoints.

Everything here is hand-rolled numpy on purpose: the learner needs exact,
inspectable gradients (verified against finite differences) and deterministic
in-place updates; a general autodiff graph is out of scope.

Parameter flattening order (stable, used by checkpoints): for each layer in
order, the weight matrix in row-major order, then the bias vector.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1

_ACTIVATIONS = ("relu", "tanh", "identity")


class ShapeError(ValueError):
    """Raised when an input does not match the network topology."""


class CheckpointError(RuntimeError):
    """Raised on checkpoint version/shape mismatch or corruption."""


@dataclass
class Layer:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class DenseNet:
    """Fixed feed-forward stack of affine + {relu, tanh, identity} layers."""

    def __init__(self, sizes, activations, dtype=np.float32, rng=None):
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        self.dtype = np.dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng()
        self.layers: list[Layer] = []
        for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(self.dtype)
            b = np.zeros(fan_out, dtype=self.dtype)
            self.layers.append(Layer(w, b, act))

    @property
    def in_dim(self) -> int:
        return self.layers[0].w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].w.shape[0]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.w)
            out.append(layer.b)
        return out

    def copy(self) -> "DenseNet":
        other = object.__new__(DenseNet)
        other.dtype = self.dtype
        other.layers = [Layer(l.w.copy(), l.b.copy(), l.activation) for l in self.layers]
        return other

    def astype(self, dtype) -> "DenseNet":
        other = self.copy()
        other.dtype = np.dtype(dtype)
        for layer in other.layers:
            layer.w = layer.w.astype(dtype)
            layer.b = layer.b.astype(dtype)
        return other


def _apply_activation(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z, y, act):
    # y is the post-activation output for z.
    if act == "relu":
        return (z > 0).astype(z.dtype)
    if act == "tanh":
        return 1.0 - y * y
    return np.ones_like(z)


def forward(net: DenseNet, x: np.ndarray):
    """Run the network on x (d,) or (B, d); returns (y, cache) for backward."""
    x = np.asarray(x, dtype=net.dtype)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.in_dim:
        raise ShapeError(f"input dim {x.shape[1]} != network input dim {net.in_dim}")
    cache = {"inputs": [], "pre": [], "post": [], "single": single}
    h = x
    for layer in net.layers:
        cache["inputs"].append(h)
        z = h @ layer.w.T + layer.b
        h = _apply_activation(z, layer.activation)
        cache["pre"].append(z)
        cache["post"].append(h)
    y = h[0] if single else h
    return y, cache


def backward(net: DenseNet, cache, dy: np.ndarray):
    """Reverse-mode pass; returns (grads aligned with net.params(), dx)."""
    if len(cache["inputs"]) != len(net.layers):
        raise ShapeError("cache does not match network topology")
    dy = np.asarray(dy, dtype=net.dtype)
    if cache["single"]:
        dy = dy[None, :]
    grads: list[np.ndarray] = []
    dh = dy
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        z = cache["pre"][idx]
        h_in = cache["inputs"][idx]
        if dh.shape != z.shape:
            raise ShapeError("upstream gradient shape does not match cache")
        dz = dh * _activation_grad(z, cache["post"][idx], layer.activation)
        dw = dz.T @ h_in
        db = dz.sum(axis=0)
        dh = dz @ layer.w
        grads.insert(0, db)
        grads.insert(0, dw)
    dx = dh[0] if cache["single"] else dh
    return grads, dx


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax (max-subtraction)."""
    z = np.asarray(z, dtype=np.result_type(z, np.float32))
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators with bias correction."""

    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr=5e-5):
        state = cls(lr=lr)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def adam_step(params, grads, state: AdamState):
    """Standard Adam update applied in place; fails fast on NaN gradients."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params/grads/state length mismatch")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient in adam_step")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = g.astype(p.dtype, copy=False)
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    num = np.abs(a - b)
    den = np.maximum(1e-8, np.abs(a) + np.abs(b))
    return float(np.max(num / den)) if a.size else 0.0


def finite_difference_grads(loss_fn, params, step=1e-6):
    """Central finite differences of a scalar loss over a list of arrays."""
    grads = []
    for p in params:
        g = np.zeros_like(p, dtype=np.float64)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss_fn()
            flat[i] = orig - step
            lo = loss_fn()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        grads.append(g)
    return grads


def grad_check(net: DenseNet, loss_fn, x, step=1e-6):
    """Max relative error of analytic vs. central-difference gradients.

    loss_fn(y) must return (scalar loss, dL/dy). Requires f64 precision.
    """
    if net.dtype != np.float64:
        raise ValueError("grad_check requires an f64 network")
    params = net.params()
    if not params:
        return 0.0
    y, cache = forward(net, x)
    _, dy = loss_fn(y)
    analytic, _ = backward(net, cache, dy)

    def scalar_loss():
        yy, _ = forward(net, x)
        loss, _ = loss_fn(yy)
        return loss

    numeric = finite_difference_grads(scalar_loss, params, step=step)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))


# --- checkpoint format -------------------------------------------------------
#
# A checkpoint is a pair of files: <stem>.json (manifest: format version,
# precision, shapes in flattening order, parameter count) and <stem>.bin
# (all parameters as one flat little-endian array in that order).


def flatten_params(params) -> np.ndarray:
    if not params:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate([np.asarray(p).reshape(-1) for p in params])


def unflatten_params(flat, shapes, dtype):
    out = []
    offset = 0
    for shape in shapes:
        n = int(np.prod(shape)) if shape else 1
        out.append(np.array(flat[offset:offset + n], dtype=dtype).reshape(shape))
        offset += n
    if offset != flat.size:
        raise CheckpointError("parameter count mismatch while unflattening")
    return out


def save_params(stem, named_params, extra=None):
    """Write a manifest + flat little-endian parameter file for named arrays."""
    stem = Path(stem)
    names = [n for n, _ in named_params]
    arrays = [np.asarray(p) for _, p in named_params]
    # Stored as f64 regardless of in-memory precision: f32 values round-trip
    # exactly and mixed-precision entries (e.g. optimizer state) stay intact.
    dtype = np.dtype(np.float64)
    flat = flatten_params(arrays).astype(dtype)
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "precision": dtype.name,
        "parameter_count": int(flat.size),
        "entries": [{"name": n, "shape": list(a.shape)} for n, a in zip(names, arrays)],
        "extra": extra or {},
    }
    stem.parent.mkdir(parents=True, exist_ok=True)
    with open(stem.with_suffix(".json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    little = flat.astype(dtype.newbyteorder("<"))
    with open(stem.with_suffix(".bin"), "wb") as fh:
        fh.write(struct.pack("<I", CHECKPOINT_FORMAT_VERSION))
        fh.write(little.tobytes())


def load_params(stem):
    """Read a checkpoint written by save_params; returns (dict, manifest)."""
    stem = Path(stem)
    manifest_path = stem.with_suffix(".json")
    if not manifest_path.exists():
        raise CheckpointError(f"missing checkpoint manifest {manifest_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format {manifest.get('format_version')} != "
            f"supported {CHECKPOINT_FORMAT_VERSION}"
        )
    dtype = np.dtype(manifest["precision"])
    with open(stem.with_suffix(".bin"), "rb") as fh:
        (version,) = struct.unpack("<I", fh.read(4))
        if version != manifest["format_version"]:
            raise CheckpointError("manifest/binary version mismatch")
        flat = np.frombuffer(fh.read(), dtype=dtype.newbyteorder("<")).astype(dtype)
    if flat.size != manifest["parameter_count"]:
        raise CheckpointError(
            f"expected {manifest['parameter_count']} parameters, found {flat.size}"
        )
    shapes = [tuple(e["shape"]) for e in manifest["entries"]]
    arrays = unflatten_params(flat, shapes, dtype)
    named = {e["name"]: a for e, a in zip(manifest["entries"], arrays)}
    return named, manifest
