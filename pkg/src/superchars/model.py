"""A small CNN written directly in numpy: forward, backprop and SGD.

Architectures are described by a compact string, for example
``"conv3x16,relu,pool,gap,dense2"``. Tokens:

``convKxC`` / ``convKxCsS``
    K x K convolution to C channels, stride S (default 1), zero padding K // 2.
``relu``, ``pool`` (2x2 max, stride 2), ``gap`` (global average pool)
``denseN``
    fully connected layer to N outputs; flattens its input.
"""
from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NumericError, ShapeError

DEFAULT_ARCH = "conv3x16,relu,pool,conv3x32,relu,pool,conv3x64,relu,pool,conv3x64,relu,pool,gap,dense2"
N_CLASSES = 2


class Conv:
    kind = "conv"

    def __init__(self, k: int, out: int, stride: int = 1):
        self.k, self.out, self.stride, self.pad = k, out, stride, k // 2

    def __repr__(self):
        return f"conv{self.k}x{self.out}" + (f"s{self.stride}" if self.stride != 1 else "")

    def out_shape(self, shape):
        if len(shape) != 3:
            raise ShapeError(f"{self!r} needs a (C, H, W) input, got {shape}")
        c, h, w = shape
        ho = (h - self.k + 2 * self.pad) // self.stride + 1
        wo = (w - self.k + 2 * self.pad) // self.stride + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"{self!r} on input {shape} leaves no output pixels")
        return (self.out, ho, wo)

    def param_shapes(self, shape):
        return {"w": (self.out, shape[0], self.k, self.k), "b": (self.out,)}

    def fan_in(self, shape):
        return shape[0] * self.k * self.k

    def forward(self, x, p):
        b, c, h, w = x.shape
        k, s, pad = self.k, self.stride, self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        ho, wo = win.shape[2], win.shape[3]
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * k * k)
        y = cols @ p["w"].reshape(self.out, -1).T + p["b"]
        y = y.reshape(b, ho, wo, self.out).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(y), (x.shape, cols, ho, wo)

    def backward(self, dy, cache, p):
        (b, c, h, w), cols, ho, wo = cache
        k, s, pad = self.k, self.stride, self.pad
        dyr = dy.transpose(0, 2, 3, 1).reshape(-1, self.out)
        grads = {"w": (dyr.T @ cols).reshape(p["w"].shape), "b": dyr.sum(axis=0)}
        dcols = (dyr @ p["w"].reshape(self.out, -1)).reshape(b, ho, wo, c, k, k)
        dxp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + s * ho : s, j : j + s * wo : s] += dcols[..., i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, pad : pad + h, pad : pad + w], grads


class Relu:
    kind = "relu"

    def __repr__(self):
        return "relu"

    def out_shape(self, shape):
        return shape

    def forward(self, x, p):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, mask, p):
        return dy * mask, {}


class MaxPool:
    """2x2 max pool, stride 2. An odd trailing row or column is dropped."""

    kind = "pool"

    def __repr__(self):
        return "pool"

    def out_shape(self, shape):
        if len(shape) != 3:
            raise ShapeError(f"pool needs a (C, H, W) input, got {shape}")
        c, h, w = shape
        if h < 2 or w < 2:
            raise ShapeError(f"pool on input {shape} leaves no output pixels")
        return (c, h // 2, w // 2)

    _OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))

    def forward(self, x, p):
        h2, w2 = x.shape[2] // 2, x.shape[3] // 2
        # strided comparisons; ties go to the first offset in row-major order
        y = x[:, :, 0 : 2 * h2 : 2, 0 : 2 * w2 : 2].copy()
        arg = np.zeros(y.shape, dtype=np.int8)
        for n, (i, j) in enumerate(self._OFFSETS[1:], start=1):
            cand = x[:, :, i : 2 * h2 : 2, j : 2 * w2 : 2]
            better = cand > y
            np.copyto(y, cand, where=better)
            arg[better] = n
        return y, (x.shape, arg)

    def backward(self, dy, cache, p):
        shape, arg = cache
        h2, w2 = arg.shape[2], arg.shape[3]
        dx = np.zeros(shape, dtype=dy.dtype)
        for n, (i, j) in enumerate(self._OFFSETS):
            dx[:, :, i : 2 * h2 : 2, j : 2 * w2 : 2] = np.where(arg == n, dy, 0)
        return dx, {}


class GlobalAvgPool:
    kind = "gap"

    def __repr__(self):
        return "gap"

    def out_shape(self, shape):
        if len(shape) != 3:
            raise ShapeError(f"gap needs a (C, H, W) input, got {shape}")
        return (shape[0],)

    def forward(self, x, p):
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, dy, shape, p):
        b, c, h, w = shape
        return np.broadcast_to(dy[:, :, None, None] / (h * w), shape).copy(), {}


class Dense:
    kind = "dense"

    def __init__(self, out: int):
        self.out = out

    def __repr__(self):
        return f"dense{self.out}"

    def out_shape(self, shape):
        return (self.out,)

    def param_shapes(self, shape):
        return {"w": (self.out, int(np.prod(shape))), "b": (self.out,)}

    def fan_in(self, shape):
        return int(np.prod(shape))

    def forward(self, x, p):
        flat = x.reshape(x.shape[0], -1)
        return flat @ p["w"].T + p["b"], (x.shape, flat)

    def backward(self, dy, cache, p):
        shape, flat = cache
        grads = {"w": dy.T @ flat, "b": dy.sum(axis=0)}
        return (dy @ p["w"]).reshape(shape), grads


_TOKEN = re.compile(r"^(?:conv(\d+)x(\d+)(?:s(\d+))?|relu|pool|gap|dense(\d+))$")


def parse_layers(descriptor: str) -> list:
    layers = []
    for token in descriptor.replace(" ", "").split(","):
        m = _TOKEN.match(token)
        if not m:
            raise ShapeError(f"unknown layer token {token!r}")
        if token.startswith("conv"):
            layers.append(Conv(int(m[1]), int(m[2]), int(m[3] or 1)))
        elif token == "relu":
            layers.append(Relu())
        elif token == "pool":
            layers.append(MaxPool())
        elif token == "gap":
            layers.append(GlobalAvgPool())
        else:
            layers.append(Dense(int(m[4])))
    return layers


@dataclass(frozen=True)
class CnnArch:
    descriptor: str = DEFAULT_ARCH
    input_shape: tuple[int, int, int] = (3, 224, 224)

    @property
    def layers(self) -> list:
        return parse_layers(self.descriptor)

    def shapes(self) -> list[tuple[int, ...]]:
        """Input shape followed by each layer's output shape."""
        shapes = [tuple(self.input_shape)]
        for i, layer in enumerate(self.layers):
            try:
                shapes.append(layer.out_shape(shapes[-1]))
            except ShapeError as exc:
                raise ShapeError(f"layer {i} ({layer!r}): {exc}") from None
        if shapes[-1] != (N_CLASSES,):
            raise ShapeError(f"final layer outputs {shapes[-1]}, expected ({N_CLASSES},)")
        return shapes


@dataclass
class CnnModel:
    arch: CnnArch
    params: list[dict[str, np.ndarray]]
    rng_seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._layers = self.arch.layers

    @property
    def layers(self):
        return self._layers

    @property
    def dtype(self):
        for p in self.params:
            if p:
                return p["w"].dtype
        return np.dtype(np.float32)

    def copy(self) -> CnnModel:
        params = [{k: v.copy() for k, v in p.items()} for p in self.params]
        return CnnModel(self.arch, params, self.rng_seed, dict(self.meta))

    def named_params(self):
        for i, (layer, p) in enumerate(zip(self.layers, self.params)):
            for name, value in p.items():
                yield f"{i}.{layer!r}.{name}", value


def init_model(arch: CnnArch, seed: int = 0, dtype=np.float32) -> CnnModel:
    """He-scaled uniform weights from a PCG64 stream, zero biases."""
    shapes = arch.shapes()
    rng = np.random.Generator(np.random.PCG64(seed))
    params = []
    for layer, in_shape in zip(arch.layers, shapes):
        if not hasattr(layer, "param_shapes"):
            params.append({})
            continue
        ps = layer.param_shapes(in_shape)
        limit = np.sqrt(6.0 / layer.fan_in(in_shape))
        params.append(
            {
                "w": rng.uniform(-limit, limit, size=ps["w"]).astype(dtype),
                "b": np.zeros(ps["b"], dtype=dtype),
            }
        )
    return CnnModel(arch, params, seed)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def logits(model: CnnModel, x: np.ndarray, keep_cache: bool = False):
    caches = []
    for layer, p in zip(model.layers, model.params):
        x, cache = layer.forward(x, p)
        if keep_cache:
            caches.append(cache)
    return (x, caches) if keep_cache else x


def forward(model: CnnModel, image: np.ndarray) -> np.ndarray:
    """Class probabilities for one (C, H, W) image or a (B, C, H, W) batch."""
    single = image.ndim == 3
    x = image[None] if single else image
    probs = softmax(logits(model, x.astype(model.dtype, copy=False)))
    return probs[0] if single else probs


def loss_and_grads(model: CnnModel, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    out, caches = logits(model, x.astype(model.dtype, copy=False), keep_cache=True)
    probs = softmax(out)
    n = x.shape[0]
    loss = float(-np.mean(np.log(np.clip(probs[np.arange(n), y], 1e-300, None))))
    d = probs.copy()
    d[np.arange(n), y] -= 1.0
    d /= n
    grads: list[dict] = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        d, grads[i] = model.layers[i].backward(d, caches[i], model.params[i])
    return loss, grads


def first_nonfinite_layer(model: CnnModel, x: np.ndarray) -> str | None:
    x = x.astype(model.dtype, copy=False)
    for i, (layer, p) in enumerate(zip(model.layers, model.params)):
        for name, value in p.items():
            if not np.all(np.isfinite(value)):
                return f"layer {i} ({layer!r}) parameter {name}"
        x, _ = layer.forward(x, p)
        if not np.all(np.isfinite(x)):
            return f"layer {i} ({layer!r}) output"
    return None


class SGD:
    """Plain SGD with classical momentum."""

    def __init__(self, model: CnnModel, momentum: float = 0.9):
        self.momentum = momentum
        self.velocity = [{k: np.zeros_like(v) for k, v in p.items()} for p in model.params]

    def step(self, model: CnnModel, grads, lr: float) -> None:
        for p, g, v in zip(model.params, grads, self.velocity):
            for name in p:
                v[name] *= self.momentum
                v[name] -= lr * g[name]
                p[name] += v[name]


def train_step(model: CnnModel, images: np.ndarray, labels: np.ndarray, lr: float, optimizer: SGD | None = None) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    loss, grads = loss_and_grads(model, images, labels)
    if not np.isfinite(loss):
        where = first_nonfinite_layer(model, images) or "loss"
        raise NumericError(f"non-finite loss; first bad values at {where}")
    if optimizer is None:
        optimizer = SGD(model, momentum=0.0)
    optimizer.step(model, grads, lr)
    for i, (layer, p) in enumerate(zip(model.layers, model.params)):
        for name, value in p.items():
            if not np.all(np.isfinite(value)):
                raise NumericError(f"non-finite parameter after update: layer {i} ({layer!r}) {name}")
    return loss


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    # learning rate is multiplied by lr_decay once this fraction of epochs is done
    decay_at: float = 2 / 3
    lr_decay: float = 0.1


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    return cfg.lr * (cfg.lr_decay if epoch >= int(round(cfg.decay_at * cfg.epochs)) else 1.0)


def train(model: CnnModel, images, labels: Sequence[int], cfg: TrainConfig = TrainConfig(), seed: int = 0, log_epoch=None):
    """Mini-batch SGD over ``images`` (anything indexable by an index array).

    Returns the same model, updated in place, and the per-epoch mean loss.
    ``log_epoch(epoch, loss)`` is called after every epoch; a truthy return
    value stops training early.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if len(images) != n:
        raise ValueError("images and labels differ in length")
    rng = np.random.Generator(np.random.PCG64(seed))
    opt = SGD(model, cfg.momentum)
    trace = []
    for epoch in range(cfg.epochs):
        lr = lr_at(epoch, cfg)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            total += train_step(model, images[idx], labels[idx], lr, opt) * len(idx)
        trace.append(total / n)
        if log_epoch is not None and log_epoch(epoch, trace[-1]):
            break
    return model, trace


def predict_proba(model: CnnModel, images, batch_size: int = 64, fwd=None) -> np.ndarray:
    """Positive-class probability for every image."""
    fwd = fwd or forward
    out = []
    for start in range(0, len(images), batch_size):
        idx = np.arange(start, min(start + batch_size, len(images)))
        out.append(fwd(model, images[idx])[:, 1])
    return np.concatenate(out) if out else np.zeros(0)


def accuracy(model: CnnModel, images, labels) -> float:
    pred = (predict_proba(model, images) >= 0.5).astype(int)
    return float(np.mean(pred == np.asarray(labels)))


CHECKPOINT_MAGIC = b"SCNN1"


def save_checkpoint(model: CnnModel, path: str | Path) -> None:
    """``SCNN1 | u32 header length | JSON header | float32 tensors, little-endian``."""
    tensors = [(name, value) for name, value in model.named_params()]
    header = {
        "arch": model.arch.descriptor,
        "input_shape": list(model.arch.input_shape),
        "seed": model.rng_seed,
        "tensors": [[name, list(value.shape)] for name, value in tensors],
        "meta": model.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with Path(path).open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, value in tensors:
            fh.write(np.ascontiguousarray(value, dtype="<f4").tobytes())


def read_header(data: bytes, magic: bytes) -> tuple[dict, int]:
    if data[: len(magic)] != magic:
        raise ValueError(f"bad magic, expected {magic!r}")
    (size,) = struct.unpack_from("<I", data, len(magic))
    start = len(magic) + 4
    return json.loads(data[start : start + size]), start + size


def load_checkpoint(path: str | Path) -> CnnModel:
    data = Path(path).read_bytes()
    header, offset = read_header(data, CHECKPOINT_MAGIC)
    arch = CnnArch(header["arch"], tuple(header["input_shape"]))
    model = init_model(arch, header["seed"])
    values = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape))
        values[name] = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape).astype(np.float32)
        offset += 4 * count
    for i, (layer, p) in enumerate(zip(model.layers, model.params)):
        for key in p:
            p[key] = values[f"{i}.{layer!r}.{key}"]
    model.meta = header.get("meta", {})
    return model
