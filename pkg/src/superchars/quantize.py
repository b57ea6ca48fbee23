"""Post-training fixed-point quantization with power-of-two scales.

Weights become b-bit signed integers; each parametric layer shares one scale
``2**exponent`` covering both its weights and bias. Inference multiplies the
integers back out and accumulates in floating point, so this simulates the
weight quantization of a fixed-point accelerator, not its exact arithmetic.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import CnnArch, CnnModel, init_model, read_header, softmax

FIXED_MAGIC = b"SCFX1"


@dataclass
class FixedPointModel:
    arch: CnnArch
    int_params: list[dict[str, np.ndarray]]
    exponents: list[int | None]
    weight_bits: int
    activation_bits: int | None = None
    meta: dict = field(default_factory=dict)

    def scale(self, layer: int) -> float:
        e = self.exponents[layer]
        return 1.0 if e is None else 2.0**e

    def dequantize(self) -> CnnModel:
        params = [
            {k: v.astype(np.float64) * self.scale(i) for k, v in p.items()}
            for i, p in enumerate(self.int_params)
        ]
        return CnnModel(self.arch, params, meta=dict(self.meta))


def power_of_two_exponent(max_abs: float, bits: int) -> int:
    """Smallest e with max_abs <= (2**(bits-1) - 1) * 2**e."""
    qmax = 2 ** (bits - 1) - 1
    if max_abs == 0:
        return 0
    e = math.ceil(math.log2(max_abs / qmax))
    while max_abs > qmax * 2.0**e:
        e += 1
    while max_abs <= qmax * 2.0 ** (e - 1):
        e -= 1
    return e


def quantize(model: CnnModel, weight_bits: int = 8, activation_bits: int | None = None) -> FixedPointModel:
    if not 4 <= weight_bits <= 16:
        raise ValueError("weight_bits must be in [4, 16]")
    qmax = 2 ** (weight_bits - 1) - 1
    int_params, exponents = [], []
    for p in model.params:
        if not p:
            int_params.append({})
            exponents.append(None)
            continue
        max_abs = max(float(np.max(np.abs(v))) if v.size else 0.0 for v in p.values())
        e = power_of_two_exponent(max_abs, weight_bits)
        scale = 2.0**e
        int_params.append(
            {k: np.clip(np.rint(v.astype(np.float64) / scale), -qmax, qmax).astype(np.int32) for k, v in p.items()}
        )
        exponents.append(e)
    return FixedPointModel(model.arch, int_params, exponents, weight_bits, activation_bits, dict(model.meta))


def _fake_quant(x: np.ndarray, bits: int) -> np.ndarray:
    max_abs = float(np.max(np.abs(x))) if x.size else 0.0
    scale = 2.0 ** power_of_two_exponent(max_abs, bits)
    qmax = 2 ** (bits - 1) - 1
    return np.clip(np.rint(x / scale), -qmax, qmax) * scale


def forward_fixed(fpm: FixedPointModel, image: np.ndarray) -> np.ndarray:
    """Class probabilities computed from the integer weights."""
    single = image.ndim == 3
    x = (image[None] if single else image).astype(np.float64)
    float_model = fpm.dequantize()
    for layer, p in zip(float_model.layers, float_model.params):
        if p and fpm.activation_bits:
            x = _fake_quant(x, fpm.activation_bits)
        x, _ = layer.forward(x, p)
    probs = softmax(x)
    return probs[0] if single else probs


def save_fixed(fpm: FixedPointModel, path: str | Path) -> None:
    """``SCFX1 | u32 header length | JSON header | int16 tensors, little-endian``."""
    tensors = []
    for i, (layer, p) in enumerate(zip(fpm.arch.layers, fpm.int_params)):
        for key, value in p.items():
            tensors.append((f"{i}.{layer!r}.{key}", value))
    header = {
        "arch": fpm.arch.descriptor,
        "input_shape": list(fpm.arch.input_shape),
        "weight_bits": fpm.weight_bits,
        "activation_bits": fpm.activation_bits,
        "exponents": fpm.exponents,
        "tensors": [[name, list(v.shape)] for name, v in tensors],
        "meta": fpm.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with Path(path).open("wb") as fh:
        fh.write(FIXED_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, value in tensors:
            fh.write(value.astype("<i2").tobytes())


def load_fixed(path: str | Path) -> FixedPointModel:
    data = Path(path).read_bytes()
    header, offset = read_header(data, FIXED_MAGIC)
    arch = CnnArch(header["arch"], tuple(header["input_shape"]))
    template = init_model(arch)
    values = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape))
        values[name] = np.frombuffer(data, dtype="<i2", count=count, offset=offset).reshape(shape).astype(np.int32)
        offset += 2 * count
    int_params = [
        {key: values[f"{i}.{layer!r}.{key}"] for key in p}
        for i, (layer, p) in enumerate(zip(template.layers, template.params))
    ]
    return FixedPointModel(
        arch,
        int_params,
        header["exponents"],
        header["weight_bits"],
        header.get("activation_bits"),
        header.get("meta", {}),
    )
