"""Fixed-point quantization of real-valued updates and embedding into the field."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .group import Q, Scalar


@dataclass(frozen=True)
class QuantConfig:
    frac_bits: int = 16
    value_bits: int = 24
    norm_bits: int = 64

    def check_layer_length(self, length: int) -> None:
        """Inner products over a layer must fit the range-proof width."""
        need = 2 * self.value_bits + max(0, math.ceil(math.log2(max(length, 1))))
        if need > self.norm_bits or self.norm_bits > 64:
            raise ValueError(
                f"layer of length {length} needs {need} bits, range proofs carry {self.norm_bits}"
            )


@dataclass
class QuantizedUpdate:
    layers: list[list[int]]
    shape: list[int] = field(default_factory=list)
    clamped: int = 0

    def __post_init__(self):
        if not self.shape:
            self.shape = [len(layer) for layer in self.layers]

    def flat(self) -> list[int]:
        return [v for layer in self.layers for v in layer]

    def __len__(self) -> int:
        return sum(self.shape)


def quantize(update: Sequence[Sequence[float]], cfg: QuantConfig = QuantConfig()) -> QuantizedUpdate:
    """``round_half_even(v * 2^f)`` clamped to ``(-2^b, 2^b)``; clamps are counted."""
    bound = (1 << cfg.value_bits) - 1
    layers, clamped = [], 0
    for layer in update:
        arr = np.asarray(layer, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("update contains non-finite values")
        scaled = np.rint(np.ldexp(arr, cfg.frac_bits))
        clamped += int(np.count_nonzero(np.abs(scaled) > bound))
        layers.append([int(v) for v in np.clip(scaled, -bound, bound)])
    return QuantizedUpdate(layers, clamped=clamped)


def dequantize(q: QuantizedUpdate | Sequence[Sequence[int]], cfg: QuantConfig = QuantConfig()) -> list[list[float]]:
    layers = q.layers if isinstance(q, QuantizedUpdate) else q
    return [[math.ldexp(v, -cfg.frac_bits) for v in layer] for layer in layers]


def embed(v: int, bits: int = QuantConfig.value_bits) -> Scalar:
    """Signed integer -> field element; negatives become ``q - |v|``."""
    if abs(v) >= 1 << bits:
        raise OverflowError(f"|{v}| does not fit in {bits} bits")
    return v % Q


def unembed(x: Scalar, bits: int = QuantConfig.value_bits) -> int:
    x %= Q
    if x < 1 << bits:
        return x
    if x > Q - (1 << bits):
        return x - Q
    raise OverflowError("field element is not a small signed integer")


def norm_threshold(t_m, cfg: QuantConfig = QuantConfig()) -> int:
    """Integer bound ``floor((t_m * 2^f)^2)`` on the quantized squared L2 norm."""
    t = Fraction(str(t_m))
    if t <= 0:
        raise ValueError("t_m must be positive")
    T = math.floor((t * (1 << cfg.frac_bits)) ** 2)
    if T >= 1 << cfg.norm_bits:
        raise ValueError(f"threshold {T} exceeds the {cfg.norm_bits}-bit range proof")
    return T
