"""Round configuration and helpers shared by the server and clients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..fixed_point import QuantConfig, norm_threshold, unembed
from ..group import Transcript


class ProtocolAbort(RuntimeError):
    """The round cannot complete."""

    def __init__(self, phase: str, cause: str):
        super().__init__(f"{phase}: {cause}")
        self.phase = phase
        self.cause = cause


@dataclass
class RoundConfig:
    n: int
    t: int
    shape: list[int]
    t_m: float = 1.0
    t_s: float = 0.4
    quant: QuantConfig = field(default_factory=QuantConfig)

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise ValueError(f"need 1 <= t <= n, got t={self.t}, n={self.n}")
        if not self.shape or any(k <= 0 for k in self.shape):
            raise ValueError("layer shape must be a nonempty list of positive sizes")
        for k in self.shape:
            self.quant.check_layer_length(k)
        self.T = norm_threshold(self.t_m, self.quant)

    @property
    def p(self) -> int:
        return sum(self.shape)


def accusation_transcript(round_id: int, accuser: int, accused: int, param: int) -> Transcript:
    """Binds all 32 chunk proofs of one accusation to who accuses whom, where."""
    t = Transcript(b"nov/accusation")
    t.append_int(b"round", round_id)
    t.append_int(b"accuser", accuser)
    t.append_int(b"accused", accused)
    t.append_int(b"param", param)
    return t


def apply_global_update(
    previous: Sequence[Sequence[float]],
    X: Sequence[int],
    n_benign: int,
    cfg: QuantConfig = QuantConfig(),
) -> list[list[float]]:
    """Add the average of the aggregated quantized updates to the previous model."""
    if n_benign < 1:
        raise ValueError("no clients were aggregated")
    p = sum(len(layer) for layer in previous)
    if p != len(X):
        raise ValueError(f"model has {p} parameters, aggregate has {len(X)}")
    bits = cfg.value_bits + n_benign.bit_length()
    scale = float(1 << cfg.frac_bits) * n_benign
    out, pos = [], 0
    for layer in previous:
        new = []
        for w in layer:
            new.append(w + unembed(X[pos], bits) / scale)
            pos += 1
        out.append(new)
    return out
