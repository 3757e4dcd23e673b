"""Byzantine client behaviors.

Update behaviors rewrite the real-valued local update before it is quantized
and committed. Protocol behaviors are :class:`~nov.protocol.Client`
subclasses that perturb exactly one kind of message. ``Dropout`` is applied
by the message bus.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import ClassVar, Sequence

import numpy as np

from ..elgamal import CHUNK_BITS, CHUNK_MASK, Ciphertext
from ..group import Q, g_pow, hash_to_group, random_scalar
from ..protocol.client import Client
from ..protocol.messages import Accusation, CommitmentListResponse, EncryptedShare
from .synth import l2_norm

Model = list[list[float]]


def _scaled(update: Sequence[Sequence[float]], factor: float) -> Model:
    return [(np.asarray(layer, dtype=np.float64) * factor).tolist() for layer in update]


@dataclass
class Behavior:
    name: ClassVar[str] = ""

    def transform_update(self, update: Model, reference: Model, t_m: float) -> Model:
        return update

    def client_class(self) -> type[Client]:
        return Client

    def to_dict(self) -> dict:
        return {"behavior": self.name, **asdict(self)}


@dataclass
class FlipSignUpdate(Behavior):
    """Submit the negated update: every layer points against the reference."""

    name: ClassVar[str] = "FlipSignUpdate"

    def transform_update(self, update, reference, t_m):
        return _scaled(update, -1.0)


@dataclass
class OversizedUpdate(Behavior):
    """Rescale the update to ``factor * t_m`` in L2 norm."""

    name: ClassVar[str] = "OversizedUpdate"
    factor: float = 3.0

    def transform_update(self, update, reference, t_m):
        return _scaled(update, self.factor * t_m / l2_norm(update))


@dataclass
class ProjectedPoison(Behavior):
    """Poisoned (reversed) update projected back inside the public norm bound."""

    name: ClassVar[str] = "ProjectedPoison"
    boost: float = 10.0
    margin: float = 0.95

    def transform_update(self, update, reference, t_m):
        poisoned = _scaled(update, -self.boost)
        norm = l2_norm(poisoned)
        if norm > self.margin * t_m:
            poisoned = _scaled(poisoned, self.margin * t_m / norm)
        return poisoned


@dataclass
class WrongShareToVictim(Behavior):
    """Corrupt one chunk of the ``s`` share sent to ``victim`` for ``param``.

    The chunk is re-encrypted as ``chunk + 1`` (still decodable), or with
    ``garble`` its plaintext is replaced by a point outside the chunk range.
    """

    name: ClassVar[str] = "WrongShareToVictim"
    victim: int = 1
    chunk: int = 0
    param: int = 0
    garble: bool = False

    def client_class(self):
        behavior = self

        class WrongShareClient(Client):
            def _hook_encrypt(self, receiver, shares, pk_table):
                out = super()._hook_encrypt(receiver, shares, pk_table)
                if receiver != behavior.victim:
                    return out
                enc = out[behavior.param]
                s = list(enc.s)
                if behavior.garble:
                    c1, c2 = s[behavior.chunk]
                    s[behavior.chunk] = Ciphertext(c1, c2 * hash_to_group(b"garbled chunk"))
                else:
                    value = shares[behavior.param].s >> (CHUNK_BITS * behavior.chunk) & CHUNK_MASK
                    r = random_scalar(self.rng)
                    s[behavior.chunk] = Ciphertext(pk_table.pow(r), g_pow(r + ((value + 1) & CHUNK_MASK)))
                out[behavior.param] = EncryptedShare(tuple(s), enc.o)
                return out

        return WrongShareClient


@dataclass
class WrongGlobalShare(Behavior):
    """Report ``S + 1`` for ``param`` in the global share."""

    name: ClassVar[str] = "WrongGlobalShare"
    param: int = 0

    def client_class(self):
        behavior = self

        class WrongGlobalShareClient(Client):
            def _hook_global_share(self, pairs):
                pairs = list(pairs)
                S, O = pairs[behavior.param]
                pairs[behavior.param] = ((S + 1) % Q, O)
                return pairs

        return WrongGlobalShareClient


@dataclass
class FalseAccusation(Behavior):
    """Force step x with a bad global share, then accuse an honest ``target``.

    The accusation carries valid decryption proofs of the genuine share, so
    it is the share check that exposes the accuser.
    """

    name: ClassVar[str] = "FalseAccusation"
    target: int = 1
    param: int = 0

    def client_class(self):
        behavior = self

        class FalseAccusationClient(Client):
            def _hook_global_share(self, pairs):
                pairs = list(pairs)
                S, O = pairs[behavior.param]
                pairs[behavior.param] = ((S + 1) % Q, O)
                return pairs

            def _hook_extra_accusations(self, body: CommitmentListResponse) -> list[Accusation]:
                if behavior.target not in self.received:
                    return []
                return [self._accuse(behavior.target, behavior.param)]

        return FalseAccusationClient


PHASES = ("roster", "distribution", "reconstruction", "identification", "reexecution")


@dataclass
class Dropout(Behavior):
    """Withhold this client's messages in ``phase``.

    ``silent`` never sends; ``late`` sends after ``delay`` simulated seconds,
    which the server ignores once the phase timeout has passed.
    """

    name: ClassVar[str] = "Dropout"
    phase: str = "reconstruction"
    mode: str = "silent"
    delay: float = float("inf")

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}; expected one of {PHASES}")
        if self.mode not in ("silent", "late"):
            raise ValueError("dropout mode must be 'silent' or 'late'")

    def to_dict(self) -> dict:
        d = super().to_dict()
        if d["delay"] == float("inf"):
            d.pop("delay")
        return d


BEHAVIORS: dict[str, type[Behavior]] = {
    cls.name: cls
    for cls in (
        FlipSignUpdate,
        OversizedUpdate,
        ProjectedPoison,
        WrongShareToVictim,
        WrongGlobalShare,
        FalseAccusation,
        Dropout,
    )
}


def behavior_from_dict(d: dict) -> Behavior:
    d = dict(d)
    name = d.pop("behavior", None)
    if name not in BEHAVIORS:
        raise ValueError(f"unknown adversary behavior {name!r}")
    cls = BEHAVIORS[name]
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"{name} does not take {sorted(unknown)}")
    return cls(**d)
