"""Prime-order group arithmetic, Pedersen commitments and Fiat-Shamir transcripts.

The group is secp256k1 (prime order, cofactor 1), backed by libsecp256k1
through coincurve's cffi bindings. Elements are written multiplicatively to
match the protocol notation: ``a * b`` is the group operation, ``a ** k``
exponentiation and ``~a`` the inverse.

Wire encodings:

* group element -- 33-byte SEC1 compressed point; the identity is 33 zero bytes
* scalar -- 32-byte little-endian integer in ``[0, q)``
"""

from __future__ import annotations

import hashlib
import secrets
from functools import lru_cache
from typing import Iterable, Sequence

from coincurve._libsecp256k1 import ffi, lib
from coincurve.context import GLOBAL_CONTEXT

_CTX = GLOBAL_CONTEXT.ctx
_COMPRESSED = 258  # SECP256K1_EC_COMPRESSED

#: Order of the group (and modulus of the scalar field).
Q = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
#: Base field prime of secp256k1 (only needed for hash-to-group).
FIELD_P = 2**256 - 2**32 - 977

POINT_BYTES = 33
SCALAR_BYTES = 32
IDENTITY_BYTES = bytes(POINT_BYTES)

Scalar = int

_sysrand = secrets.SystemRandom()


class InvalidPoint(ValueError):
    pass


def random_scalar(rng=None, nonzero: bool = False) -> Scalar:
    """Uniform scalar. ``rng`` is any ``random.Random``-like object; seeded
    generators are for reproducible simulation only."""
    rng = rng or _sysrand
    return rng.randrange(1, Q) if nonzero else rng.randrange(Q)


def scalar_to_bytes(x: Scalar) -> bytes:
    return (x % Q).to_bytes(SCALAR_BYTES, "little")


def scalar_from_bytes(data: bytes) -> Scalar:
    if len(data) != SCALAR_BYTES:
        raise ValueError("scalar encoding must be 32 bytes")
    x = int.from_bytes(data, "little")
    if x >= Q:
        raise ValueError("non-canonical scalar encoding")
    return x


def inv(x: Scalar) -> Scalar:
    if x % Q == 0:
        raise ZeroDivisionError("zero has no inverse mod q")
    return pow(x, -1, Q)


_UNPARSED = object()


def _new_raw():
    return ffi.new("secp256k1_pubkey *")


def _combine_raw(raws: list):
    """Sum of raw points; None when the sum is the identity."""
    if not raws:
        return None
    if len(raws) == 1:
        return raws[0]
    out = _new_raw()
    if not lib.secp256k1_ec_pubkey_combine(_CTX, out, ffi.new("secp256k1_pubkey *[]", raws), len(raws)):
        return None
    return out


class GroupElement:
    """An element of the group. Immutable.

    Elements decoded from the wire keep only their bytes until first use, so
    large messages whose contents are never touched cost almost nothing.
    """

    __slots__ = ("_raw", "_enc")

    def __init__(self, raw=None, enc: bytes | None = None):
        # raw: cffi secp256k1_pubkey*, None for identity, or _UNPARSED
        self._raw = raw
        self._enc = enc

    @classmethod
    def identity(cls) -> "GroupElement":
        return _IDENTITY

    @classmethod
    def from_bytes(cls, data: bytes, lazy: bool = False) -> "GroupElement":
        data = bytes(data)
        if len(data) != POINT_BYTES:
            raise InvalidPoint("point encoding must be 33 bytes")
        if data == IDENTITY_BYTES:
            return _IDENTITY
        el = cls(_UNPARSED, data)
        if not lazy:
            el._point()
        return el

    def _point(self):
        raw = self._raw
        if raw is _UNPARSED:
            raw = _new_raw()
            if not lib.secp256k1_ec_pubkey_parse(_CTX, raw, self._enc, POINT_BYTES):
                raise InvalidPoint(f"not a curve point: {self._enc.hex()}")
            self._raw = raw
        return raw

    def to_bytes(self) -> bytes:
        if self._enc is None:
            raw = self._raw
            if raw is None:
                self._enc = IDENTITY_BYTES
            else:
                out = ffi.new("unsigned char[33]")
                outlen = ffi.new("size_t *", POINT_BYTES)
                lib.secp256k1_ec_pubkey_serialize(_CTX, out, outlen, raw, _COMPRESSED)
                self._enc = bytes(out)
        return self._enc

    @property
    def is_identity(self) -> bool:
        return self._raw is None

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        if not isinstance(other, GroupElement):
            return NotImplemented
        return product((self, other))

    def __truediv__(self, other: "GroupElement") -> "GroupElement":
        return product((self, ~other))

    def __invert__(self) -> "GroupElement":
        raw = self._point()
        if raw is None:
            return self
        out = _new_raw()
        ffi.memmove(out, raw, 64)
        lib.secp256k1_ec_pubkey_negate(_CTX, out)
        return GroupElement(out)

    def __pow__(self, k: int) -> "GroupElement":
        k %= Q
        raw = self._point()
        if k == 0 or raw is None:
            return _IDENTITY
        if k == 1:
            return self
        out = _new_raw()
        ffi.memmove(out, raw, 64)
        lib.secp256k1_ec_pubkey_tweak_mul(_CTX, out, k.to_bytes(32, "big"))
        return GroupElement(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"GroupElement({self.to_bytes().hex()[:16]}...)"


_IDENTITY = GroupElement(None, IDENTITY_BYTES)


def product(elements: Iterable[GroupElement]) -> GroupElement:
    """Group product of many elements with a single normalisation."""
    raws = [r for r in (e._point() for e in elements) if r is not None]
    raw = _combine_raw(raws)
    return _IDENTITY if raw is None else GroupElement(raw)


def mul_pow_encodings(pairs: Iterable[tuple[GroupElement, GroupElement]], k: Scalar) -> list[bytes]:
    """Encodings of ``b * a^k`` for each ``(a, b)``, reusing buffers (bulk decryption)."""
    k %= Q
    kb = k.to_bytes(32, "big")
    tmp = _new_raw()
    out = _new_raw()
    arr = ffi.new("secp256k1_pubkey *[2]")
    buf = ffi.new("unsigned char[33]")
    outlen = ffi.new("size_t *")
    res = []
    for a, b in pairs:
        ra, rb = a._point(), b._point()
        if ra is None or k == 0:
            res.append(b.to_bytes())
            continue
        ffi.memmove(tmp, ra, 64)
        lib.secp256k1_ec_pubkey_tweak_mul(_CTX, tmp, kb)
        if rb is None:
            src = tmp
        else:
            arr[0], arr[1] = tmp, rb
            if not lib.secp256k1_ec_pubkey_combine(_CTX, out, arr, 2):
                res.append(IDENTITY_BYTES)
                continue
            src = out
        outlen[0] = POINT_BYTES
        lib.secp256k1_ec_pubkey_serialize(_CTX, buf, outlen, src, _COMPRESSED)
        res.append(ffi.buffer(buf)[:])
    return res


class FixedBase:
    """Byte-window comb table for repeated exponentiation of one base.

    Row ``i`` holds ``base^(j * 256^i)`` for ``j`` in 1..255, so ``base^k`` is a
    single combine of at most 32 table entries.
    """

    __slots__ = ("base", "_rows")

    def __init__(self, base: GroupElement):
        self.base = base
        rows = []
        cur = base._point()
        if cur is not None:
            for _ in range(32):
                row = [None, cur]
                for _ in range(254):
                    row.append(_combine_raw([row[-1], cur]))
                rows.append(row)
                cur = _combine_raw([row[255], cur])
        self._rows = rows

    def raw_terms(self, k: int) -> list:
        k %= Q
        if not self._rows or k == 0:
            return []
        return [row[b] for row, b in zip(self._rows, k.to_bytes(32, "little")) if b]

    def pow(self, k: int) -> GroupElement:
        raw = _combine_raw(self.raw_terms(k))
        return _IDENTITY if raw is None else GroupElement(raw)


@lru_cache(maxsize=128)
def _fixed_base_for(enc: bytes) -> FixedBase:
    return FixedBase(GroupElement.from_bytes(enc))


def fixed_base(base: GroupElement) -> FixedBase:
    """Shared comb table for ``base`` (tables are public data, cached per process)."""
    return _fixed_base_for(base.to_bytes())


def multi_pow(terms: Sequence[tuple[FixedBase, int]], extra: Sequence[GroupElement] = ()) -> GroupElement:
    """``prod(base_i ^ k_i) * prod(extra)`` over fixed bases, in one combine."""
    raws = []
    for table, k in terms:
        raws.extend(table.raw_terms(k))
    for e in extra:
        r = e._point()
        if r is not None:
            raws.append(r)
    raw = _combine_raw(raws)
    return _IDENTITY if raw is None else GroupElement(raw)


def hash_to_group(label: bytes) -> GroupElement:
    """Try-and-increment map from a label to a point with unknown discrete log."""
    ctr = 0
    while True:
        digest = hashlib.sha256(b"nov/hash-to-group/" + label + ctr.to_bytes(4, "big")).digest()
        if int.from_bytes(digest, "big") < FIELD_P:
            try:
                return GroupElement.from_bytes(b"\x02" + digest)
            except InvalidPoint:
                pass
        ctr += 1


class PedersenGens:
    """The fixed generator pair ``(g, h)`` with comb tables attached."""

    def __init__(self, g: GroupElement, h: GroupElement):
        self.g = g
        self.h = h
        self.g_table = fixed_base(g)
        self.h_table = fixed_base(h)

    def commit(self, x: Scalar, r: Scalar) -> GroupElement:
        return multi_pow(((self.g_table, x), (self.h_table, r)))


_GENS: PedersenGens | None = None


def gens() -> PedersenGens:
    global _GENS
    if _GENS is None:
        _GENS = PedersenGens(hash_to_group(b"nov/g"), hash_to_group(b"nov/h"))
    return _GENS


def commit(x: Scalar, r: Scalar) -> GroupElement:
    """Pedersen commitment ``g^x h^r``."""
    return gens().commit(x, r)


def g_pow(k: Scalar) -> GroupElement:
    return gens().g_table.pow(k)


def h_pow(k: Scalar) -> GroupElement:
    return gens().h_table.pow(k)


def msm(scalars: Sequence[Scalar], points: Sequence[GroupElement]) -> GroupElement:
    """``prod(points[i] ^ scalars[i])``."""
    if len(scalars) != len(points):
        raise ValueError(f"msm length mismatch: {len(scalars)} scalars, {len(points)} points")
    return product(p ** k for k, p in zip(scalars, points))


class Transcript:
    """Domain-separated running SHA-512 transcript for Fiat-Shamir challenges.

    Every append is framed as ``len(label) || label || len(data) || data``
    so distinct message sequences never collide by concatenation.
    """

    def __init__(self, label: bytes):
        self._h = hashlib.sha512(b"nov/transcript/v1")
        self.append(b"dom-sep", label)

    def append(self, label: bytes, data: bytes) -> None:
        self._h.update(len(label).to_bytes(4, "little") + label + len(data).to_bytes(4, "little") + data)

    def append_point(self, label: bytes, p: GroupElement) -> None:
        self.append(label, p.to_bytes())

    def append_scalar(self, label: bytes, x: Scalar) -> None:
        self.append(label, scalar_to_bytes(x))

    def append_int(self, label: bytes, v: int) -> None:
        self.append(label, v.to_bytes(8, "little", signed=True))

    def challenge(self, label: bytes) -> Scalar:
        self.append(b"challenge", label)
        digest = self._h.copy().digest()
        self._h.update(digest)
        return int.from_bytes(digest, "little") % Q

    def copy(self) -> "Transcript":
        t = Transcript.__new__(Transcript)
        t._h = self._h.copy()
        return t


def challenge(transcript: Transcript, label: bytes) -> Scalar:
    return transcript.challenge(label)
