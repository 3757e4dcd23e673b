"""ElGamal in the form ``c = (pk^r, g^r m)`` with a verifiable-decryption proof.

Scalars are carried as 16 little-endian 16-bit chunks, each encrypted as
``g^chunk`` under independent randomness, so a recipient (or the server,
after an accusation) can recover the numeric value with a table lookup.

Decryption-proof verification checks the discrete-log equality
``log_g(pk) == log_{c2/m}(c1)``::

    pk^e * A == g^z   and   c1^e * B == (c2 / m)^z

The first conjunct is written with ``pk^e`` (not ``g^e``): that is the only
form consistent with the response ``z = sk*e + a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

from .group import (
    Q,
    FixedBase,
    GroupElement,
    InvalidPoint,
    Scalar,
    Transcript,
    fixed_base,
    g_pow,
    gens,
    inv,
    mul_pow_encodings,
    random_scalar,
)

CHUNK_BITS = 16
CHUNKS_PER_SCALAR = 16
CHUNK_MASK = (1 << CHUNK_BITS) - 1


class DecodeError(ValueError):
    """A plaintext chunk is not ``g^k`` for any ``k < 2^16``."""


@dataclass(frozen=True)
class Keypair:
    sk: Scalar
    pk: GroupElement
    _neg_inv_sk: Scalar = field(default=0, repr=False, compare=False)


class Ciphertext(NamedTuple):
    c1: GroupElement
    c2: GroupElement


@dataclass(frozen=True)
class DecryptionProof:
    m: GroupElement
    A: GroupElement
    B: GroupElement
    z: Scalar


@dataclass(frozen=True)
class ShareEncoding:
    chunks: tuple[GroupElement, ...]


def keygen(rng=None) -> Keypair:
    sk = random_scalar(rng, nonzero=True)
    return Keypair(sk, g_pow(sk), (-inv(sk)) % Q)


def keypair_from_secret(sk: Scalar) -> Keypair:
    if sk % Q == 0:
        raise ValueError("secret key must be nonzero")
    return Keypair(sk % Q, g_pow(sk), (-inv(sk)) % Q)


def encrypt(pk: GroupElement, m: GroupElement, r: Scalar | None = None, rng=None) -> Ciphertext:
    if pk.is_identity:
        raise ValueError("public key is the identity")
    if r is None:
        r = random_scalar(rng)
    return Ciphertext(pk ** r, g_pow(r) * m)


def decrypt(sk: Scalar, c: Ciphertext) -> GroupElement:
    """``c2 * c1^(-1/sk)``."""
    return c.c2 * (c.c1 ** ((-inv(sk)) % Q))


@lru_cache(maxsize=1)
def dlog_table() -> dict[bytes, int]:
    """Encoding of ``g^k`` -> ``k`` for every 16-bit ``k``."""
    g = gens().g
    table = {}
    cur = GroupElement.identity()
    for k in range(1 << CHUNK_BITS):
        table[cur.to_bytes()] = k
        cur = cur * g
    return table


def _chunks(s: Scalar) -> list[int]:
    s %= Q
    return [(s >> (CHUNK_BITS * k)) & CHUNK_MASK for k in range(CHUNKS_PER_SCALAR)]


def encode_scalar(s: Scalar) -> ShareEncoding:
    return ShareEncoding(tuple(g_pow(c) for c in _chunks(s)))


def decode_points(points: Sequence[GroupElement]) -> Scalar:
    return _decode_encodings([p.to_bytes() for p in points])


def _decode_encodings(encodings: Sequence[bytes]) -> Scalar:
    if len(encodings) != CHUNKS_PER_SCALAR:
        raise DecodeError(f"expected {CHUNKS_PER_SCALAR} chunks, got {len(encodings)}")
    table = dlog_table()
    value = 0
    for k, enc in enumerate(encodings):
        try:
            chunk = table[enc]
        except KeyError:
            raise DecodeError(f"chunk {k} is outside the 16-bit table") from None
        value |= chunk << (CHUNK_BITS * k)
    if value >= Q:
        raise DecodeError("decoded value is not a canonical scalar")
    return value


def decode_scalar(e: ShareEncoding) -> Scalar:
    return decode_points(e.chunks)


def encrypt_scalar(pk: GroupElement | FixedBase, s: Scalar, rng=None) -> tuple[Ciphertext, ...]:
    """Encrypt the chunk encoding of ``s``; one fresh ``r`` per chunk.

    Uses ``g^r * g^chunk = g^(r + chunk)`` so each chunk costs two fixed-base
    exponentiations.
    """
    table = pk if isinstance(pk, FixedBase) else fixed_base(pk)
    if table.base.is_identity:
        raise ValueError("public key is the identity")
    g_table = gens().g_table
    out = []
    for chunk in _chunks(s):
        r = random_scalar(rng)
        out.append(Ciphertext(table.pow(r), g_table.pow(r + chunk)))
    return tuple(out)


def decrypt_points(keypair: Keypair, cts: Sequence[Ciphertext]) -> list[GroupElement]:
    e = keypair._neg_inv_sk or (-inv(keypair.sk)) % Q
    return [c2 * (c1 ** e) for c1, c2 in cts]


def decrypt_scalar(keypair: Keypair, cts: Sequence[Ciphertext]) -> Scalar:
    e = keypair._neg_inv_sk or (-inv(keypair.sk)) % Q
    return _decode_encodings(mul_pow_encodings(((c1, c2) for c1, c2 in cts), e))


def _absorb(t: Transcript, pk: GroupElement, m: GroupElement, c: Ciphertext, A: GroupElement, B: GroupElement) -> Scalar:
    # order: g, pk, m, c1, c2, A, B
    t.append_point(b"g", gens().g)
    t.append_point(b"pk", pk)
    t.append_point(b"m", m)
    t.append_point(b"c1", c.c1)
    t.append_point(b"c2", c.c2)
    t.append_point(b"A", A)
    t.append_point(b"B", B)
    return t.challenge(b"e")


def prove_decryption(
    keypair: Keypair, m: GroupElement, c: Ciphertext, transcript: Transcript | None = None, rng=None
) -> DecryptionProof:
    t = transcript if transcript is not None else Transcript(b"nov/decryption-proof")
    a = random_scalar(rng)
    A = g_pow(a)
    B = (c.c2 / m) ** a
    e = _absorb(t, keypair.pk, m, c, A, B)
    return DecryptionProof(m, A, B, (keypair.sk * e + a) % Q)


def verify_decryption(
    pk: GroupElement, c: Ciphertext, proof: DecryptionProof, transcript: Transcript | None = None
) -> bool:
    t = transcript if transcript is not None else Transcript(b"nov/decryption-proof")
    try:
        e = _absorb(t, pk, proof.m, c, proof.A, proof.B)
        if pk ** e * proof.A != g_pow(proof.z):
            return False
        return c.c1 ** e * proof.B == (c.c2 / proof.m) ** proof.z
    except InvalidPoint:
        return False
