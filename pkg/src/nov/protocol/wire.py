"""Binary wire format.

Frame::

    u32 length of the rest | u8 tag | u32 round id | u16 sender | payload

Integers are little-endian. Group elements are 33-byte compressed points
(identity = 33 zero bytes), scalars 32-byte little-endian. A ciphertext is
``c1 || c2``. Payload layouts, by tag:

=========================  ====================================================
REGISTER_KEY               pk
ROSTER                     u16 k, k x (u16 index, pk)
SHARE_DISTRIBUTION         u32 p, u16 t, p*t points (E per parameter);
                           u16 r, r x (u16 receiver, p x 32 ciphertexts);
                           u32 len, filter submission
ROUTED_SHARES              u16 k, k x (u16 sender, u32 p, p x 32 ciphertexts)
BENIGN_LIST                u16 attempt, u16 k, k x u16
GLOBAL_SHARE               u16 attempt, u32 p, p x (S, O)
COMMITMENT_LIST_REQUEST    u16 attempt
COMMITMENT_LIST_RESPONSE   u16 attempt, u16 k, k x (u16 client, u32 p, u16 t,
                           p*t points)
ACCUSATION                 u16 attempt, u16 accused, u32 param, u16 k,
                           k x (m, A, B, z)
REMOVAL                    u16 client, u16 len, utf-8 reason
ROUND_RESULT               u32 p, p x (X, R)
=========================  ====================================================

Filter submission: ``u32 p, p commitments, p x (c', e, z1, z2, z3),
u8 has_norm [range proof], u16 k, k x (u16 layer, range proof)``.
Range proof: ``u16 n, n bit commitments, e, n x (e0, z0, z1)``.
"""

from __future__ import annotations

import struct

from ..elgamal import Ciphertext, DecryptionProof, CHUNKS_PER_SCALAR
from ..filter import FilterSubmission, SquareLinkProof
from ..group import IDENTITY_BYTES, POINT_BYTES, SCALAR_BYTES, Q, GroupElement, _UNPARSED, scalar_from_bytes
from ..rangeproof import RangeProof
from ..vss import CoeffCommitments
from .messages import (
    Accusation,
    BenignList,
    CommitmentListRequest,
    CommitmentListResponse,
    EncryptedShare,
    Envelope,
    GlobalShare,
    RegisterKey,
    Removal,
    Roster,
    RoundResult,
    RoutedShares,
    ShareDistribution,
    Tag,
)

_HEADER = struct.Struct("<IBIH")


class WireError(ValueError):
    pass


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v: int):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        self.parts.append(struct.pack("<H", v))

    def u32(self, v: int):
        self.parts.append(struct.pack("<I", v))

    def point(self, p: GroupElement):
        self.parts.append(p.to_bytes())

    def scalar(self, x: int):
        self.parts.append((x % Q).to_bytes(SCALAR_BYTES, "little"))

    def raw(self, b: bytes):
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise WireError("truncated message")
        out = self.data[self.pos:end]
        self.pos = end
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def point(self) -> GroupElement:
        return GroupElement.from_bytes(self._take(POINT_BYTES), lazy=True)

    def scalar(self) -> int:
        try:
            return scalar_from_bytes(self._take(SCALAR_BYTES))
        except WireError:
            raise
        except ValueError as exc:
            raise WireError(str(exc)) from None

    def done(self):
        if self.pos != len(self.data):
            raise WireError("trailing bytes after payload")


def _w_ct(w: _Writer, c: Ciphertext):
    w.point(c.c1)
    w.point(c.c2)


def _r_ct(r: _Reader) -> Ciphertext:
    return Ciphertext(r.point(), r.point())


def _w_shares(w: _Writer, shares: list[EncryptedShare]):
    w.u32(len(shares))
    for sh in shares:
        for c in sh.chunks():
            _w_ct(w, c)


def _r_shares(r: _Reader, p: int | None = None) -> list[EncryptedShare]:
    if p is None:
        p = r.u32()
    n = 2 * CHUNKS_PER_SCALAR
    block = r._take(p * n * 2 * POINT_BYTES)
    points = [_lazy_point(block[i:i + POINT_BYTES]) for i in range(0, len(block), POINT_BYTES)]
    cts = [Ciphertext(points[i], points[i + 1]) for i in range(0, len(points), 2)]
    half = CHUNKS_PER_SCALAR
    return [EncryptedShare(tuple(cts[i:i + half]), tuple(cts[i + half:i + n])) for i in range(0, len(cts), n)]


def _lazy_point(enc: bytes) -> GroupElement:
    if enc == IDENTITY_BYTES:
        return GroupElement.identity()
    return GroupElement(_UNPARSED, enc)


def _w_comm_lists(w: _Writer, comms: list[CoeffCommitments]):
    w.u32(len(comms))
    w.u16(comms[0].t if comms else 0)
    for cc in comms:
        for E in cc.E:
            w.point(E)


def _r_comm_lists(r: _Reader) -> list[CoeffCommitments]:
    p, t = r.u32(), r.u16()
    return [CoeffCommitments(tuple(r.point() for _ in range(t))) for _ in range(p)]


def _w_range(w: _Writer, proof: RangeProof):
    w.u16(len(proof.bits))
    for B in proof.bits:
        w.point(B)
    w.scalar(proof.e)
    for e0, z0, z1 in proof.responses:
        w.scalar(e0)
        w.scalar(z0)
        w.scalar(z1)


def _r_range(r: _Reader) -> RangeProof:
    n = r.u16()
    bits = tuple(r.point() for _ in range(n))
    e = r.scalar()
    responses = tuple((r.scalar(), r.scalar(), r.scalar()) for _ in range(n))
    return RangeProof(bits, e, responses)


def encode_submission(sub: FilterSubmission) -> bytes:
    w = _Writer()
    w.u32(len(sub.param_comms))
    for c in sub.param_comms:
        w.point(c)
    for sl in sub.square_links:
        w.point(sl.c_prime)
        for x in (sl.e, sl.z1, sl.z2, sl.z3):
            w.scalar(x)
    if sub.norm_proof is None:
        w.u8(0)
    else:
        w.u8(1)
        _w_range(w, sub.norm_proof)
    w.u16(len(sub.layer_sign_proofs))
    for l in sorted(sub.layer_sign_proofs):
        w.u16(l)
        _w_range(w, sub.layer_sign_proofs[l])
    return w.getvalue()


def _r_submission(r: _Reader) -> FilterSubmission:
    p = r.u32()
    comms = [r.point() for _ in range(p)]
    links = [SquareLinkProof(r.point(), r.scalar(), r.scalar(), r.scalar(), r.scalar()) for _ in range(p)]
    norm = _r_range(r) if r.u8() else None
    layers = {}
    for _ in range(r.u16()):
        l = r.u16()
        layers[l] = _r_range(r)
    return FilterSubmission(comms, links, norm, layers)


def decode_submission(data: bytes) -> FilterSubmission:
    r = _Reader(data)
    sub = _r_submission(r)
    r.done()
    return sub


def _encode_body(w: _Writer, body) -> None:
    if isinstance(body, RegisterKey):
        w.point(body.pk)
    elif isinstance(body, Roster):
        w.u16(len(body.entries))
        for idx, pk in body.entries:
            w.u16(idx)
            w.point(pk)
    elif isinstance(body, ShareDistribution):
        _w_comm_lists(w, body.comms)
        w.u16(len(body.ciphertexts))
        for v in sorted(body.ciphertexts):
            w.u16(v)
            shares = body.ciphertexts[v]
            if len(shares) != len(body.comms):
                raise WireError("ciphertext count does not match parameter count")
            for sh in shares:
                for c in sh.chunks():
                    _w_ct(w, c)
        sub = encode_submission(body.submission)
        w.u32(len(sub))
        w.raw(sub)
    elif isinstance(body, RoutedShares):
        w.u16(len(body.shares))
        for u in sorted(body.shares):
            w.u16(u)
            _w_shares(w, body.shares[u])
    elif isinstance(body, BenignList):
        w.u16(body.attempt)
        w.u16(len(body.members))
        for u in body.members:
            w.u16(u)
    elif isinstance(body, GlobalShare):
        w.u16(body.attempt)
        w.u32(len(body.shares))
        for S, O in body.shares:
            w.scalar(S)
            w.scalar(O)
    elif isinstance(body, CommitmentListRequest):
        w.u16(body.attempt)
    elif isinstance(body, CommitmentListResponse):
        w.u16(body.attempt)
        w.u16(len(body.comms))
        for u in sorted(body.comms):
            w.u16(u)
            _w_comm_lists(w, body.comms[u])
    elif isinstance(body, Accusation):
        w.u16(body.attempt)
        w.u16(body.accused)
        w.u32(body.param)
        w.u16(len(body.proofs))
        for pf in body.proofs:
            w.point(pf.m)
            w.point(pf.A)
            w.point(pf.B)
            w.scalar(pf.z)
    elif isinstance(body, Removal):
        reason = body.reason.encode()
        w.u16(body.client)
        w.u16(len(reason))
        w.raw(reason)
    elif isinstance(body, RoundResult):
        w.u32(len(body.X))
        for X, R in zip(body.X, body.R):
            w.scalar(X)
            w.scalar(R)
    else:
        raise WireError(f"unknown message body {type(body).__name__}")


def _decode_body(tag: Tag, r: _Reader):
    if tag == Tag.REGISTER_KEY:
        return RegisterKey(r.point())
    if tag == Tag.ROSTER:
        return Roster([(r.u16(), r.point()) for _ in range(r.u16())])
    if tag == Tag.SHARE_DISTRIBUTION:
        comms = _r_comm_lists(r)
        cts = {}
        for _ in range(r.u16()):
            v = r.u16()
            cts[v] = _r_shares(r, len(comms))
        sub_len = r.u32()
        sub = decode_submission(r._take(sub_len))
        return ShareDistribution(cts, comms, sub)
    if tag == Tag.ROUTED_SHARES:
        shares = {}
        for _ in range(r.u16()):
            u = r.u16()
            shares[u] = _r_shares(r)
        return RoutedShares(shares)
    if tag == Tag.BENIGN_LIST:
        attempt = r.u16()
        return BenignList(attempt, [r.u16() for _ in range(r.u16())])
    if tag == Tag.GLOBAL_SHARE:
        attempt = r.u16()
        return GlobalShare(attempt, [(r.scalar(), r.scalar()) for _ in range(r.u32())])
    if tag == Tag.COMMITMENT_LIST_REQUEST:
        return CommitmentListRequest(r.u16())
    if tag == Tag.COMMITMENT_LIST_RESPONSE:
        attempt = r.u16()
        comms = {}
        for _ in range(r.u16()):
            u = r.u16()
            comms[u] = _r_comm_lists(r)
        return CommitmentListResponse(attempt, comms)
    if tag == Tag.ACCUSATION:
        attempt, accused, param = r.u16(), r.u16(), r.u32()
        proofs = [DecryptionProof(r.point(), r.point(), r.point(), r.scalar()) for _ in range(r.u16())]
        return Accusation(attempt, accused, param, proofs)
    if tag == Tag.REMOVAL:
        client = r.u16()
        return Removal(client, r._take(r.u16()).decode())
    if tag == Tag.ROUND_RESULT:
        pairs = [(r.scalar(), r.scalar()) for _ in range(r.u32())]
        return RoundResult([x for x, _ in pairs], [o for _, o in pairs])
    raise WireError(f"unknown tag {tag}")


def encode(env: Envelope) -> bytes:
    w = _Writer()
    _encode_body(w, env.body)
    payload = w.getvalue()
    header = _HEADER.pack(_HEADER.size - 4 + len(payload), int(env.tag), env.round_id, env.sender)
    return header + payload


def decode(data: bytes) -> Envelope:
    if len(data) < _HEADER.size:
        raise WireError("truncated header")
    length, tag, round_id, sender = _HEADER.unpack_from(data)
    if length != len(data) - 4:
        raise WireError("length prefix does not match frame size")
    try:
        tag = Tag(tag)
    except ValueError:
        raise WireError(f"unknown tag {tag}") from None
    r = _Reader(data[_HEADER.size:])
    body = _decode_body(tag, r)
    r.done()
    return Envelope(round_id, sender, body)
