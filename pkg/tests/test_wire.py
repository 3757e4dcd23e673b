import random
import struct

import pytest

from nov.elgamal import encrypt_scalar, keygen, prove_decryption, decrypt_points
from nov.filter import build_submission
from nov.fixed_point import QuantizedUpdate, norm_threshold
from nov.group import Q, GroupElement, InvalidPoint, g_pow, random_scalar
from nov.protocol import Envelope, Tag, WireError, accusation_transcript, decode, encode
from nov.protocol.messages import (
    Accusation,
    BenignList,
    CommitmentListRequest,
    CommitmentListResponse,
    EncryptedShare,
    GlobalShare,
    RegisterKey,
    Removal,
    Roster,
    RoundResult,
    RoutedShares,
    ShareDistribution,
)
from nov.protocol.wire import decode_submission, encode_submission
from nov.vss import vss_gen

rng = random.Random(0)
KP = keygen(rng)


def _enc(s, o):
    return EncryptedShare(encrypt_scalar(KP.pk, s, rng), encrypt_scalar(KP.pk, o, rng))


def _submission():
    q = QuantizedUpdate([[3, -4], [1]])
    sub, _ = build_submission(q, [[1, 1], [2]], norm_threshold(1.0), rng=rng)
    return sub


def _bodies():
    _, cc1 = vss_gen(5, 6, 2, 3, rng)
    _, cc2 = vss_gen(7, 8, 2, 3, rng)
    cts = encrypt_scalar(KP.pk, 99, rng)[:2]
    points = decrypt_points(KP, cts)
    t = accusation_transcript(0, 1, 2, 0)
    proofs = [prove_decryption(KP, m, c, t, rng) for m, c in zip(points, cts)]
    return [
        RegisterKey(KP.pk),
        Roster([(1, KP.pk), (2, g_pow(3))]),
        ShareDistribution({2: [_enc(1, 2), _enc(3, 4), _enc(5, 6)]}, [cc1, cc2, cc1], _submission()),
        RoutedShares({1: [_enc(1, 2)], 3: [_enc(3, 4)]}),
        BenignList(1, [1, 3, 4]),
        GlobalShare(0, [(1, 2), (random_scalar(rng), 0)]),
        CommitmentListRequest(2),
        CommitmentListResponse(1, {1: [cc1], 2: [cc2, cc1]}),
        Accusation(0, 2, 7, proofs),
        Removal(3, "sent an invalid share ✓"),
        RoundResult([1, 2, 3], [4, 5, 6]),
    ]


BODIES = _bodies()


@pytest.mark.parametrize("body", BODIES, ids=lambda b: type(b).__name__)
def test_roundtrip_every_message(body):
    env = Envelope(7, 3, body)
    data = encode(env)
    back = decode(data)
    assert back == env
    assert encode(back) == data
    assert back.tag == body.tag


def test_tags_cover_all_messages():
    assert {b.tag for b in BODIES} == set(Tag)


def test_header_layout():
    data = encode(Envelope(5, 2, CommitmentListRequest(1)))
    length, tag, round_id, sender = struct.unpack_from("<IBIH", data)
    assert (length, tag, round_id, sender) == (len(data) - 4, Tag.COMMITMENT_LIST_REQUEST, 5, 2)


def test_identity_point_travels():
    env = Envelope(0, 1, RegisterKey(GroupElement.identity()))
    assert decode(encode(env)).body.pk.is_identity


def test_submission_roundtrip():
    sub = _submission()
    assert decode_submission(encode_submission(sub)) == sub


@pytest.mark.parametrize("body", BODIES, ids=lambda b: type(b).__name__)
def test_truncation_rejected(body):
    data = encode(Envelope(0, 1, body))
    for cut in {1, 5, len(data) // 2, len(data) - 1}:
        with pytest.raises(WireError):
            decode(data[:cut])


def test_trailing_bytes_and_length_mismatch_rejected():
    data = encode(Envelope(0, 1, BenignList(0, [1, 2])))
    with pytest.raises(WireError):
        decode(data + b"\x00")
    # fix up the length prefix so only the payload is too long
    padded = bytearray(data + b"\x00")
    struct.pack_into("<I", padded, 0, len(padded) - 4)
    with pytest.raises(WireError):
        decode(bytes(padded))


def test_unknown_tag_rejected():
    data = bytearray(encode(Envelope(0, 1, CommitmentListRequest(0))))
    data[4] = 200
    with pytest.raises(WireError):
        decode(bytes(data))


def test_invalid_point_rejected_on_use():
    # points are parsed lazily; an off-curve encoding fails at first arithmetic use
    data = bytearray(encode(Envelope(0, 1, RegisterKey(g_pow(2)))))
    data[-33:] = b"\x02" + bytes(31) + b"\x05"
    env = decode(bytes(data))
    with pytest.raises(InvalidPoint):
        env.body.pk * g_pow(1)


def test_noncanonical_scalar_rejected():
    data = bytearray(encode(Envelope(0, 1, RoundResult([1], [2]))))
    data[-64:-32] = Q.to_bytes(32, "little")
    with pytest.raises(WireError):
        decode(bytes(data))
