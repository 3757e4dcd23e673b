"""Protocol message types exchanged between the server and clients."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Union

from ..elgamal import Ciphertext, DecryptionProof
from ..filter import FilterSubmission
from ..group import GroupElement, Scalar
from ..vss import CoeffCommitments

SERVER = 0


class Tag(IntEnum):
    REGISTER_KEY = 1
    ROSTER = 2
    SHARE_DISTRIBUTION = 3
    ROUTED_SHARES = 4
    BENIGN_LIST = 5
    GLOBAL_SHARE = 6
    COMMITMENT_LIST_REQUEST = 7
    COMMITMENT_LIST_RESPONSE = 8
    ACCUSATION = 9
    REMOVAL = 10
    ROUND_RESULT = 11


@dataclass
class EncryptedShare:
    """One share pair ``(s, o)``, each scalar as 16 chunk ciphertexts."""

    s: tuple[Ciphertext, ...]
    o: tuple[Ciphertext, ...]

    def chunks(self) -> tuple[Ciphertext, ...]:
        return self.s + self.o


@dataclass
class RegisterKey:
    pk: GroupElement
    tag = Tag.REGISTER_KEY


@dataclass
class Roster:
    entries: list[tuple[int, GroupElement]]
    tag = Tag.ROSTER


@dataclass
class ShareDistribution:
    # receiver index -> one EncryptedShare per parameter
    ciphertexts: dict[int, list[EncryptedShare]]
    # one coefficient-commitment list per parameter
    comms: list[CoeffCommitments]
    submission: FilterSubmission
    tag = Tag.SHARE_DISTRIBUTION


@dataclass
class RoutedShares:
    # sender index -> one EncryptedShare per parameter
    shares: dict[int, list[EncryptedShare]]
    tag = Tag.ROUTED_SHARES


@dataclass
class BenignList:
    attempt: int
    members: list[int]
    tag = Tag.BENIGN_LIST


@dataclass
class GlobalShare:
    attempt: int
    shares: list[tuple[Scalar, Scalar]]
    tag = Tag.GLOBAL_SHARE


@dataclass
class CommitmentListRequest:
    attempt: int
    tag = Tag.COMMITMENT_LIST_REQUEST


@dataclass
class CommitmentListResponse:
    attempt: int
    comms: dict[int, list[CoeffCommitments]] = field(default_factory=dict)
    tag = Tag.COMMITMENT_LIST_RESPONSE


@dataclass
class Accusation:
    attempt: int
    accused: int
    param: int
    # 32 proofs: the 16 chunks of s, then the 16 chunks of o
    proofs: list[DecryptionProof]
    tag = Tag.ACCUSATION


@dataclass
class Removal:
    client: int
    reason: str
    tag = Tag.REMOVAL


@dataclass
class RoundResult:
    X: list[Scalar]
    R: list[Scalar]
    tag = Tag.ROUND_RESULT


Body = Union[
    RegisterKey,
    Roster,
    ShareDistribution,
    RoutedShares,
    BenignList,
    GlobalShare,
    CommitmentListRequest,
    CommitmentListResponse,
    Accusation,
    Removal,
    RoundResult,
]


@dataclass
class Envelope:
    round_id: int
    sender: int
    body: Body

    @property
    def tag(self) -> Tag:
        return self.body.tag
