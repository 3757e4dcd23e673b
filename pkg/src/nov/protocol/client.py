"""Client side of one aggregation round."""

from __future__ import annotations

from typing import Sequence

from ..elgamal import (
    CHUNKS_PER_SCALAR,
    DecodeError,
    Keypair,
    decrypt_points,
    decrypt_scalar,
    encrypt_scalar,
    keygen,
    prove_decryption,
)
from ..filter import build_submission
from ..fixed_point import QuantizedUpdate, embed
from ..group import Q, GroupElement, Scalar, fixed_base, random_scalar
from ..vss import CoeffCommitments, SharePair, vss_gen, vss_verify_share
from .common import RoundConfig, accusation_transcript
from .messages import (
    SERVER,
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
)


class Client:
    """Honest participant. Adversaries override the ``_hook`` methods."""

    def __init__(
        self,
        address: int,
        update: QuantizedUpdate,
        reference: Sequence[Sequence[int]],
        cfg: RoundConfig,
        round_id: int = 0,
        rng=None,
        keypair: Keypair | None = None,
    ):
        if len(update) != cfg.p:
            raise ValueError(f"update has {len(update)} parameters, round expects {cfg.p}")
        self.address = address
        self.update = update
        self.reference = reference
        self.cfg = cfg
        self.round_id = round_id
        self.rng = rng
        self.keypair = keypair or keygen(rng)

        self.index: int | None = None
        self.roster: dict[int, GroupElement] = {}
        self.values: list[Scalar] = []
        self.blindings: list[Scalar] = []
        self.own_shares: list[SharePair] = []
        self.received: dict[int, list[EncryptedShare]] = {}
        self.decoded: dict[int, list[SharePair]] = {}
        self.decode_failures: dict[int, int] = {}  # sender -> first bad parameter
        self.u_b: list[int] = []
        self.attempt = 0
        self.removed: dict[int, str] = {}
        self.result: RoundResult | None = None

    # -- plumbing --------------------------------------------------------

    def _env(self, body) -> Envelope:
        sender = self.index if self.index is not None else self.address
        return Envelope(self.round_id, sender, body)

    def register(self) -> Envelope:
        return self._env(RegisterKey(self.keypair.pk))

    def handle(self, env: Envelope) -> list[Envelope]:
        if env.sender != SERVER or env.round_id != self.round_id:
            return []
        body = env.body
        if isinstance(body, Roster):
            return self._on_roster(body)
        if isinstance(body, RoutedShares):
            self.received.update(body.shares)
            return []
        if isinstance(body, BenignList):
            return self._on_benign_list(body)
        if isinstance(body, CommitmentListResponse):
            return self._on_commitments(body)
        if isinstance(body, Removal):
            self.removed[body.client] = body.reason
            return []
        if isinstance(body, RoundResult):
            self.result = body
            return []
        return []

    # -- step 1 ----------------------------------------------------------

    def _on_roster(self, body: Roster) -> list[Envelope]:
        if self.index is not None:
            return []
        self.roster = dict(body.entries)
        mine = [idx for idx, pk in body.entries if pk == self.keypair.pk]
        if len(mine) != 1:
            return []
        self.index = mine[0]
        return [self._env(self._distribute())]

    def _distribute(self) -> ShareDistribution:
        cfg = self.cfg
        n = max(self.roster)
        flat = self.update.flat()
        self.values = [embed(x, cfg.quant.value_bits) for x in flat]
        self.blindings = [random_scalar(self.rng) for _ in flat]

        per_receiver: dict[int, list[SharePair]] = {v: [] for v in self.roster if v != self.index}
        comms: list[CoeffCommitments] = []
        for x, r in zip(self.values, self.blindings):
            shares, cc = vss_gen(x, r, cfg.t, n, self.rng)
            comms.append(cc)
            self.own_shares.append(shares[self.index - 1])
            for v in per_receiver:
                per_receiver[v].append(shares[v - 1])

        ciphertexts = {}
        for v, shares in per_receiver.items():
            ciphertexts[v] = self._hook_encrypt(v, shares, fixed_base(self.roster[v]))

        param_comms = [cc.E[0] for cc in comms]
        submission, _ = build_submission(
            self.update, self.reference, cfg.T, cfg.quant, self.rng, param_comms, self.blindings
        )
        return ShareDistribution(ciphertexts, comms, submission)

    def _hook_encrypt(self, receiver: int, shares: list[SharePair], pk_table) -> list[EncryptedShare]:
        return [
            EncryptedShare(encrypt_scalar(pk_table, sh.s, self.rng), encrypt_scalar(pk_table, sh.o, self.rng))
            for sh in shares
        ]

    # -- step 2 ----------------------------------------------------------

    def _decode_from(self, sender: int) -> list[SharePair] | None:
        if sender in self.decoded:
            return self.decoded[sender]
        if sender in self.decode_failures or sender not in self.received:
            return None
        out = []
        for param, enc in enumerate(self.received[sender]):
            try:
                s = decrypt_scalar(self.keypair, enc.s)
                o = decrypt_scalar(self.keypair, enc.o)
            except DecodeError:
                self.decode_failures[sender] = param
                return None
            out.append(SharePair(self.index, s, o))
        self.decoded[sender] = out
        return out

    def _on_benign_list(self, body: BenignList) -> list[Envelope]:
        if self.index is None:
            return []
        self.u_b = list(body.members)
        self.attempt = body.attempt
        p = self.cfg.p
        S, O = [0] * p, [0] * p
        accusations = []
        for v in self.u_b:
            if v == self.index:
                shares = self.own_shares
            else:
                shares = self._decode_from(v)
                if shares is None:
                    if v in self.decode_failures:
                        accusations.append(self._accuse(v, self.decode_failures[v]))
                    continue
            for i, sh in enumerate(shares):
                S[i] += sh.s
                O[i] += sh.o
        if accusations:
            # a share we cannot read: justify ourselves instead of summing garbage
            return [self._env(a) for a in accusations]
        pairs = [(s % Q, o % Q) for s, o in zip(S, O)]
        return [self._env(GlobalShare(self.attempt, self._hook_global_share(pairs)))]

    def _hook_global_share(self, pairs: list[tuple[Scalar, Scalar]]) -> list[tuple[Scalar, Scalar]]:
        return pairs

    # -- step x ----------------------------------------------------------

    def request_commitments(self) -> Envelope:
        return self._env(CommitmentListRequest(self.attempt))

    def _on_commitments(self, body: CommitmentListResponse) -> list[Envelope]:
        if self.index is None:
            return []
        accusations = []
        for v in self.u_b:
            if v == self.index or v not in body.comms:
                continue
            shares = self._decode_from(v)
            if shares is None:
                continue
            comms = body.comms[v]
            for param, sh in enumerate(shares):
                if param >= len(comms) or not vss_verify_share(sh, comms[param]):
                    accusations.append(self._accuse(v, param))
                    break
        accusations.extend(self._hook_extra_accusations(body))
        return [self._env(a) for a in accusations]

    def _hook_extra_accusations(self, body: CommitmentListResponse) -> list[Accusation]:
        return []

    def _accuse(self, accused: int, param: int) -> Accusation:
        """Reveal the plaintext chunks of one received share pair, with proofs."""
        enc = self.received[accused][param]
        cts = enc.chunks()
        points = decrypt_points(self.keypair, cts)
        transcript = accusation_transcript(self.round_id, self.index, accused, param)
        proofs = [prove_decryption(self.keypair, m, c, transcript, self.rng) for m, c in zip(points, cts)]
        assert len(proofs) == 2 * CHUNKS_PER_SCALAR
        return Accusation(self.attempt, accused, param, proofs)
