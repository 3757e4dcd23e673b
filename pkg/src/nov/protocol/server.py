"""Server side of one aggregation round.

The server is driven phase by phase: messages are fed in with
:meth:`Server.receive` and each ``step*`` call closes the current phase and
returns ``(address, envelope)`` pairs to send. Messages that do not belong
to the open phase (late, duplicated, or from unknown senders) are dropped.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from ..elgamal import CHUNKS_PER_SCALAR, DecodeError, decode_points, verify_decryption
from ..filter import FilterVerdict, select_clients, verify_submission
from ..group import Q, GroupElement, commit, product
from ..vss import CoeffCommitments, SharePair, comms_aggregate, lagrange_coefficients, vss_verify_share
from .common import ProtocolAbort, RoundConfig, accusation_transcript
from .messages import (
    SERVER,
    Accusation,
    BenignList,
    CommitmentListRequest,
    CommitmentListResponse,
    Envelope,
    GlobalShare,
    RegisterKey,
    Removal,
    Roster,
    RoundResult,
    RoutedShares,
    ShareDistribution,
)


class Phase(Enum):
    ROSTER = "roster"
    DISTRIBUTION = "distribution"
    RECONSTRUCTION = "reconstruction"
    IDENTIFICATION = "identification"
    DONE = "done"


Outgoing = list[tuple[int, Envelope]]


@dataclass
class Verdict:
    """How one accusation was resolved."""

    accuser: int
    accused: int
    param: int
    proofs_ok: bool
    share_ok: bool | None
    removed: int


class Server:
    def __init__(self, cfg: RoundConfig, reference: Sequence[Sequence[int]], round_id: int = 0):
        if [len(layer) for layer in reference] != list(cfg.shape):
            raise ValueError("reference model does not match the layer shape")
        self.cfg = cfg
        self.reference = [list(layer) for layer in reference]
        self.round_id = round_id
        self.phase = Phase.ROSTER
        self.attempt = 0

        self._registrations: list[tuple[int, GroupElement]] = []
        self.address: dict[int, int] = {}  # index -> transport address
        self.index_of: dict[int, int] = {}  # transport address -> index
        self.roster: dict[int, GroupElement] = {}
        self.client1: list[int] = []
        self.client2: list[int] = []
        self.client3: list[int] = []
        self.u_b: list[int] = []
        self.u_b_initial: list[int] = []

        self.distributions: dict[int, ShareDistribution] = {}
        self.comms: dict[int, list[CoeffCommitments]] = {}
        self.param_comms: dict[int, list[GroupElement]] = {}
        self.verdicts: dict[int, FilterVerdict] = {}
        self.global_shares: dict[int, GlobalShare] = {}
        self.accusations: dict[tuple[int, int, int], Accusation] = {}
        self.global_share_check_failed: list[int] = []
        self.removed: dict[int, str] = {}
        self.resolutions: list[Verdict] = []
        self.checks: Counter = Counter()
        self.ignored = 0
        self.result: RoundResult | None = None
        self.abort: ProtocolAbort | None = None

    # -- intake ----------------------------------------------------------

    def _env(self, body) -> Envelope:
        return Envelope(self.round_id, SERVER, body)

    def _fail(self, cause: str):
        self.abort = ProtocolAbort(self.phase.value, cause)
        self.phase = Phase.DONE
        raise self.abort

    def receive(self, addr: int, env: Envelope) -> Outgoing:
        """Accept one message if it belongs to the open phase; may return replies."""
        body = env.body
        if env.round_id != self.round_id or self.phase == Phase.DONE:
            return self._drop()
        if isinstance(body, RegisterKey):
            if self.phase != Phase.ROSTER or addr in {a for a, _ in self._registrations}:
                return self._drop()
            if any(pk == body.pk for _, pk in self._registrations):
                return self._drop()
            self._registrations.append((addr, body.pk))
            return []

        u = self.index_of.get(addr)
        if u is None or env.sender != u or u in self.removed:
            return self._drop()

        if isinstance(body, ShareDistribution):
            if self.phase != Phase.DISTRIBUTION or u in self.distributions:
                return self._drop()
            self.distributions[u] = body
            return []
        if isinstance(body, GlobalShare):
            if self.phase != Phase.RECONSTRUCTION or body.attempt != self.attempt or u in self.global_shares:
                return self._drop()
            if u not in self.client2:
                return self._drop()
            self.global_shares[u] = body
            return []
        if isinstance(body, Accusation):
            if self.phase not in (Phase.RECONSTRUCTION, Phase.IDENTIFICATION) or body.attempt != self.attempt:
                return self._drop()
            key = (u, body.accused, body.param)
            if u not in self.client2 or key in self.accusations:
                return self._drop()
            self.accusations[key] = body
            return []
        if isinstance(body, CommitmentListRequest):
            if self.phase != Phase.IDENTIFICATION or body.attempt != self.attempt:
                return self._drop()
            return [(addr, self._env(self._commitment_list()))]
        return self._drop()

    def _drop(self) -> Outgoing:
        self.ignored += 1
        return []

    def _broadcast(self, members: Sequence[int], body) -> Outgoing:
        env = self._env(body)
        return [(self.address[u], env) for u in members]

    # -- step 0 ----------------------------------------------------------

    def step0(self) -> Outgoing:
        """Assign indices in arrival order and broadcast the roster."""
        if len(self._registrations) < self.cfg.t:
            self._fail(f"{len(self._registrations)} registrations, need {self.cfg.t}")
        if len(self._registrations) > self.cfg.n:
            self._registrations = self._registrations[: self.cfg.n]
        for idx, (addr, pk) in enumerate(self._registrations, start=1):
            self.address[idx] = addr
            self.index_of[addr] = idx
            self.roster[idx] = pk
        self.client1 = sorted(self.roster)
        self.phase = Phase.DISTRIBUTION
        return self._broadcast(self.client1, Roster(sorted(self.roster.items())))

    # -- step 1 ----------------------------------------------------------

    def _well_formed(self, u: int, d: ShareDistribution) -> bool:
        p, t = self.cfg.p, self.cfg.t
        if len(d.comms) != p or any(cc.t != t for cc in d.comms):
            return False
        if set(d.ciphertexts) != set(self.client1) - {u}:
            return False
        for shares in d.ciphertexts.values():
            if len(shares) != p:
                return False
            for sh in shares:
                if len(sh.s) != CHUNKS_PER_SCALAR or len(sh.o) != CHUNKS_PER_SCALAR:
                    return False
        # the filter must have run on exactly the values being shared
        return list(d.submission.param_comms) == [cc.E[0] for cc in d.comms]

    def step1(self) -> Outgoing:
        """Filter, route ciphertexts, and broadcast the benign list."""
        cfg = self.cfg
        self.client2 = []
        for u in self.client1:
            d = self.distributions.get(u)
            if d is None:
                continue
            if not self._well_formed(u, d):
                self.distributions.pop(u)
                self.removed[u] = "malformed share distribution"
                continue
            self.client2.append(u)
        if len(self.client2) < cfg.t:
            self._fail(f"{len(self.client2)} share distributions, need {cfg.t}")

        for u in self.client2:
            d = self.distributions[u]
            self.comms[u] = d.comms
            self.param_comms[u] = list(d.submission.param_comms)
            self.verdicts[u] = verify_submission(d.submission, u, self.reference, cfg.T, cfg.quant)

        self.u_b = select_clients([self.verdicts[u] for u in self.client2], cfg.t_s, len(self.client2))
        self.u_b_initial = list(self.u_b)
        if len(self.u_b) < cfg.t:
            self._fail(f"benign list has {len(self.u_b)} clients, need {cfg.t}")

        out: Outgoing = []
        for v in self.client2:
            routed = {u: self.distributions[u].ciphertexts[v] for u in self.client2 if u != v}
            out.append((self.address[v], self._env(RoutedShares(routed))))
        out += self._broadcast(self.client2, BenignList(self.attempt, list(self.u_b)))
        self.phase = Phase.RECONSTRUCTION
        return out

    # -- step 2 ----------------------------------------------------------

    def step2(self) -> Outgoing:
        """Reconstruct and check; returns the result or the step-x pushes."""
        cfg = self.cfg
        self.client3 = sorted(u for u in self.global_shares if u not in self.removed)
        pending = any(a.attempt == self.attempt for a in self.accusations.values())
        if len(self.client3) < cfg.t and not pending:
            self._fail(f"{len(self.client3)} global shares, need {cfg.t}")

        ok = False
        if len(self.client3) >= cfg.t:
            X, R, ok = self._reconstruct(self.client3[: cfg.t])
        if ok and not pending:
            self.result = RoundResult(X, R)
            self.phase = Phase.DONE
            return self._broadcast(self.client2, self.result)
        return self._start_identification()

    def _reconstruct(self, chosen: list[int]) -> tuple[list[int], list[int], bool]:
        lam = lagrange_coefficients(chosen)
        shares = [self.global_shares[u].shares for u in chosen]
        X, R, ok = [], [], True
        for i in range(self.cfg.p):
            S = sum(a * sh[i][0] for a, sh in zip(lam, shares))
            O = sum(a * sh[i][1] for a, sh in zip(lam, shares))
            X.append(S % Q)
            R.append(O % Q)
            expected = product(self.param_comms[u][i] for u in self.u_b)
            if commit(X[-1], R[-1]) == expected:
                self.checks["sum_check_pass"] += 1
            else:
                self.checks["sum_check_fail"] += 1
                ok = False
        return X, R, ok

    def _commitment_list(self) -> CommitmentListResponse:
        return CommitmentListResponse(self.attempt, {v: self.comms[v] for v in self.u_b})

    def _start_identification(self) -> Outgoing:
        p = self.cfg.p
        aggregate = [comms_aggregate([self.comms[v][i] for v in self.u_b]) for i in range(p)]
        self.global_share_check_failed = []
        for u in self.client3:
            shares = self.global_shares[u].shares
            good = len(shares) == p and all(
                vss_verify_share(SharePair(u, S, O), aggregate[i]) for i, (S, O) in enumerate(shares)
            )
            self.checks["global_share_check_pass" if good else "global_share_check_fail"] += 1
            if not good:
                self.global_share_check_failed.append(u)
        self.phase = Phase.IDENTIFICATION
        body = self._commitment_list()
        return [(self.address[u], self._env(body)) for u in self.global_share_check_failed]

    # -- step x ----------------------------------------------------------

    def _judge(self, accuser: int, acc: Accusation) -> Verdict:
        v, param = acc.accused, acc.param
        cts_by_param = self.distributions[v].ciphertexts.get(accuser) if v in self.distributions else None
        if (
            v not in self.u_b
            or cts_by_param is None
            or not 0 <= param < len(cts_by_param)
            or len(acc.proofs) != 2 * CHUNKS_PER_SCALAR
        ):
            self.checks["decryption_proof_fail"] += 1
            return Verdict(accuser, v, param, False, None, accuser)

        cts = cts_by_param[param].chunks()
        transcript = accusation_transcript(self.round_id, accuser, v, param)
        pk = self.roster[accuser]
        proofs_ok = all(verify_decryption(pk, c, pf, transcript) for c, pf in zip(cts, acc.proofs))
        self.checks["decryption_proof_pass" if proofs_ok else "decryption_proof_fail"] += 1
        if not proofs_ok:
            return Verdict(accuser, v, param, False, None, accuser)

        points = [pf.m for pf in acc.proofs]
        try:
            s = decode_points(points[:CHUNKS_PER_SCALAR])
            o = decode_points(points[CHUNKS_PER_SCALAR:])
        except DecodeError:
            self.checks["undecodable"] += 1
            return Verdict(accuser, v, param, True, False, v)
        share_ok = vss_verify_share(SharePair(accuser, s, o), self.comms[v][param])
        self.checks["share_check_pass" if share_ok else "share_check_fail"] += 1
        return Verdict(accuser, v, param, True, share_ok, accuser if share_ok else v)

    def stepx(self) -> Outgoing:
        """Resolve accusations, remove the guilty, and restart step 2."""
        cfg = self.cfg
        removed: dict[int, str] = {}
        justified = set()
        for (accuser, _, _), acc in sorted(self.accusations.items()):
            if acc.attempt != self.attempt or accuser in removed:
                continue
            verdict = self._judge(accuser, acc)
            self.resolutions.append(verdict)
            if verdict.removed == accuser:
                removed.setdefault(
                    accuser, "invalid decryption proof" if not verdict.proofs_ok else "false accusation"
                )
            else:
                removed.setdefault(verdict.accused, "sent an invalid share")
                justified.add(accuser)
        for u in self.global_share_check_failed:
            if u not in justified and u not in removed:
                removed[u] = "global share failed its check without a valid accusation"
        if not removed:
            self._fail("identification found no one to remove")

        self.removed.update(removed)
        self.client2 = [u for u in self.client2 if u not in removed]
        self.client3 = [u for u in self.client3 if u not in removed]
        self.u_b = [u for u in self.u_b if u not in removed]
        if len(self.u_b) < cfg.t or len(self.client2) < cfg.t:
            self._fail(f"{len(self.u_b)} benign clients left, need {cfg.t}")

        self.attempt += 1
        self.global_shares = {}
        self.global_share_check_failed = []
        self.phase = Phase.RECONSTRUCTION
        out: Outgoing = []
        for u in sorted(removed):
            out += self._broadcast(self.client2, Removal(u, removed[u]))
        out += self._broadcast(self.client2, BenignList(self.attempt, list(self.u_b)))
        return out

