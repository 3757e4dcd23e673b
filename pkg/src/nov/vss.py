"""Pedersen verifiable secret sharing over the scalar field."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .group import Q, GroupElement, Scalar, commit, inv, msm, product, random_scalar


@dataclass(frozen=True)
class SharePair:
    index: int
    s: Scalar
    o: Scalar


@dataclass(frozen=True)
class CoeffCommitments:
    """``E[j] = g^{F_j} h^{G_j}`` for the coefficients of the two sharing polynomials."""

    E: tuple[GroupElement, ...]

    @property
    def t(self) -> int:
        return len(self.E)

    def evaluate(self, index: int) -> GroupElement:
        """``prod_j E[j]^(index^j)``: the commitment a share at ``index`` must open."""
        powers = [pow(index, j, Q) for j in range(len(self.E))]
        return msm(powers, self.E)


def _eval_poly(coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % Q
    return acc


def vss_gen(s: Scalar, o: Scalar, t: int, n: int, rng=None) -> tuple[list[SharePair], CoeffCommitments]:
    """Share ``s`` (blinded by ``o``) among indices ``1..n`` with threshold ``t``."""
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got t={t}, n={n}")
    F = [s % Q] + [random_scalar(rng) for _ in range(t - 1)]
    G = [o % Q] + [random_scalar(rng) for _ in range(t - 1)]
    comms = CoeffCommitments(tuple(commit(f, g) for f, g in zip(F, G)))
    shares = [SharePair(i, _eval_poly(F, i), _eval_poly(G, i)) for i in range(1, n + 1)]
    return shares, comms


def vss_verify_share(share: SharePair, comms: CoeffCommitments) -> bool:
    return commit(share.s, share.o) == comms.evaluate(share.index)


def lagrange_coefficients(indices: Sequence[int]) -> list[Scalar]:
    """Coefficients interpolating at zero over the given evaluation points."""
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate share indices")
    if any(i % Q == 0 for i in indices):
        raise ValueError("share index 0 is reserved for the secret")
    coeffs = []
    for i in indices:
        num, den = 1, 1
        for j in indices:
            if j != i:
                num = num * j % Q
                den = den * (j - i) % Q
        coeffs.append(num * inv(den) % Q)
    return coeffs


def vss_reconstruct(shares: Sequence[SharePair], t: int) -> tuple[Scalar, Scalar]:
    """Interpolate ``(S, O)`` at zero from at least ``t`` shares."""
    if len(shares) < t:
        raise ValueError(f"need at least {t} shares, got {len(shares)}")
    lam = lagrange_coefficients([sh.index for sh in shares])
    S = sum(a * sh.s for a, sh in zip(lam, shares)) % Q
    O = sum(a * sh.o for a, sh in zip(lam, shares)) % Q
    return S, O


def comms_aggregate(all_comms: Sequence[CoeffCommitments]) -> CoeffCommitments:
    """Pointwise product of coefficient commitments from several dealers."""
    if not all_comms:
        raise ValueError("nothing to aggregate")
    t = all_comms[0].t
    if any(c.t != t for c in all_comms):
        raise ValueError("coefficient commitment lists have mixed lengths")
    return CoeffCommitments(tuple(product(c.E[j] for c in all_comms) for j in range(t)))
