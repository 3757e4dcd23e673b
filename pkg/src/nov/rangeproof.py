"""Zero-knowledge range proofs for Pedersen commitments by bit decomposition.

A proof that ``target = g^v h^r`` with ``0 <= v < 2^n``:

* commit to every bit, ``B_j = g^{b_j} h^{rho_j}``, choosing the blindings so
  that ``sum_j 2^j rho_j = r``; then ``prod_j B_j^(2^j) == target`` exactly,
  which the verifier checks by Horner evaluation;
* prove each ``B_j`` opens to 0 or 1 with a two-branch OR proof of knowledge
  of ``log_h B_j`` or ``log_h (B_j / g)``.

All branches share one Fiat-Shamir challenge ``e`` derived after absorbing
``context, n, target, B_0..B_{n-1}, (A0_j, A1_j)...``; each bit sends
``(e0_j, z0_j, z1_j)`` and the verifier recomputes the announcements with
``e1_j = e - e0_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .group import (
    Q,
    GroupElement,
    InvalidPoint,
    Scalar,
    Transcript,
    commit,
    gens,
    multi_pow,
    product,
    random_scalar,
)


class RangeProofError(ValueError):
    """The prover was asked to prove a false statement."""


@dataclass(frozen=True)
class RangeProof:
    bits: tuple[GroupElement, ...]
    e: Scalar
    responses: tuple[tuple[Scalar, Scalar, Scalar], ...]


def _challenge(context: bytes, n_bits: int, target: GroupElement, bits, announcements) -> Scalar:
    t = Transcript(b"nov/range-proof")
    t.append(b"context", context)
    t.append_int(b"n", n_bits)
    t.append_point(b"target", target)
    for B in bits:
        t.append_point(b"B", B)
    for A0, A1 in announcements:
        t.append_point(b"A0", A0)
        t.append_point(b"A1", A1)
    return t.challenge(b"e")


def _h_times(z: Scalar, X: GroupElement, e: Scalar) -> GroupElement:
    """``h^z * X^(-e)``."""
    return multi_pow(((gens().h_table, z),), (X ** (-e % Q),))


def range_prove(
    value: Scalar,
    blinding: Scalar,
    target: GroupElement | None = None,
    n_bits: int = 64,
    rng=None,
    context: bytes = b"",
) -> RangeProof:
    if not 0 <= value < 1 << n_bits:
        raise RangeProofError(f"value is outside [0, 2^{n_bits})")
    if target is None:
        target = commit(value, blinding)
    elif target != commit(value, blinding):
        raise RangeProofError("target does not open to (value, blinding)")
    G = gens()
    g_inv = ~G.g

    rho = [0] + [random_scalar(rng) for _ in range(n_bits - 1)]
    rho[0] = (blinding - sum(rho[j] << j for j in range(1, n_bits))) % Q
    bit_vals = [(value >> j) & 1 for j in range(n_bits)]
    bits = tuple(commit(b, r) for b, r in zip(bit_vals, rho))

    state, announcements = [], []
    for b, B in zip(bit_vals, bits):
        a = random_scalar(rng)
        e_sim, z_sim = random_scalar(rng), random_scalar(rng)
        A_real = G.h_table.pow(a)
        if b == 0:
            A_sim = _h_times(z_sim, B * g_inv, e_sim)
            announcements.append((A_real, A_sim))
        else:
            A_sim = _h_times(z_sim, B, e_sim)
            announcements.append((A_sim, A_real))
        state.append((a, e_sim, z_sim))

    e = _challenge(context, n_bits, target, bits, announcements)
    responses = []
    for b, r, (a, e_sim, z_sim) in zip(bit_vals, rho, state):
        e_real = (e - e_sim) % Q
        z_real = (a + e_real * r) % Q
        if b == 0:
            responses.append((e_real, z_real, z_sim))
        else:
            responses.append((e_sim, z_sim, z_real))
    return RangeProof(bits, e, tuple(responses))


def _weighted_bit_sum(bits) -> GroupElement:
    acc = bits[-1]
    for B in reversed(bits[:-1]):
        acc = product((acc, acc, B))
    return acc


def range_verify(target: GroupElement, proof: RangeProof, n_bits: int = 64, context: bytes = b"") -> bool:
    if not isinstance(proof, RangeProof):
        return False
    if len(proof.bits) != n_bits or len(proof.responses) != n_bits:
        return False
    try:
        if _weighted_bit_sum(proof.bits) != target:
            return False
        g_inv = ~gens().g
        announcements = []
        for B, (e0, z0, z1) in zip(proof.bits, proof.responses):
            e1 = (proof.e - e0) % Q
            announcements.append((_h_times(z0, B, e0), _h_times(z1, B * g_inv, e1)))
        return _challenge(context, n_bits, target, proof.bits, announcements) == proof.e
    except (InvalidPoint, TypeError, ValueError):
        return False
