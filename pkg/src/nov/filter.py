"""Zero-knowledge model filter over committed, quantized updates.

The server learns, per client, only whether the update's squared L2 norm is
within the public bound ``T`` and how many layers have a nonnegative inner
product with the reference (previous global) model. Every check consumes
commitments and proofs, never parameter values.

* norm: each ``c_i = g^{x_i} h^{r_i}`` is linked to ``c'_i = Com(x_i^2)`` by a
  sigma protocol; ``g^T / prod c'_i`` is then range-proved nonnegative.
* direction: for layer ``l`` with public reference ``y``,
  ``prod c_i^{y_i}`` commits to ``<x, y>``, range-proved nonnegative. A client
  whose layer fails simply omits that proof; the count of present, valid
  proofs is the layer score. All-zero reference layers pass automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .fixed_point import QuantConfig, QuantizedUpdate, embed
from .group import (
    Q,
    GroupElement,
    InvalidPoint,
    Scalar,
    Transcript,
    commit,
    g_pow,
    gens,
    msm,
    multi_pow,
    product,
    random_scalar,
)
from .rangeproof import RangeProof, RangeProofError, range_prove, range_verify


@dataclass(frozen=True)
class SquareLinkProof:
    c_prime: GroupElement
    e: Scalar
    z1: Scalar
    z2: Scalar
    z3: Scalar


@dataclass
class FilterSubmission:
    param_comms: list[GroupElement]
    square_links: list[SquareLinkProof]
    norm_proof: RangeProof | None
    layer_sign_proofs: dict[int, RangeProof] = field(default_factory=dict)


@dataclass(frozen=True)
class FilterVerdict:
    client: int
    norm_ok: bool
    layer_pass_count: int


def commit_update(q: QuantizedUpdate, cfg: QuantConfig = QuantConfig(), rng=None) -> tuple[list[GroupElement], list[Scalar]]:
    """One commitment per parameter, flattened across layers, with fresh blindings."""
    blindings = [random_scalar(rng) for _ in range(len(q))]
    comms = [commit(embed(x, cfg.value_bits), r) for x, r in zip(q.flat(), blindings)]
    return comms, blindings


def _square_challenge(c: GroupElement, c_prime: GroupElement, A1: GroupElement, A2: GroupElement) -> Scalar:
    t = Transcript(b"nov/square-link")
    t.append_point(b"c", c)
    t.append_point(b"c'", c_prime)
    t.append_point(b"A1", A1)
    t.append_point(b"A2", A2)
    return t.challenge(b"e")


def prove_square(x: Scalar, r: Scalar, c: GroupElement | None = None, rng=None) -> tuple[SquareLinkProof, Scalar]:
    """Commit to ``x^2`` and prove it against ``c = g^x h^r``.

    Knowledge of ``(x, r, r'')`` with ``c = g^x h^r`` and ``c' = c^x h^{r''}``
    forces ``c'`` to open to ``x^2``. Returns the proof and the blinding
    ``r'`` of ``c'``.
    """
    G = gens()
    x %= Q
    if c is None:
        c = commit(x, r)
    r_prime = random_scalar(rng)
    c_prime = commit(x * x % Q, r_prime)
    r_link = (r_prime - x * r) % Q
    a, b, d = random_scalar(rng), random_scalar(rng), random_scalar(rng)
    A1 = commit(a, b)
    A2 = multi_pow(((G.h_table, d),), (c ** a,))
    e = _square_challenge(c, c_prime, A1, A2)
    proof = SquareLinkProof(c_prime, e, (a + e * x) % Q, (b + e * r) % Q, (d + e * r_link) % Q)
    return proof, r_prime


def verify_square(c: GroupElement, proof: SquareLinkProof) -> bool:
    G = gens()
    try:
        neg_e = -proof.e % Q
        A1 = multi_pow(((G.g_table, proof.z1), (G.h_table, proof.z2)), (c ** neg_e,))
        A2 = multi_pow(((G.h_table, proof.z3),), (c ** proof.z1, proof.c_prime ** neg_e))
        return _square_challenge(c, proof.c_prime, A1, A2) == proof.e
    except (InvalidPoint, AttributeError, TypeError):
        return False


def norm_target(square_links: Sequence[SquareLinkProof], T: int) -> GroupElement:
    """``g^T / prod c'_i``, which opens to ``T - sum x_i^2``."""
    return g_pow(T) / product(sl.c_prime for sl in square_links)


def prove_norm_bound(
    q: QuantizedUpdate,
    square_links: Sequence[SquareLinkProof],
    square_blindings: Sequence[Scalar],
    T: int,
    cfg: QuantConfig = QuantConfig(),
    rng=None,
) -> RangeProof:
    slack = T - sum(x * x for x in q.flat())
    if slack < 0:
        raise RangeProofError("squared norm exceeds the threshold")
    blinding = -sum(square_blindings) % Q
    return range_prove(slack, blinding, norm_target(square_links, T), cfg.norm_bits, rng, context=b"norm")


def layer_context(l: int) -> bytes:
    return b"layer" + l.to_bytes(4, "little")


def layer_target(layer_comms: Sequence[GroupElement], reference: Sequence[int], cfg: QuantConfig = QuantConfig()) -> GroupElement:
    """``prod c_i^{y_i}``, computed by the verifier from public data."""
    return msm([y % Q for y in reference], layer_comms)


def prove_layer_sign(
    values: Sequence[int],
    blindings: Sequence[Scalar],
    reference: Sequence[int],
    l: int = 0,
    cfg: QuantConfig = QuantConfig(),
    rng=None,
) -> RangeProof | None:
    """Proof that ``<values, reference> >= 0``, or ``None`` when it is negative."""
    inner = sum(x * y for x, y in zip(values, reference))
    if not 0 <= inner < 1 << cfg.norm_bits:
        return None
    blinding = sum(y * r for y, r in zip(reference, blindings)) % Q
    return range_prove(inner, blinding, None, cfg.norm_bits, rng, context=layer_context(l))


def _layer_slices(shape: Sequence[int]) -> list[slice]:
    out, start = [], 0
    for n in shape:
        out.append(slice(start, start + n))
        start += n
    return out


def build_submission(
    q: QuantizedUpdate,
    reference: Sequence[Sequence[int]],
    T: int,
    cfg: QuantConfig = QuantConfig(),
    rng=None,
    comms: Sequence[GroupElement] | None = None,
    blindings: Sequence[Scalar] | None = None,
) -> tuple[FilterSubmission, list[Scalar]]:
    """Client side: commitments, square links, and whichever proofs are true."""
    if comms is None or blindings is None:
        comms, blindings = commit_update(q, cfg, rng)
    flat = q.flat()
    links, square_blindings = [], []
    for x, r, c in zip(flat, blindings, comms):
        proof, r_prime = prove_square(embed(x, cfg.value_bits), r, c, rng)
        links.append(proof)
        square_blindings.append(r_prime)
    try:
        norm_proof = prove_norm_bound(q, links, square_blindings, T, cfg, rng)
    except RangeProofError:
        norm_proof = None
    layer_proofs = {}
    for l, sl in enumerate(_layer_slices(q.shape)):
        ref = reference[l]
        if not any(ref):
            continue
        proof = prove_layer_sign(flat[sl], blindings[sl], ref, l, cfg, rng)
        if proof is not None:
            layer_proofs[l] = proof
    return FilterSubmission(list(comms), links, norm_proof, layer_proofs), list(blindings)


def verify_submission(
    sub: FilterSubmission,
    client: int,
    reference: Sequence[Sequence[int]],
    T: int,
    cfg: QuantConfig = QuantConfig(),
) -> FilterVerdict:
    shape = [len(layer) for layer in reference]
    p = sum(shape)
    if len(sub.param_comms) != p or len(sub.square_links) != p:
        return FilterVerdict(client, False, 0)

    norm_ok = sub.norm_proof is not None
    if norm_ok:
        norm_ok = all(verify_square(c, sl) for c, sl in zip(sub.param_comms, sub.square_links))
    if norm_ok:
        try:
            target = norm_target(sub.square_links, T)
        except InvalidPoint:
            norm_ok = False
        else:
            norm_ok = range_verify(target, sub.norm_proof, cfg.norm_bits, b"norm")

    passed = 0
    for l, sl in enumerate(_layer_slices(shape)):
        ref = reference[l]
        if not any(ref):
            passed += 1
            continue
        proof = sub.layer_sign_proofs.get(l)
        if proof is None:
            continue
        try:
            target = layer_target(sub.param_comms[sl], ref, cfg)
        except InvalidPoint:
            continue
        if range_verify(target, proof, cfg.norm_bits, layer_context(l)):
            passed += 1
    return FilterVerdict(client, norm_ok, passed)


def selection_size(n_submitted: int, t_s) -> int:
    """``ceil(n * t_s)`` in exact arithmetic (``30 * 0.4`` must be 12, not 13)."""
    frac = Fraction(str(t_s))
    if not 0 < frac <= 1:
        raise ValueError("t_s must be in (0, 1]")
    return math.ceil(n_submitted * frac)


def select_clients(verdicts: Sequence[FilterVerdict], t_s, n_submitted: int | None = None) -> list[int]:
    """Top ``ceil(n * t_s)`` clients passing the norm check, by layer score.

    Ties go to the lower client index. An empty result means the round
    cannot proceed.
    """
    n = len(verdicts) if n_submitted is None else n_submitted
    k = selection_size(n, t_s)
    eligible = sorted((v for v in verdicts if v.norm_ok), key=lambda v: (-v.layer_pass_count, v.client))
    return [v.client for v in eligible[:k]]
