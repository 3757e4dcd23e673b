import random
from fractions import Fraction

import pytest

from nov.group import Q, commit, product, random_scalar
from nov.vss import (
    CoeffCommitments,
    SharePair,
    comms_aggregate,
    lagrange_coefficients,
    vss_gen,
    vss_reconstruct,
    vss_verify_share,
)


def test_threshold_one_gives_constant_shares():
    shares, comms = vss_gen(42, 7, t=1, n=3, rng=random.Random(0))
    assert all((sh.s, sh.o) == (42, 7) for sh in shares)
    assert comms.E == (commit(42, 7),)


def test_t_equals_n_needs_every_share():
    rng = random.Random(1)
    shares, _ = vss_gen(99, 5, t=4, n=4, rng=rng)
    assert vss_reconstruct(shares, 4) == (99, 5)
    with pytest.raises(ValueError):
        vss_reconstruct(shares[:3], 4)


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        vss_gen(1, 1, t=0, n=3)
    with pytest.raises(ValueError):
        vss_gen(1, 1, t=4, n=3)


def test_shares_match_hand_polynomial():
    # F(x) = s + a1 x, G(x) = o + b1 x; recover a1, b1 from E_1 by brute force-free check
    rng = random.Random(2)
    shares, comms = vss_gen(10, 20, t=2, n=3, rng=rng)
    a1 = (shares[0].s - 10) % Q
    b1 = (shares[0].o - 20) % Q
    for sh in shares:
        assert sh.s == (10 + a1 * sh.index) % Q
        assert sh.o == (20 + b1 * sh.index) % Q
    assert comms.E[1] == commit(a1, b1)


def test_every_share_verifies_and_tampering_fails():
    rng = random.Random(3)
    shares, comms = vss_gen(random_scalar(rng), random_scalar(rng), t=3, n=5, rng=rng)
    for sh in shares:
        assert vss_verify_share(sh, comms)
        assert not vss_verify_share(SharePair(sh.index, sh.s + 1, sh.o), comms)
        assert not vss_verify_share(SharePair(sh.index, sh.s, sh.o + 1), comms)
        assert not vss_verify_share(SharePair(sh.index % 5 + 1, sh.s, sh.o), comms)


def test_reconstruct_from_any_subset_and_extra_shares():
    rng = random.Random(4)
    s, o = random_scalar(rng), random_scalar(rng)
    shares, _ = vss_gen(s, o, t=3, n=6, rng=rng)
    for subset in ([0, 1, 2], [5, 3, 1], [0, 2, 4, 5], list(range(6))):
        assert vss_reconstruct([shares[i] for i in subset], 3) == (s, o)


def test_lagrange_coefficients_against_fractions():
    idx = [1, 3, 4]
    expected = []
    for i in idx:
        f = Fraction(1)
        for j in idx:
            if j != i:
                f *= Fraction(j, j - i)
        expected.append(f.numerator * pow(f.denominator, -1, Q) % Q)
    assert lagrange_coefficients(idx) == expected
    with pytest.raises(ValueError):
        lagrange_coefficients([1, 1])
    with pytest.raises(ValueError):
        lagrange_coefficients([0, 2])


def test_aggregated_commitments_verify_summed_shares():
    rng = random.Random(5)
    t, n = 3, 5
    dealt = [vss_gen(random_scalar(rng), random_scalar(rng), t, n, rng) for _ in range(4)]
    agg = comms_aggregate([c for _, c in dealt])
    for u in range(1, n + 1):
        S = sum(sh[u - 1].s for sh, _ in dealt) % Q
        O = sum(sh[u - 1].o for sh, _ in dealt) % Q
        assert vss_verify_share(SharePair(u, S, O), agg)
    assert agg.E[0] == product(c.E[0] for _, c in dealt)


def test_aggregate_rejects_bad_input():
    with pytest.raises(ValueError):
        comms_aggregate([])
    _, c2 = vss_gen(1, 1, 2, 3, random.Random(0))
    _, c3 = vss_gen(1, 1, 3, 3, random.Random(0))
    with pytest.raises(ValueError):
        comms_aggregate([c2, c3])


def test_coefficient_commitments_evaluate():
    rng = random.Random(6)
    _, comms = vss_gen(5, 6, t=3, n=4, rng=rng)
    assert isinstance(comms, CoeffCommitments) and comms.t == 3
    assert comms.evaluate(2) == product([comms.E[0], comms.E[1] ** 2, comms.E[2] ** 4])
