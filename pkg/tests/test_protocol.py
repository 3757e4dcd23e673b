import random

import pytest

from nov.elgamal import keygen
from nov.fixed_point import QuantizedUpdate, embed
from nov.group import Q
from nov.protocol import (
    SERVER,
    Client,
    Envelope,
    Phase,
    ProtocolAbort,
    RoundConfig,
    Server,
    apply_global_update,
    encode,
)
from nov.protocol.messages import BenignList, GlobalShare, RegisterKey, RoutedShares, ShareDistribution
from nov.sim import AdversarySpec, ScenarioConfig, WrongGlobalShare, run_scenario

REF = [[5, -3, 2]]


def _round(n=4, t=2, t_s=1.0, values=None, ref=REF):
    cfg = RoundConfig(n, t, [len(layer) for layer in ref], t_s=t_s)
    server = Server(cfg, ref)
    clients = {}
    for a in range(1, n + 1):
        vals = values[a - 1] if values else [a, -a, 2 * a]
        clients[a] = Client(a, QuantizedUpdate([vals]), ref, cfg, rng=random.Random(a))
    return cfg, server, clients


def _deliver(clients, out):
    replies = []
    for addr, env in out:
        replies += [(addr, e) for e in clients[addr].handle(env)]
    return replies


def _run_to_step1(server, clients):
    for a, c in clients.items():
        server.receive(a, c.register())
    dists = _deliver(clients, server.step0())
    for a, env in dists:
        server.receive(a, env)
    return server.step1()


def test_roster_indices_follow_arrival_and_first_registration_wins():
    cfg, server, clients = _round()
    order = [3, 1, 4, 2]
    for a in order:
        server.receive(a, clients[a].register())
    # same address again, and another address reusing a key
    assert server.receive(3, Envelope(0, 3, RegisterKey(keygen(random.Random(9)).pk))) == []
    server.receive(9, clients[1].register())
    assert server.ignored == 2
    out = server.step0()
    assert server.address == {1: 3, 2: 1, 3: 4, 4: 2}
    assert {addr for addr, _ in out} == {1, 2, 3, 4}
    _deliver(clients, out)
    assert clients[3].index == 1 and clients[2].index == 4


def test_roster_exactly_t_succeeds_and_below_t_aborts():
    cfg, server, clients = _round(n=4, t=2)
    for a in (1, 2):
        server.receive(a, clients[a].register())
    assert len(server.step0()) == 2

    cfg, server, clients = _round(n=4, t=2)
    server.receive(1, clients[1].register())
    with pytest.raises(ProtocolAbort) as exc:
        server.step0()
    assert exc.value.phase == "roster"


def test_roster_truncated_to_n():
    cfg, server, clients = _round(n=3, t=2)
    extra = Client(9, QuantizedUpdate([[0, 0, 0]]), REF, cfg, rng=random.Random(9))
    for a, c in [*clients.items(), (9, extra)]:
        server.receive(a, c.register())
    server.step0()
    assert sorted(server.roster) == [1, 2, 3] and 9 not in server.index_of


def test_wrong_round_and_wrong_phase_ignored():
    cfg, server, clients = _round()
    env = clients[1].register()
    server.receive(1, Envelope(5, env.sender, env.body))
    assert server.ignored == 1 and not server._registrations
    server.receive(1, env)
    server.receive(2, clients[2].register())
    server.step0()
    server.receive(1, Envelope(0, 1, GlobalShare(0, [(0, 0)] * 3)))  # too early
    assert server.ignored == 2


def test_routing_is_a_permutation_of_ciphertexts():
    cfg, server, clients = _round()
    out = _run_to_step1(server, clients)
    routed = {addr: env.body for addr, env in out if isinstance(env.body, RoutedShares)}
    for v, body in routed.items():
        assert set(body.shares) == set(clients) - {v}
        for u, shares in body.shares.items():
            assert shares is server.distributions[u].ciphertexts[v]
    benign = [env.body for _, env in out if isinstance(env.body, BenignList)]
    assert len(benign) == 4 and benign[0].members == [1, 2, 3, 4]


def test_honest_round_reconstructs_exact_sum():
    values = [[1, -2, 3], [4, 5, -6], [-7, 8, 9], [10, -11, 12]]
    cfg, server, clients = _round(values=values)
    replies = _deliver(clients, _run_to_step1(server, clients))
    for a, env in replies:
        server.receive(a, env)
    out = server.step2()
    assert server.phase == Phase.DONE
    expected = [sum(col) % Q for col in zip(*values)]
    assert server.result.X == expected
    assert server.checks["sum_check_pass"] == 3
    _deliver(clients, out)
    assert all(c.result == server.result for c in clients.values())


def test_single_member_benign_list():
    cfg, server, clients = _round(n=3, t=1, t_s=0.2)
    replies = _deliver(clients, _run_to_step1(server, clients))
    assert len(server.u_b) == 1
    for a, env in replies:
        server.receive(a, env)
    server.step2()
    (only,) = server.u_b
    assert server.result.X == [embed(v) for v in clients[server.address[only]].update.flat()]


def test_malformed_distribution_is_removed():
    cfg, server, clients = _round()
    for a, c in clients.items():
        server.receive(a, c.register())
    dists = _deliver(clients, server.step0())
    for a, env in dists:
        if a == 2:
            env.body.submission.param_comms = list(reversed(env.body.submission.param_comms))
        server.receive(a, env)
    server.step1()
    assert server.removed == {2: "malformed share distribution"}
    assert 2 not in server.u_b


def test_global_share_outside_reconstruction_subset_is_harmless():
    # reconstruction uses the t lowest indices; a bad share from index 4 is never read
    base = ScenarioConfig(n=4, t=2, shape=[3], seed=1, t_s=1.0)
    honest = run_scenario(base)
    attacked = run_scenario(
        ScenarioConfig(n=4, t=2, shape=[3], seed=1, t_s=1.0, adversaries=[AdversarySpec(4, WrongGlobalShare())])
    )
    assert honest.ok and attacked.ok
    assert attacked.X == honest.X and attacked.attempts == 1 and not attacked.removed


def test_duplicate_global_share_first_wins():
    cfg, server, clients = _round()
    replies = _deliver(clients, _run_to_step1(server, clients))
    for a, env in replies:
        server.receive(a, env)
    first = server.global_shares[1]
    server.receive(1, Envelope(0, 1, GlobalShare(0, [(1, 1)] * 3)))
    assert server.global_shares[1] is first


def test_distribution_size_linear_in_params_and_clients():
    def size(n, p):
        ref = [[1] * p]
        cfg, server, clients = _round(n=n, t=2, values=[[0] * p] * n, ref=ref)
        for a, c in clients.items():
            server.receive(a, c.register())
        dists = _deliver(clients, server.step0())
        body = dists[0][1].body
        assert isinstance(body, ShareDistribution)
        return len(encode(Envelope(0, 1, RoutedShares(body.ciphertexts))))

    per_ct = 2 * 33
    per_share = 2 + 4 + 0  # sender id and parameter count per block
    assert size(3, 2) == 11 + 2 + 2 * (per_share + 2 * 32 * per_ct)
    assert size(3, 4) - size(3, 2) == 2 * 2 * 32 * per_ct
    assert size(5, 2) - size(3, 2) == 2 * (per_share + 2 * 32 * per_ct)


def test_apply_global_update():
    prev = [[1.0, -1.0], [0.5]]
    X = [embed(2 * 65536), embed(-65536), 0]
    assert apply_global_update(prev, X, 2) == [[2.0, -1.5], [0.5]]
    assert apply_global_update(prev, [0, 0, 0], 1) == prev
    with pytest.raises(ValueError):
        apply_global_update(prev, X[:2], 2)
    with pytest.raises(ValueError):
        apply_global_update(prev, X, 0)


def test_round_config_validation():
    with pytest.raises(ValueError):
        RoundConfig(3, 4, [2])
    with pytest.raises(ValueError):
        RoundConfig(3, 2, [])
    assert RoundConfig(3, 2, [2, 3]).p == 5


def test_client_ignores_foreign_senders():
    cfg, server, clients = _round()
    c = clients[1]
    assert c.handle(Envelope(0, 2, BenignList(0, [1, 2]))) == []
    assert c.handle(Envelope(1, SERVER, BenignList(0, [1, 2]))) == []
