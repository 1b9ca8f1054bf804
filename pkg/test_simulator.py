#!/usr/bin/env python3
"""Tests for the eBGP network model: topology loading, convergence and forwarding."""

import sys
from ipaddress import IPv4Address, IPv4Network
from pathlib import Path

import numpy as np
import pytest

from config_model import parse_config
from simulator import (
    EventKind,
    ForwardingOutcome,
    LinkSpec,
    Origin,
    RibEntry,
    RouteKind,
    Session,
    SessionState,
    TopologyError,
    apply_config,
    baseline_config,
    best_path_select,
    converge,
    enforce_max_prefix,
    events_from_jsonl,
    events_to_jsonl,
    fib_routes,
    forwarding_path,
    load_topology,
    parse_topology,
    probe_addresses,
    reset,
    snapshot_rib,
    tiebreak_sensitive,
)

ROOT = Path(__file__).resolve().parent
TINY5 = (ROOT / "topologies" / "tiny5.topo").read_text()
MULTIHOMED = (ROOT / "topologies" / "multihomed_dc.topo").read_text()

VIDEO_BLOCK = IPv4Network("208.65.152.0/22")
VIDEO_SUB = IPv4Network("208.65.152.0/24")


@pytest.fixture
def net():
    network = load_topology(TINY5)
    result, _ = converge(network)
    assert result.converged
    return network


def r1_text(net, extra_neighbor_lines="", extra_network_lines="", statics=""):
    text = net.baseline_texts["R1"]
    text = text.replace(
        " neighbor 172.16.0.2 remote-as 65002\n",
        " neighbor 172.16.0.2 remote-as 65002\n" + extra_neighbor_lines,
    )
    text += extra_network_lines
    if statics:
        text += "!\n" + statics
    return text


def hijack_text(net):
    return r1_text(
        net,
        extra_network_lines=" network 208.65.152.0 mask 255.255.255.0\n",
        statics="ip route 208.65.152.0 255.255.255.0 Null0\n",
    )


# --- Topology ---

@pytest.mark.parametrize("text", [
    "node A asn 1\n",
    "node A asn 0 router-id 1.1.1.1\n",
    "node A asn 1 router-id 1.1.1.1\nnode A asn 2 router-id 2.2.2.2\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 1.1.1.1\n",
    "node A asn 1 router-id 1.1.1.1 has 10.0.0.0/8\n",
    "node A asn 1 router-id 1.1.1.1\nlink A B subnet 172.16.0.0/30\n",
    "node A asn 1 router-id 1.1.1.1\nlink A A subnet 172.16.0.0/30\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 2.2.2.2\nlink A B subnet 172.16.0.1/32\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 2.2.2.2\nlink A B subnet 172.16.0.0/29\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 2.2.2.2\nlink A B subnet 172.16.0.0/24\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 2.2.2.2\nlink A B subnet 172.16.0.1/30\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 1 router-id 2.2.2.2\nlink A B subnet 172.16.0.0/30\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 2.2.2.2\nnode C asn 3 router-id 3.3.3.3\n"
    "link A B subnet 172.16.0.0/30\nlink B C subnet 172.16.0.0/29\n",
    "node A asn 1 router-id 1.1.1.1\nnode B asn 2 router-id 2.2.2.2\n"
    "link A B subnet 172.16.0.0/30\nlink B A subnet 172.16.0.4/30\n",
    "router A\n",
])
def test_parse_topology_rejects(text):
    with pytest.raises(TopologyError, match="topology line"):
        parse_topology(text)


def test_parse_topology_comments_and_owns():
    topology = parse_topology(TINY5)
    assert topology.names == ["R1", "R2", "R3", "R4", "R5"]
    assert topology.node("R2").owns == (IPv4Network("10.2.0.0/24"), IPv4Network("10.2.1.0/24"))
    assert topology.node("R5").asn == 36561
    assert len(topology.links) == 5
    with pytest.raises(KeyError):
        topology.node("R9")


def test_link_addresses():
    link = LinkSpec("A", "B", IPv4Network("172.16.0.0/30"))
    assert link.address_of("A") == IPv4Address("172.16.0.1")
    assert link.address_of("B") == IPv4Address("172.16.0.2")
    assert link.other("A") == "B"
    point_to_point = LinkSpec("A", "B", IPv4Network("10.0.0.4/31"))
    assert point_to_point.addresses == (IPv4Address("10.0.0.4"), IPv4Address("10.0.0.5"))


def test_baseline_config():
    cfg = baseline_config(parse_topology(TINY5), "R1")
    assert cfg.local_asn == 65001
    assert cfg.log_neighbor_changes
    assert [(str(n.peer_address), n.remote_asn) for n in cfg.neighbors] == [
        ("172.16.0.2", 65002), ("172.16.0.6", 65003),
    ]
    assert [str(n.prefix) for n in cfg.networks] == ["10.1.0.0/24"]
    assert not cfg.max_prefix


def test_baseline_texts_parse():
    network = load_topology(TINY5)
    for name, text in network.baseline_texts.items():
        assert parse_config(text)[0] == network.baseline_configs[name]


# --- Convergence ---

def test_initial_convergence(net):
    assert all(s.state is SessionState.ESTABLISHED for s in net.sessions.values())
    assert len(net.sessions) == 10
    owned = {p for n in net.topology.nodes for p in n.owns}
    for name in net.names:
        snapshot = snapshot_rib(net, name)
        assert {e.prefix for e in snapshot.best_entries()} == owned
        assert len(snapshot.best_entries()) == len(owned)


def test_best_path_toward_remote_origin(net):
    best = snapshot_rib(net, "R1").best_for(VIDEO_BLOCK)
    assert best.as_path == (65002, 65004, 36561)
    assert best.next_hop == IPv4Address("172.16.0.2")
    assert best.peer == "R2"
    assert best.origin is Origin.IGP


def test_router_id_breaks_equal_paths(net):
    entries = net.loc_rib["R1"][IPv4Network("10.4.0.0/24")]
    assert len(entries) == 2
    assert tiebreak_sensitive(entries)
    assert [e.peer for e in entries if e.best] == ["R2"]


def test_no_best_path_contains_own_asn(net):
    for name in net.names:
        snapshot = snapshot_rib(net, name)
        for entry in snapshot.entries:
            assert snapshot.local_asn not in entry.as_path


def test_converged_network_is_quiet(net):
    result, events = converge(net)
    assert result.converged
    assert result.rounds == 0
    assert events == []


def test_round_cap_exceeded():
    network = load_topology(TINY5)
    result, _ = converge(network, round_cap=0)
    assert not result.converged
    assert result.status == "RoundCapExceeded"
    assert (result.rounds, network.tick) == (0, 0)


def test_round_cap_bounds_executed_rounds():
    needed, _ = converge(load_topology(TINY5))
    assert needed.converged and needed.rounds > 0

    short = load_topology(TINY5)
    result, _ = converge(short, round_cap=needed.rounds)
    assert not result.converged
    assert result.rounds == needed.rounds
    assert short.tick == needed.rounds

    enough = load_topology(TINY5)
    result, _ = converge(enough, round_cap=needed.rounds + 1)
    assert result.converged
    assert enough.tick == needed.rounds + 1


def test_convergence_is_deterministic():
    texts = []
    logs = []
    for _ in range(2):
        network = load_topology(TINY5)
        _, events = converge(network)
        texts.append({n: snapshot_rib(network, n).text for n in network.names})
        logs.append([e.to_dict() for e in events])
    assert texts[0] == texts[1]
    assert logs[0] == logs[1]


def test_rib_text_marks_best(net):
    text = snapshot_rib(net, "R1").text
    assert "*> 208.65.152.0/22 172.16.0.2 0 0 65002 65004 36561 i" in text
    assert "*> 10.1.0.0/24 0.0.0.0 0 32768 i" in text


def test_multihomed_customer_learns_both_data_centers():
    network = load_topology(MULTIHOMED)
    result, _ = converge(network)
    assert result.converged
    snapshot = snapshot_rib(network, "customer")
    assert snapshot.best_for(IPv4Network("198.51.100.0/22")).as_path[-1] == 64701
    assert snapshot.best_for(IPv4Network("192.0.2.0/24")).as_path[-1] == 64702


def test_empty_network_converges_immediately():
    result, events = converge(load_topology(""))
    assert result.converged
    assert result.rounds == 0
    assert events == []


def test_two_routers_exchange_prefixes():
    network = load_topology(
        "node A asn 65001 router-id 1.1.1.1 owns 10.1.0.0/24\n"
        "node B asn 65002 router-id 2.2.2.2 owns 10.2.0.0/24\n"
        "link A B subnet 172.16.0.0/30\n"
    )
    result, _ = converge(network)
    assert result.converged
    assert result.rounds <= 3
    assert snapshot_rib(network, "A").best_for(IPv4Network("10.2.0.0/24")).as_path == (65002,)
    assert snapshot_rib(network, "B").best_for(IPv4Network("10.1.0.0/24")).as_path == (65001,)


def test_ring_of_three_uses_short_paths():
    network = load_topology(
        "node A asn 65001 router-id 1.1.1.1 owns 10.1.0.0/24\n"
        "node B asn 65002 router-id 2.2.2.2 owns 10.2.0.0/24\n"
        "node C asn 65003 router-id 3.3.3.3 owns 10.3.0.0/24\n"
        "link A B subnet 172.16.0.0/30\n"
        "link B C subnet 172.16.0.4/30\n"
        "link A C subnet 172.16.0.8/30\n"
    )
    result, _ = converge(network)
    assert result.converged
    assert result.rounds <= 3
    for name in network.names:
        snapshot = snapshot_rib(network, name)
        assert len(snapshot.best_entries()) == 3
        assert all(len(e.as_path) <= 2 for e in snapshot.entries)
        assert all(len(e.as_path) <= 1 for e in snapshot.best_entries())


# --- Decision process ---

def _reference_best(candidates):
    """Step through the decision process one attribute at a time."""
    pool = list(range(len(candidates)))
    steps = [
        lambda e: -e.weight,
        lambda e: len(e.as_path),
        lambda e: ["i", "e", "?"].index(e.origin.value),
        lambda e: int(e.peer_router_id),
        lambda e: int(e.next_hop),
    ]
    for step in steps:
        lowest = min(step(candidates[i]) for i in pool)
        pool = [i for i in pool if step(candidates[i]) == lowest]
        if len(pool) == 1:
            break
    return pool[0]


def _random_entry(rng, prefix):
    return RibEntry(
        prefix=prefix,
        next_hop=IPv4Address(int(rng.integers(1, 8))),
        as_path=tuple(int(a) for a in rng.integers(1, 5, size=int(rng.integers(0, 4)))),
        origin=list(Origin)[int(rng.integers(0, 3))],
        weight=int(rng.choice([0, 0, 100, 32768])),
        peer="P",
        peer_router_id=IPv4Address(int(rng.integers(1, 4))),
    )


def test_best_path_select_matches_reference():
    rng = np.random.default_rng(7)
    prefix = IPv4Network("10.0.0.0/8")
    for _ in range(10_000):
        candidates = [_random_entry(rng, prefix) for _ in range(int(rng.integers(1, 6)))]
        assert best_path_select(candidates) == _reference_best(candidates)


def test_best_path_select_requires_candidates():
    with pytest.raises(ValueError):
        best_path_select([])


def test_tiebreak_sensitive_needs_equal_prefix_steps():
    prefix = IPv4Network("10.0.0.0/8")
    short = RibEntry(prefix, IPv4Address("1.0.0.1"), (1,), Origin.IGP, 0, peer_router_id=IPv4Address("9.9.9.9"))
    long = RibEntry(prefix, IPv4Address("1.0.0.2"), (2, 3), Origin.IGP, 0, peer_router_id=IPv4Address("1.1.1.1"))
    assert not tiebreak_sensitive([short, long])
    assert tiebreak_sensitive([short, RibEntry(prefix, IPv4Address("1.0.0.2"), (2,), Origin.IGP, 0)])
    assert not tiebreak_sensitive([short])


# --- Maximum-prefix ---

def test_enforce_max_prefix_inclusive():
    session = Session("R1", "R2", SessionState.ESTABLISHED, limit=2)
    assert enforce_max_prefix(session, 2) is None
    assert session.received_prefix_count == 2
    event = enforce_max_prefix(session, 3, tick=9)
    assert event.kind is EventKind.NOTIFICATION
    assert (event.code, event.subcode) == (6, 1)
    assert (event.node, event.peer, event.tick) == ("R1", "R2", 9)
    assert session.state is SessionState.IDLE
    assert session.held_down


def test_enforce_max_prefix_without_limit():
    session = Session("R1", "R2", SessionState.ESTABLISHED)
    assert enforce_max_prefix(session, 10_000) is None


def test_max_prefix_violation_resets_session(net):
    text = r1_text(net, extra_neighbor_lines=" neighbor 172.16.0.2 maximum-prefix 1\n")
    applied = apply_config(net, "R1", text)
    assert applied[0].kind is EventKind.CONFIG_APPLIED
    downs = {(e.node, e.peer) for e in applied if e.kind is EventKind.SESSION_DOWN}
    assert downs == {("R1", "R2"), ("R2", "R1"), ("R1", "R3"), ("R3", "R1")}
    assert all(e in net.events for e in applied)

    result, events = converge(net)
    assert result.converged
    notifications = [e for e in events if e.kind is EventKind.NOTIFICATION]
    assert len(notifications) == 1
    assert (notifications[0].node, notifications[0].peer) == ("R1", "R2")
    assert (notifications[0].code, notifications[0].subcode) == (6, 1)

    session = net.sessions[("R1", "R2")]
    assert session.state is SessionState.IDLE
    assert session.held_down
    assert net.sessions[("R1", "R3")].state is SessionState.ESTABLISHED
    assert snapshot_rib(net, "R1").best_for(VIDEO_BLOCK).as_path == (65003, 65004, 36561)


def test_limit_at_received_count_keeps_session(net):
    text = r1_text(net, extra_neighbor_lines=" neighbor 172.16.0.2 maximum-prefix 4\n")
    apply_config(net, "R1", text)
    _, events = converge(net)
    assert not [e for e in events if e.kind is EventKind.NOTIFICATION]
    assert net.sessions[("R1", "R2")].state is SessionState.ESTABLISHED
    assert net.sessions[("R1", "R2")].received_prefix_count == 4


def _peer_with_prefixes(count):
    owns = " ".join(f"10.2.{k}.0/24" for k in range(count))
    return load_topology(
        "node A asn 65001 router-id 1.1.1.1 owns 10.1.0.0/24\n"
        f"node B asn 65002 router-id 2.2.2.2 owns {owns}\n"
        "link A B subnet 172.16.0.0/30\n"
    )


@pytest.mark.parametrize("limit", [1, 2, 5])
@pytest.mark.parametrize("extra", [0, 1])
def test_max_prefix_grid(limit, extra):
    network = _peer_with_prefixes(limit + extra)
    converge(network)
    text = network.baseline_texts["A"].replace(
        " neighbor 172.16.0.2 remote-as 65002\n",
        f" neighbor 172.16.0.2 remote-as 65002\n neighbor 172.16.0.2 maximum-prefix {limit}\n",
    )
    apply_config(network, "A", text)
    _, events = converge(network)

    notifications = [e for e in events if e.kind is EventKind.NOTIFICATION]
    assert len(notifications) == extra
    session = network.sessions[("A", "B")]
    if extra:
        assert (notifications[0].node, notifications[0].peer) == ("A", "B")
        assert session.state is SessionState.IDLE
        assert session.held_down
        _, again = converge(network)
        assert session.state is SessionState.IDLE
        assert not [e for e in again if e.kind is EventKind.SESSION_UP]
        assert not [e for e in snapshot_rib(network, "A").entries if e.peer == "B"]
    else:
        assert session.state is SessionState.ESTABLISHED
        assert session.received_prefix_count == limit
        assert not session.held_down


# --- Configuration deployment ---

def test_rejected_config_keeps_previous(net):
    before = net.config_texts["R1"]
    events = apply_config(net, "R1", "router bgp 65001\n neighbor bogus\n")
    assert [e.kind for e in events] == [EventKind.CONFIG_REJECTED]
    assert net.config_texts["R1"] == before
    assert net.sessions[("R1", "R2")].state is SessionState.ESTABLISHED


def test_apply_config_unknown_node(net):
    with pytest.raises(KeyError):
        apply_config(net, "R9", "router bgp 1\n")


def test_wrong_remote_as_keeps_session_idle(net):
    text = net.baseline_texts["R1"].replace("remote-as 65002", "remote-as 65099")
    apply_config(net, "R1", text)
    converge(net)
    assert net.sessions[("R1", "R2")].state is SessionState.IDLE
    assert net.sessions[("R2", "R1")].state is SessionState.IDLE
    assert snapshot_rib(net, "R1").best_for(VIDEO_BLOCK).peer == "R3"


def test_reset_restores_baseline(net):
    golden = {n: snapshot_rib(net, n).text for n in net.names}
    apply_config(net, "R1", hijack_text(net))
    converge(net)
    reset(net)
    assert net.events == []
    assert net.tick == 0
    assert net.configs == net.baseline_configs
    assert all(s.state is SessionState.IDLE for s in net.sessions.values())
    converge(net)
    assert {n: snapshot_rib(net, n).text for n in net.names} == golden


def _state(network):
    return (
        dict(network.configs),
        dict(network.config_texts),
        {k: (s.state, s.held_down, s.received_prefix_count) for k, s in network.sessions.items()},
        network.adj_rib_in,
        network.loc_rib,
        list(network.events),
        network.tick,
    )


def test_reset_on_fresh_network_is_noop():
    network = load_topology(TINY5)
    before = _state(network)
    reset(network)
    assert _state(network) == before


def test_reset_is_idempotent(net):
    apply_config(net, "R1", hijack_text(net))
    converge(net)
    reset(net)
    once = _state(net)
    reset(net)
    assert _state(net) == once
    assert once == _state(load_topology(TINY5))


# --- Forwarding ---

def test_forwarding_reaches_owner(net):
    result = forwarding_path(net, "R1", IPv4Address("208.65.154.1"))
    assert result.outcome is ForwardingOutcome.PATH
    assert result.nodes == ("R1", "R2", "R4", "R5")
    assert result.hops[-1].kind is RouteKind.CONNECTED
    assert result.delivered


def test_subprefix_hijack_blackholes_traffic(net):
    apply_config(net, "R1", hijack_text(net))
    converge(net)
    r4 = snapshot_rib(net, "R4")
    assert r4.origin_asn(r4.best_for(VIDEO_SUB)) == 65001

    hijacked = forwarding_path(net, "R4", IPv4Address("208.65.152.1"))
    assert hijacked.outcome is ForwardingOutcome.BLACKHOLED
    assert hijacked.nodes == ("R4", "R2", "R1")
    assert hijacked.hops[-1].kind is RouteKind.STATIC_NULL
    icmp = [e for e in net.events if e.kind is EventKind.ICMP_UNREACHABLE]
    assert icmp[-1].node == "R1"
    assert icmp[-1].src == "R4"

    untouched = forwarding_path(net, "R4", IPv4Address("208.65.154.1"))
    assert untouched.outcome is ForwardingOutcome.PATH
    assert untouched.nodes == ("R4", "R5")


def test_unreachable_destination(net):
    result = forwarding_path(net, "R1", IPv4Address("8.8.8.8"))
    assert result.outcome is ForwardingOutcome.UNREACHABLE
    assert result.nodes == ("R1",)
    assert result.describe() == "Unreachable[R1]"


def test_longest_prefix_match_matches_brute_force(net):
    apply_config(net, "R1", hijack_text(net))
    converge(net)
    routes = fib_routes(net, "R4")
    rng = np.random.default_rng(3)
    base = int(VIDEO_BLOCK.network_address)
    for offset in rng.integers(0, VIDEO_BLOCK.num_addresses, size=64):
        dst = IPv4Address(base + int(offset))
        expected = max((r for r in routes if dst in r.prefix), key=lambda r: r.prefix.prefixlen)
        assert forwarding_path(net, "R4", dst).hops[0].prefix == expected.prefix


def test_static_route_beats_bgp_for_same_prefix(net):
    text = r1_text(net, statics="ip route 10.4.0.0 255.255.255.0 Null0\n")
    apply_config(net, "R1", text)
    converge(net)
    kinds = {r.prefix: r.kind for r in fib_routes(net, "R1")}
    assert kinds[IPv4Network("10.4.0.0/24")] is RouteKind.STATIC_NULL
    assert kinds[IPv4Network("10.1.0.0/24")] is RouteKind.CONNECTED


def test_probe_addresses():
    assert probe_addresses(VIDEO_BLOCK) == [
        IPv4Address("208.65.152.1"), IPv4Address("208.65.153.1"),
        IPv4Address("208.65.154.1"), IPv4Address("208.65.155.1"),
    ]
    assert probe_addresses(IPv4Network("10.0.0.7/32")) == [IPv4Address("10.0.0.7")]
    assert len(probe_addresses(IPv4Network("10.0.0.6/31"))) == 2


def _random_topology(rng):
    size = int(rng.integers(2, 9))
    names = [f"N{i}" for i in range(size)]
    lines = [f"node {name} asn {65000 + i} router-id 10.255.0.{i + 1} owns 10.{i}.0.0/22"
             for i, name in enumerate(names)]
    edges = {(int(rng.integers(0, i)), i) for i in range(1, size)}
    for a in range(size):
        for b in range(a + 1, size):
            if rng.random() < 0.3:
                edges.add((a, b))
    for k, (a, b) in enumerate(sorted(edges)):
        lines.append(f"link {names[a]} {names[b]} subnet 172.16.{k // 64}.{(k % 64) * 4}/30")
    return "\n".join(lines) + "\n", names


def _reference_walk(network, src, dst):
    """Hop-by-hop walk using a linear scan for the longest matching prefix."""
    nodes, node = [], src
    while True:
        if node in nodes:
            return ForwardingOutcome.LOOP, tuple(nodes + [node])
        nodes.append(node)
        matching = [r for r in fib_routes(network, node) if dst in r.prefix]
        if not matching:
            return ForwardingOutcome.UNREACHABLE, tuple(nodes)
        route = max(matching, key=lambda r: r.prefix.prefixlen)
        if route.kind is RouteKind.CONNECTED:
            return ForwardingOutcome.PATH, tuple(nodes)
        if route.kind is RouteKind.STATIC_NULL:
            return ForwardingOutcome.BLACKHOLED, tuple(nodes)
        following = [l.other(node) for l in network.topology.links_of(node)
                     if l.address_of(l.other(node)) == route.next_hop]
        if not following:
            return ForwardingOutcome.UNREACHABLE, tuple(nodes)
        node = following[0]


def _check_random_topologies(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        text, names = _random_topology(rng)
        network = load_topology(text)
        converge(network)
        if rng.random() < 0.7:
            hijacker, victim = (int(i) for i in rng.choice(len(names), size=2, replace=False))
            block = int(rng.integers(0, 4))
            config = (network.baseline_texts[names[hijacker]]
                      + f" network 10.{victim}.{block}.0 mask 255.255.255.0\n"
                      + f"!\nip route 10.{victim}.{block}.0 255.255.255.0 Null0\n")
            assert apply_config(network, names[hijacker], config)[0].kind is EventKind.CONFIG_APPLIED
        result, _ = converge(network)
        assert result.converged
        for src in names:
            for i in range(len(names)):
                for dst in probe_addresses(IPv4Network(f"10.{i}.0.0/22")):
                    walked = forwarding_path(network, src, dst)
                    assert (walked.outcome, walked.nodes) == _reference_walk(network, src, dst), text


def test_forwarding_matches_reference_walk_on_random_topologies():
    _check_random_topologies(100, seed=11)


@pytest.mark.slow
def test_forwarding_matches_reference_walk_on_many_topologies():
    _check_random_topologies(1000, seed=12)


# --- Event log ---

def test_event_log_jsonl(net):
    apply_config(net, "R1", r1_text(net, extra_neighbor_lines=" neighbor 172.16.0.2 maximum-prefix 1\n"))
    converge(net)
    forwarding_path(net, "R1", IPv4Address("8.8.8.8"))
    restored = events_from_jsonl(events_to_jsonl(net.events))
    assert restored == net.events
    assert {e.kind for e in restored} >= {EventKind.NOTIFICATION, EventKind.ICMP_UNREACHABLE}


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
