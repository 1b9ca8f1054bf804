"""
Deterministic in-process model of an eBGP network.

Stands in for the emulated test bench: routers exchange routes over eBGP
sessions in synchronous rounds until their RIBs stop changing, enforce
maximum-prefix limits, and answer hop-by-hop forwarding queries using
longest-prefix match.
"""

import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import pytricia

from config_model import (
    MAX_ASN,
    Address,
    NeighborStmt,
    NetworkStmt,
    ParseError,
    Prefix,
    RouterConfig,
    parse_config,
    parse_prefix,
    prefix_contains,
    render_config,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
DEFAULT_ROUND_CAP = 100
LOCAL_WEIGHT = 32768
LEARNED_WEIGHT = 0
PROBE_DEPTH = 2
NOTIFICATION_CEASE = 6
SUBCODE_MAX_PREFIXES = 1
UNSPECIFIED = Address("0.0.0.0")


class TopologyError(ValueError):
    """The topology description is malformed or inconsistent."""


class SessionState(Enum):
    IDLE = "Idle"
    ESTABLISHED = "Established"


class Origin(Enum):
    IGP = "i"
    EGP = "e"
    INCOMPLETE = "?"

    @property
    def rank(self) -> int:
        return list(Origin).index(self)


class EventKind(Enum):
    SESSION_UP = "SessionUp"
    SESSION_DOWN = "SessionDown"
    NOTIFICATION = "Notification"
    PREFIX_ANNOUNCED = "PrefixAnnounced"
    PREFIX_WITHDRAWN = "PrefixWithdrawn"
    ICMP_UNREACHABLE = "IcmpUnreachable"
    CONFIG_APPLIED = "ConfigApplied"
    CONFIG_REJECTED = "ConfigRejected"


@dataclass(frozen=True)
class NetworkEvent:
    tick: int
    node: str
    kind: EventKind
    peer: Optional[str] = None
    prefix: Optional[Prefix] = None
    code: Optional[int] = None
    subcode: Optional[int] = None
    src: Optional[str] = None
    dst: Optional[Address] = None
    detail: str = ""

    def to_dict(self) -> dict:
        record = {"tick": self.tick, "node": self.node, "kind": self.kind.value}
        if self.peer is not None:
            record["peer"] = self.peer
        if self.prefix is not None:
            record["prefix"] = str(self.prefix)
        if self.code is not None:
            record["code"] = self.code
            record["subcode"] = self.subcode
        if self.src is not None:
            record["src"] = self.src
        if self.dst is not None:
            record["dst"] = str(self.dst)
        if self.detail:
            record["detail"] = self.detail
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "NetworkEvent":
        return cls(
            tick=record["tick"],
            node=record["node"],
            kind=EventKind(record["kind"]),
            peer=record.get("peer"),
            prefix=parse_prefix(record["prefix"]) if "prefix" in record else None,
            code=record.get("code"),
            subcode=record.get("subcode"),
            src=record.get("src"),
            dst=Address(record["dst"]) if "dst" in record else None,
            detail=record.get("detail", ""),
        )


def events_to_jsonl(events: Iterable[NetworkEvent]) -> str:
    return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in events)


def export_events(events: Iterable[NetworkEvent], path: str) -> None:
    """Write the event log as newline-delimited JSON records."""
    Path(path).write_text(events_to_jsonl(events), encoding="utf-8")


def events_from_jsonl(text: str) -> List[NetworkEvent]:
    return [NetworkEvent.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


# --- Topology ---

@dataclass(frozen=True)
class NodeSpec:
    name: str
    asn: int
    router_id: Address
    owns: Tuple[Prefix, ...] = ()


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    subnet: Prefix

    @property
    def addresses(self) -> Tuple[Address, Address]:
        """Link addresses; the lower one belongs to the lexicographically smaller node."""
        base = self.subnet.network_address
        if self.subnet.prefixlen == 31:
            return base, base + 1
        return base + 1, base + 2

    def address_of(self, node: str) -> Address:
        low, high = self.addresses
        return low if node == min(self.a, self.b) else high

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class Topology:
    nodes: Tuple[NodeSpec, ...]
    links: Tuple[LinkSpec, ...]

    def node(self, name: str) -> NodeSpec:
        for spec in self.nodes:
            if spec.name == name:
                return spec
        raise KeyError(f"unknown node {name!r}")

    def links_of(self, name: str) -> List[LinkSpec]:
        return sorted((l for l in self.links if name in (l.a, l.b)), key=lambda l: l.other(name))

    @property
    def names(self) -> List[str]:
        return sorted(n.name for n in self.nodes)

    def to_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(n.name for n in self.nodes)
        graph.add_edges_from((l.a, l.b) for l in self.links)
        return graph


def _topology_error(lineno: int, message: str) -> TopologyError:
    return TopologyError(f"topology line {lineno}: {message}")


def parse_topology(text: str) -> Topology:
    """
    Parse the line-oriented topology format:

        node <name> asn <n> router-id <ip> [owns <prefix>...]
        link <a> <b> subnet <prefix>
    """
    nodes: Dict[str, NodeSpec] = {}
    links: List[LinkSpec] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            if words[0] == "node":
                if len(words) < 6 or words[2] != "asn" or words[4] != "router-id":
                    raise _topology_error(lineno, f"malformed node line {raw!r}")
                name = words[1]
                if name in nodes:
                    raise _topology_error(lineno, f"duplicate node {name}")
                asn = int(words[3])
                if not 1 <= asn <= MAX_ASN:
                    raise _topology_error(lineno, f"ASN {asn} out of range")
                router_id = Address(words[5])
                owns: Tuple[Prefix, ...] = ()
                if len(words) > 6:
                    if words[6] != "owns":
                        raise _topology_error(lineno, f"expected 'owns', got {words[6]!r}")
                    owns = tuple(parse_prefix(p) for p in words[7:])
                if any(n.router_id == router_id for n in nodes.values()):
                    raise _topology_error(lineno, f"duplicate router-id {router_id}")
                nodes[name] = NodeSpec(name, asn, router_id, owns)
            elif words[0] == "link":
                if len(words) != 5 or words[3] != "subnet":
                    raise _topology_error(lineno, f"malformed link line {raw!r}")
                a, b = sorted(words[1:3])
                for end in (a, b):
                    if end not in nodes:
                        raise _topology_error(lineno, f"dangling link endpoint {end}")
                if a == b:
                    raise _topology_error(lineno, f"self-link on {a}")
                subnet = parse_prefix(words[4])
                if subnet.prefixlen not in (30, 31):
                    raise _topology_error(lineno, f"link subnet {subnet} must be a /30 or /31")
                for other in links:
                    if other.subnet.overlaps(subnet):
                        raise _topology_error(lineno, f"link subnet {subnet} overlaps {other.subnet}")
                    if (other.a, other.b) == (a, b):
                        raise _topology_error(lineno, f"second link between {a} and {b}")
                if nodes[a].asn == nodes[b].asn:
                    raise _topology_error(lineno, f"{a} and {b} share AS{nodes[a].asn}; iBGP is not modeled")
                links.append(LinkSpec(a, b, subnet))
            else:
                raise _topology_error(lineno, f"unknown directive {words[0]!r}")
        except TopologyError:
            raise
        except ValueError as exc:
            raise _topology_error(lineno, str(exc))

    topology = Topology(tuple(nodes.values()), tuple(links))
    linked = {n for l in links for n in (l.a, l.b)}
    for name in topology.names:
        if name not in linked:
            logger.warning("node %s has no links", name)
    if len(nodes) > 1 and not nx.is_connected(topology.to_graph()):
        logger.warning("topology graph is not connected")
    return topology


def baseline_config(topology: Topology, name: str) -> RouterConfig:
    """Initial configuration of a node: neighbors from links, networks from owned prefixes."""
    spec = topology.node(name)
    neighbors = []
    for link in topology.links_of(name):
        peer = topology.node(link.other(name))
        neighbors.append(NeighborStmt(link.address_of(peer.name), peer.asn))
    return RouterConfig(
        local_asn=spec.asn,
        router_id=spec.router_id,
        neighbors=tuple(neighbors),
        networks=tuple(NetworkStmt(p) for p in spec.owns),
        log_neighbor_changes=True,
    )


# --- Routing state ---

@dataclass(frozen=True)
class RibEntry:
    prefix: Prefix
    next_hop: Address
    as_path: Tuple[int, ...]
    origin: Origin
    weight: int
    best: bool = False
    peer: Optional[str] = None
    peer_router_id: Address = UNSPECIFIED

    @property
    def is_local(self) -> bool:
        return self.peer is None

    def render(self) -> str:
        status = "*>" if self.best else "*"
        path = " ".join(str(asn) for asn in self.as_path)
        parts = [status, str(self.prefix), str(self.next_hop), "0", str(self.weight)]
        if path:
            parts.append(path)
        parts.append(self.origin.value)
        return " ".join(parts)


@dataclass(frozen=True)
class RibSnapshot:
    node: str
    local_asn: int
    entries: Tuple[RibEntry, ...] = ()

    @property
    def text(self) -> str:
        return "".join(e.render() + "\n" for e in self.entries)

    def best_entries(self) -> List[RibEntry]:
        return [e for e in self.entries if e.best]

    def prefixes(self) -> List[Prefix]:
        return sorted({e.prefix for e in self.entries}, key=_prefix_key)

    def origin_asn(self, entry: RibEntry) -> int:
        return entry.as_path[-1] if entry.as_path else self.local_asn

    def best_for(self, prefix: Prefix) -> Optional[RibEntry]:
        for entry in self.entries:
            if entry.best and entry.prefix == prefix:
                return entry
        return None


@dataclass
class Session:
    local: str
    peer: str
    state: SessionState = SessionState.IDLE
    received_prefix_count: int = 0
    limit: Optional[int] = None
    held_down: bool = False


@dataclass(frozen=True)
class ConvergenceResult:
    converged: bool
    rounds: int

    @property
    def status(self) -> str:
        return "Converged" if self.converged else "RoundCapExceeded"


def _prefix_key(prefix: Prefix) -> Tuple[int, int]:
    return int(prefix.network_address), prefix.prefixlen


class Network:
    """Mutable world state of one simulated network; single-threaded."""

    def __init__(self, topology: Topology):
        self.topology = topology
        self.baseline_configs: Dict[str, RouterConfig] = {
            name: baseline_config(topology, name) for name in topology.names
        }
        self.baseline_texts: Dict[str, str] = {
            name: render_config(cfg) for name, cfg in self.baseline_configs.items()
        }
        self.address_owner: Dict[Address, Tuple[str, LinkSpec]] = {}
        for link in topology.links:
            for name in (link.a, link.b):
                self.address_owner[link.address_of(name)] = (name, link)
        self.sessions: Dict[Tuple[str, str], Session] = {}
        for link in topology.links:
            self.sessions[(link.a, link.b)] = Session(link.a, link.b)
            self.sessions[(link.b, link.a)] = Session(link.b, link.a)
        self.configs: Dict[str, RouterConfig] = {}
        self.config_texts: Dict[str, str] = {}
        self.adj_rib_in: Dict[str, Dict[str, Dict[Prefix, RibEntry]]] = {}
        self.loc_rib: Dict[str, Dict[Prefix, Tuple[RibEntry, ...]]] = {}
        self.events: List[NetworkEvent] = []
        self.tick = 0
        self.last_convergence: Optional[ConvergenceResult] = None
        self._fib: Dict[str, pytricia.PyTricia] = {}
        self._restore()

    def _restore(self) -> None:
        self.configs = dict(self.baseline_configs)
        self.config_texts = dict(self.baseline_texts)
        for session in self.sessions.values():
            session.state = SessionState.IDLE
            session.received_prefix_count = 0
            session.limit = None
            session.held_down = False
        self.adj_rib_in = {name: {} for name in self.topology.names}
        self.loc_rib = {name: {} for name in self.topology.names}
        self.events = []
        self.tick = 0
        self.last_convergence = None
        self._fib = {}

    @property
    def names(self) -> List[str]:
        return self.topology.names

    def asn_of(self, name: str) -> int:
        return self.topology.node(name).asn

    def router_id_of(self, name: str) -> Address:
        return self.configs[name].router_id or self.topology.node(name).router_id

    def link_between(self, a: str, b: str) -> LinkSpec:
        for link in self.topology.links_of(a):
            if link.other(a) == b:
                return link
        raise KeyError(f"no link between {a} and {b}")

    def peer_address(self, local: str, peer: str) -> Address:
        """Address local uses to reach peer (the peer's end of their link)."""
        return self.link_between(local, peer).address_of(peer)

    def sessions_of(self, name: str) -> List[Session]:
        return [s for (local, _), s in sorted(self.sessions.items()) if local == name]


# --- Operations ---

def load_topology(text: str) -> Network:
    """Build a Network from a topology description; all sessions start Idle."""
    network = Network(parse_topology(text))
    logger.info("loaded topology: %d nodes, %d links",
                len(network.topology.nodes), len(network.topology.links))
    return network


def load_topology_file(path: str) -> Network:
    return load_topology(Path(path).read_text(encoding="utf-8"))


def _event(net: Network, node: str, kind: EventKind, **attrs) -> NetworkEvent:
    return NetworkEvent(tick=net.tick, node=node, kind=kind, **attrs)


def _flush(net: Network, buffer: List[NetworkEvent]) -> List[NetworkEvent]:
    ordered = sorted(buffer, key=lambda e: (e.tick, e.node))
    net.events.extend(ordered)
    return ordered


def _tear_down(net: Network, local: str, peer: str, buffer: List[NetworkEvent],
               hold: bool = False, withdraw_events: bool = False) -> None:
    for a, b in ((local, peer), (peer, local)):
        session = net.sessions[(a, b)]
        was_up = session.state is SessionState.ESTABLISHED
        session.state = SessionState.IDLE
        session.received_prefix_count = 0
        session.held_down = session.held_down or hold
        removed = net.adj_rib_in[a].pop(b, {})
        if was_up:
            buffer.append(_event(net, a, EventKind.SESSION_DOWN, peer=b))
        if withdraw_events:
            for prefix in sorted(removed, key=_prefix_key):
                buffer.append(_event(net, a, EventKind.PREFIX_WITHDRAWN, peer=b, prefix=prefix))


def apply_config(net: Network, node: str, text: str) -> List[NetworkEvent]:
    """
    Deploy configuration text to a node and refresh it.

    A parse failure keeps the old configuration and yields ConfigRejected;
    success replaces the configuration and drops the node's sessions.
    """
    if node not in net.configs:
        raise KeyError(f"unknown node {node!r}")
    net.tick += 1
    buffer: List[NetworkEvent] = []
    try:
        cfg, _ = parse_config(text)
    except ParseError as exc:
        buffer.append(_event(net, node, EventKind.CONFIG_REJECTED, detail=str(exc)))
        logger.debug("config rejected on %s: %s", node, exc)
        return _flush(net, buffer)
    net.configs[node] = cfg
    net.config_texts[node] = text
    net._fib = {}
    applied = [_event(net, node, EventKind.CONFIG_APPLIED)]
    downs: List[NetworkEvent] = []
    for session in net.sessions_of(node):
        if session.state is SessionState.ESTABLISHED:
            _tear_down(net, node, session.peer, downs)
        else:
            net.adj_rib_in[node].pop(session.peer, None)
            net.adj_rib_in[session.peer].pop(node, None)
    net.events.extend(applied + downs)
    return applied + downs


def best_path_select(candidates: Sequence[RibEntry]) -> int:
    """
    Index of the best route among candidates for one prefix.

    Ranks by highest weight, shortest AS path, lowest origin, lowest peer
    router-id, then lowest next hop.
    """
    if not candidates:
        raise ValueError("best_path_select needs at least one candidate")
    return min(range(len(candidates)), key=lambda i: (_rank_key(candidates[i]), i))


def _rank_key(entry: RibEntry) -> Tuple[int, int, int, int, int]:
    return (-entry.weight, len(entry.as_path), entry.origin.rank,
            int(entry.peer_router_id), int(entry.next_hop))


def tiebreak_sensitive(candidates: Sequence[RibEntry]) -> bool:
    """True when the router-id (or later) step decided the winner."""
    if len(candidates) < 2:
        return False
    best = _rank_key(candidates[best_path_select(candidates)])[:3]
    return sum(1 for c in candidates if _rank_key(c)[:3] == best) > 1


def enforce_max_prefix(session: Session, incoming_count: int, tick: int = 0) -> Optional[NetworkEvent]:
    """
    Check an incoming prefix count against the session's limit.

    The limit is inclusive. When exceeded the session is torn down to Idle
    and held down; the returned Notification is Cease / Maximum Number of
    Prefixes Reached.
    """
    if session.limit is None or incoming_count <= session.limit:
        session.received_prefix_count = incoming_count
        return None
    session.state = SessionState.IDLE
    session.received_prefix_count = 0
    session.held_down = True
    return NetworkEvent(
        tick=tick, node=session.local, kind=EventKind.NOTIFICATION, peer=session.peer,
        code=NOTIFICATION_CEASE, subcode=SUBCODE_MAX_PREFIXES,
        detail=f"{incoming_count} prefixes exceed limit {session.limit}",
    )


def _mutually_configured(net: Network, a: str, b: str) -> bool:
    cfg_a, cfg_b = net.configs[a], net.configs[b]
    if cfg_a.local_asn == cfg_b.local_asn:
        return False
    n_ab = cfg_a.neighbor(net.peer_address(a, b))
    n_ba = cfg_b.neighbor(net.peer_address(b, a))
    return (n_ab is not None and n_ba is not None
            and n_ab.remote_asn == cfg_b.local_asn and n_ba.remote_asn == cfg_a.local_asn)


def local_originations(net: Network, node: str) -> Dict[Prefix, RibEntry]:
    """Network statements backed by a covering owned prefix or static route."""
    cfg = net.configs[node]
    covering = list(net.topology.node(node).owns) + [r.prefix for r in cfg.static_routes]
    routes = {}
    for stmt in cfg.networks:
        if any(prefix_contains(c, stmt.prefix) for c in covering):
            routes[stmt.prefix] = RibEntry(stmt.prefix, UNSPECIFIED, (), Origin.IGP, LOCAL_WEIGHT)
    return routes


def _session_phase(net: Network, buffer: List[NetworkEvent]) -> bool:
    changed = False
    for link in sorted(net.topology.links, key=lambda l: (l.a, l.b)):
        forward, backward = net.sessions[(link.a, link.b)], net.sessions[(link.b, link.a)]
        mutual = _mutually_configured(net, link.a, link.b)
        if forward.state is SessionState.IDLE:
            if mutual and not (forward.held_down or backward.held_down):
                for session in (forward, backward):
                    neighbor = net.configs[session.local].neighbor(net.peer_address(session.local, session.peer))
                    session.state = SessionState.ESTABLISHED
                    session.limit = neighbor.max_prefix_limit
                    session.received_prefix_count = 0
                    buffer.append(_event(net, session.local, EventKind.SESSION_UP, peer=session.peer))
                changed = True
        elif not mutual:
            _tear_down(net, link.a, link.b, buffer, withdraw_events=True)
            changed = True
    return changed


def _advertise_phase(net: Network, buffer: List[NetworkEvent]) -> bool:
    outgoing: Dict[str, List[RibEntry]] = {
        name: [e for ents in net.loc_rib[name].values() for e in ents if e.best]
        for name in net.names
    }
    changed = False
    for (receiver, sender), session in sorted(net.sessions.items()):
        if session.state is not SessionState.ESTABLISHED:
            continue
        own_asn = net.configs[receiver].local_asn
        sender_asn = net.configs[sender].local_asn
        next_hop = net.peer_address(receiver, sender)
        router_id = net.router_id_of(sender)
        accepted: Dict[Prefix, RibEntry] = {}
        for best in outgoing[sender]:
            path = (sender_asn,) + best.as_path
            if own_asn in path:
                continue
            accepted[best.prefix] = RibEntry(best.prefix, next_hop, path, best.origin,
                                             LEARNED_WEIGHT, peer=sender, peer_router_id=router_id)
        notification = enforce_max_prefix(session, len(accepted), net.tick)
        if notification is not None:
            logger.debug("max-prefix exceeded on %s from %s", receiver, sender)
            buffer.append(notification)
            _tear_down(net, receiver, sender, buffer, hold=True, withdraw_events=True)
            # enforce_max_prefix already idled the local half; record its SessionDown too
            buffer.append(_event(net, receiver, EventKind.SESSION_DOWN, peer=sender))
            changed = True
            continue
        previous = net.adj_rib_in[receiver].get(sender, {})
        if accepted != previous:
            changed = True
            for prefix in sorted(set(accepted) | set(previous), key=_prefix_key):
                if prefix not in accepted:
                    buffer.append(_event(net, receiver, EventKind.PREFIX_WITHDRAWN, peer=sender, prefix=prefix))
                elif previous.get(prefix) != accepted[prefix]:
                    buffer.append(_event(net, receiver, EventKind.PREFIX_ANNOUNCED, peer=sender, prefix=prefix))
            net.adj_rib_in[receiver][sender] = accepted
    return changed


def _select_phase(net: Network, buffer: List[NetworkEvent]) -> bool:
    changed = False
    for name in net.names:
        local = local_originations(net, name)
        old_local = {p for p, ents in net.loc_rib[name].items() if any(e.is_local for e in ents)}
        candidates: Dict[Prefix, List[RibEntry]] = {p: [e] for p, e in local.items()}
        for peer in sorted(net.adj_rib_in[name]):
            for prefix, entry in net.adj_rib_in[name][peer].items():
                candidates.setdefault(prefix, []).append(entry)
        table: Dict[Prefix, Tuple[RibEntry, ...]] = {}
        for prefix in sorted(candidates, key=_prefix_key):
            entries = sorted(candidates[prefix], key=_rank_key)
            winner = best_path_select(entries)
            table[prefix] = tuple(replace(e, best=(i == winner)) for i, e in enumerate(entries))
        for prefix in sorted(set(local) - old_local, key=_prefix_key):
            buffer.append(_event(net, name, EventKind.PREFIX_ANNOUNCED, prefix=prefix))
        for prefix in sorted(old_local - set(local), key=_prefix_key):
            buffer.append(_event(net, name, EventKind.PREFIX_WITHDRAWN, prefix=prefix))
        if table != net.loc_rib[name]:
            net.loc_rib[name] = table
            changed = True
    return changed


def converge(net: Network, round_cap: int = DEFAULT_ROUND_CAP) -> Tuple[ConvergenceResult, List[NetworkEvent]]:
    """
    Run synchronous rounds (sessions, advertise, select) until nothing changes.

    At most round_cap rounds run, counting the quiet round that confirms
    convergence. Returns Converged with the number of rounds that changed
    state, or RoundCapExceeded(rounds=round_cap) when the cap is used up.
    """
    emitted: List[NetworkEvent] = []
    rounds = 0
    result = None
    while result is None:
        if rounds >= round_cap:
            result = ConvergenceResult(False, rounds)
            break
        net.tick += 1
        buffer: List[NetworkEvent] = []
        changed = _session_phase(net, buffer)
        changed = _advertise_phase(net, buffer) or changed
        changed = _select_phase(net, buffer) or changed
        emitted.extend(_flush(net, buffer))
        if not changed:
            result = ConvergenceResult(True, rounds)
        else:
            rounds += 1
    net._fib = {}
    net.last_convergence = result
    if not result.converged:
        logger.warning("round cap %d exceeded; routing may oscillate", round_cap)
    return result, emitted


def snapshot_rib(net: Network, node: str) -> RibSnapshot:
    """Structured and textual view of a router's RIB."""
    entries = []
    for prefix in sorted(net.loc_rib[node], key=_prefix_key):
        ranked = sorted(net.loc_rib[node][prefix], key=lambda e: (not e.best, _rank_key(e)))
        entries.extend(ranked)
    return RibSnapshot(node, net.configs[node].local_asn, tuple(entries))


def reset(net: Network) -> None:
    """Restore the initial configurations and clear all routing state and the event log."""
    net._restore()
    logger.debug("network reset to baseline")


# --- Forwarding ---

class ForwardingOutcome(Enum):
    PATH = "Path"
    BLACKHOLED = "Blackholed"
    UNREACHABLE = "Unreachable"
    LOOP = "ForwardingLoop"


class RouteKind(Enum):
    CONNECTED = "connected"
    STATIC_NULL = "static-null"
    STATIC = "static"
    BGP = "bgp"


@dataclass(frozen=True)
class FibRoute:
    prefix: Prefix
    kind: RouteKind
    next_hop: Optional[Address] = None


@dataclass(frozen=True)
class Hop:
    node: str
    prefix: Optional[Prefix]
    kind: Optional[RouteKind]


@dataclass(frozen=True)
class ForwardingResult:
    outcome: ForwardingOutcome
    hops: Tuple[Hop, ...]

    @property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(h.node for h in self.hops)

    @property
    def terminal(self) -> str:
        return self.hops[-1].node

    @property
    def delivered(self) -> bool:
        return self.outcome is ForwardingOutcome.PATH

    def describe(self) -> str:
        return f"{self.outcome.value}[{' > '.join(self.nodes)}]"


def fib_routes(net: Network, node: str) -> List[FibRoute]:
    """Forwarding entries of a router; on equal prefixes connected beats static beats BGP."""
    routes: Dict[Prefix, FibRoute] = {}
    for prefix, entries in net.loc_rib[node].items():
        for entry in entries:
            if entry.best and not entry.is_local:
                routes[prefix] = FibRoute(prefix, RouteKind.BGP, entry.next_hop)
    for route in net.configs[node].static_routes:
        kind = RouteKind.STATIC_NULL if route.is_null else RouteKind.STATIC
        routes[route.prefix] = FibRoute(route.prefix, kind, route.next_hop)
    for prefix in net.topology.node(node).owns:
        routes[prefix] = FibRoute(prefix, RouteKind.CONNECTED)
    return [routes[p] for p in sorted(routes, key=_prefix_key)]


def _fib(net: Network, node: str) -> pytricia.PyTricia:
    if node not in net._fib:
        table = pytricia.PyTricia(32)
        for route in fib_routes(net, node):
            table[str(route.prefix)] = route
        net._fib[node] = table
    return net._fib[node]


def _next_router(net: Network, node: str, next_hop: Optional[Address]) -> Optional[str]:
    owner = net.address_owner.get(next_hop) if next_hop is not None else None
    if owner is None:
        return None
    name, link = owner
    return name if node in (link.a, link.b) and name != node else None


def forwarding_path(net: Network, src: str, dst: Address) -> ForwardingResult:
    """
    Walk hop by hop from src toward dst using longest-prefix match.

    Blackholed and Unreachable outcomes log an IcmpUnreachable event at the
    router that dropped the packet.
    """
    dst = Address(dst)
    hops: List[Hop] = []
    visited = set()
    node = src
    while True:
        if node in visited:
            return ForwardingResult(ForwardingOutcome.LOOP, tuple(hops) + (Hop(node, None, None),))
        visited.add(node)
        route = _fib(net, node).get(str(dst))
        if route is None:
            hops.append(Hop(node, None, None))
            return _drop(net, src, dst, hops, ForwardingOutcome.UNREACHABLE)
        hops.append(Hop(node, route.prefix, route.kind))
        if route.kind is RouteKind.CONNECTED:
            return ForwardingResult(ForwardingOutcome.PATH, tuple(hops))
        if route.kind is RouteKind.STATIC_NULL:
            return _drop(net, src, dst, hops, ForwardingOutcome.BLACKHOLED)
        following = _next_router(net, node, route.next_hop)
        if following is None:
            return _drop(net, src, dst, hops, ForwardingOutcome.UNREACHABLE)
        node = following


def _drop(net: Network, src: str, dst: Address, hops: List[Hop],
          outcome: ForwardingOutcome) -> ForwardingResult:
    event = _event(net, hops[-1].node, EventKind.ICMP_UNREACHABLE, src=src, dst=dst,
                   detail=outcome.value)
    net.events.append(event)
    return ForwardingResult(outcome, tuple(hops))


def probe_addresses(prefix: Prefix, depth: int = PROBE_DEPTH) -> List[Address]:
    """One probe address per sub-block `depth` levels below prefix."""
    depth = min(depth, 32 - prefix.prefixlen)
    probes = []
    for block in prefix.subnets(prefixlen_diff=depth):
        probes.append(block.network_address + 1 if block.num_addresses > 2 else block.network_address)
    return probes


def probe_keys(net: Network) -> List[Tuple[str, Address]]:
    """(src, dst) pairs covering every owned prefix from every router."""
    owned = sorted({p for n in net.topology.nodes for p in n.owns}, key=_prefix_key)
    dsts = [a for p in owned for a in probe_addresses(p)]
    return [(src, dst) for src in net.names for dst in dsts]


def reachability(net: Network, keys: Sequence[Tuple[str, Address]]) -> Dict[Tuple[str, Address], ForwardingResult]:
    return {key: forwarding_path(net, key[0], key[1]) for key in keys}
