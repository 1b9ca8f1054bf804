"""
BGP configuration model.

Parses Cisco-style `router bgp` configuration text into a grammar derivation
tree and a RouterConfig value, renders RouterConfig back to canonical text,
and provides the IPv4 prefix algebra the rest of the fuzzer relies on.
"""

import ipaddress
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

# --- Configuration ---
MAX_ASN = 4294967295
MAX_PREFIX_LIMIT = 4294967295
NULL_SINK = "Null0"
INDENT = " "

Prefix = ipaddress.IPv4Network
Address = ipaddress.IPv4Address
Path = Tuple[int, ...]

_IPV4_RE = re.compile(
    r"^(25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)(\.(25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)){3}$"
)
_DECIMAL_RE = re.compile(r"^[1-9]\d*$")
_TOKEN_RE = re.compile(r"[ \t]+|[^ \t\n]+")


class PrefixError(ValueError):
    """Raised for malformed or non-canonical prefixes."""


class ParseError(ValueError):
    """Configuration text does not conform to the BGP configuration grammar."""

    def __init__(self, message: str, line: int = 0, column: int = 0, token: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        super().__init__(f"line {line}, column {column}: {message} (token {token!r})")


# --- Prefix algebra ---

def mask_to_length(mask: str) -> int:
    """Convert a dotted netmask to its prefix length, rejecting non-contiguous masks."""
    if not _IPV4_RE.match(mask):
        raise PrefixError(f"malformed mask {mask!r}")
    value = int(Address(mask))
    inverted = ~value & 0xFFFFFFFF
    if inverted & (inverted + 1):
        raise PrefixError(f"non-contiguous mask {mask}")
    return 32 - inverted.bit_length()


def length_to_mask(masklen: int) -> str:
    """Dotted netmask for a prefix length."""
    if not 0 <= masklen <= 32:
        raise PrefixError(f"mask length {masklen} out of range")
    return str(Address((0xFFFFFFFF << (32 - masklen)) & 0xFFFFFFFF))


def make_prefix(address: str, masklen: int) -> Prefix:
    """Build a canonical prefix; host bits set below masklen is an error."""
    if not _IPV4_RE.match(address):
        raise PrefixError(f"malformed address {address!r}")
    if not 0 <= masklen <= 32:
        raise PrefixError(f"mask length {masklen} out of range")
    try:
        return ipaddress.IPv4Network(f"{address}/{masklen}", strict=True)
    except ValueError:
        raise PrefixError(f"{address}/{masklen} has host bits set")


def parse_prefix(text: str) -> Prefix:
    """
    Parse "a.b.c.d/n" or "a.b.c.d mask m.m.m.m" into a canonical Prefix.

    Non-canonical input is rejected rather than repaired.
    """
    text = text.strip()
    if "/" in text:
        address, _, length = text.partition("/")
        if not _DECIMAL_RE.match(length) and length != "0":
            raise PrefixError(f"malformed mask length in {text!r}")
        return make_prefix(address, int(length))
    parts = text.split()
    if len(parts) == 3 and parts[1] == "mask":
        return make_prefix(parts[0], mask_to_length(parts[2]))
    raise PrefixError(f"malformed prefix {text!r}")


def prefix_contains(outer: Prefix, inner: Prefix) -> bool:
    """True iff inner's address range lies inside outer's."""
    return inner.subnet_of(outer)


def prefix_mask(prefix: Prefix) -> str:
    return str(prefix.netmask)


# --- Statements ---

@dataclass(frozen=True)
class NeighborStmt:
    peer_address: Address
    remote_asn: int
    max_prefix_limit: Optional[int] = None

    def __post_init__(self):
        if self.max_prefix_limit is not None and self.max_prefix_limit < 1:
            raise ValueError(f"maximum-prefix limit must be >= 1, got {self.max_prefix_limit}")

    def render(self) -> List[str]:
        lines = [f"{INDENT}neighbor {self.peer_address} remote-as {self.remote_asn}"]
        if self.max_prefix_limit is not None:
            lines.append(MaxPrefixStmt(self.peer_address, self.max_prefix_limit).render())
        return lines


@dataclass(frozen=True)
class MaxPrefixStmt:
    peer_address: Address
    limit: int

    def __post_init__(self):
        if not 1 <= self.limit <= MAX_PREFIX_LIMIT:
            raise ValueError(f"maximum-prefix limit {self.limit} out of range")

    def render(self) -> str:
        return f"{INDENT}neighbor {self.peer_address} maximum-prefix {self.limit}"


@dataclass(frozen=True)
class NetworkStmt:
    prefix: Prefix

    def render(self) -> str:
        return f"{INDENT}network {self.prefix.network_address} mask {prefix_mask(self.prefix)}"


@dataclass(frozen=True)
class StaticRouteStmt:
    """`ip route <addr> <mask> Null0|<next-hop>`; target None means the null sink."""
    prefix: Prefix
    next_hop: Optional[Address] = None

    @property
    def is_null(self) -> bool:
        return self.next_hop is None

    def render(self) -> str:
        target = NULL_SINK if self.next_hop is None else str(self.next_hop)
        return f"ip route {self.prefix.network_address} {prefix_mask(self.prefix)} {target}"


Statement = Union[NeighborStmt, MaxPrefixStmt, NetworkStmt, StaticRouteStmt]


@dataclass(frozen=True)
class RouterConfig:
    local_asn: int
    router_id: Optional[Address] = None
    neighbors: Tuple[NeighborStmt, ...] = ()
    networks: Tuple[NetworkStmt, ...] = ()
    static_routes: Tuple[StaticRouteStmt, ...] = ()
    log_neighbor_changes: bool = False

    def __post_init__(self):
        if not 1 <= self.local_asn <= MAX_ASN:
            raise ValueError(f"ASN {self.local_asn} out of range")
        addresses = [n.peer_address for n in self.neighbors]
        if len(set(addresses)) != len(addresses):
            raise ValueError("neighbor addresses must be unique")

    @property
    def max_prefix(self) -> Tuple[MaxPrefixStmt, ...]:
        return tuple(
            MaxPrefixStmt(n.peer_address, n.max_prefix_limit)
            for n in self.neighbors if n.max_prefix_limit is not None
        )

    def neighbor(self, address: Address) -> Optional[NeighborStmt]:
        for stmt in self.neighbors:
            if stmt.peer_address == address:
                return stmt
        return None


def render_config(cfg: RouterConfig) -> str:
    """Render the canonical configuration text."""
    lines = [f"router bgp {cfg.local_asn}"]
    if cfg.router_id is not None:
        lines.append(f"{INDENT}router-id {cfg.router_id}")
    if cfg.log_neighbor_changes:
        lines.append(f"{INDENT}bgp log-neighbor-changes")
    for neighbor in cfg.neighbors:
        lines.extend(neighbor.render())
    for network in cfg.networks:
        lines.append(network.render())
    if cfg.static_routes:
        lines.append("!")
        for route in cfg.static_routes:
            lines.append(route.render())
    return "\n".join(lines) + "\n"


# --- Grammar ---

# Nonterminals map to alternative expansions. Quoted keywords are literal
# terminals; <ws>, <indent>, <eol>, <ipv4>, <asn>, <mask>, <limit> are token
# classes. <config> is a repetition of <line>.
BGP_GRAMMAR: Dict[str, List[List[str]]] = {
    "<config>": [["<line>"]],
    "<line>": [
        ["<router-bgp>"], ["<router-id>"], ["<log-neighbor-changes>"],
        ["<neighbor-remote-as>"], ["<neighbor-max-prefix>"], ["<network>"],
        ["<address-family>"], ["<exit-address-family>"], ["<ip-route>"],
        ["<comment>"], ["<blank>"],
    ],
    "<router-bgp>": [["router", "<ws>", "bgp", "<ws>", "<asn>", "<eol>"]],
    "<router-id>": [["<indent>", "router-id", "<ws>", "<ipv4>", "<eol>"]],
    "<log-neighbor-changes>": [["<indent>", "bgp", "<ws>", "log-neighbor-changes", "<eol>"]],
    "<neighbor-remote-as>": [
        ["<indent>", "neighbor", "<ws>", "<ipv4>", "<ws>", "remote-as", "<ws>", "<asn>", "<eol>"]
    ],
    "<neighbor-max-prefix>": [
        ["<indent>", "neighbor", "<ws>", "<ipv4>", "<ws>", "maximum-prefix", "<ws>", "<limit>", "<eol>"]
    ],
    "<network>": [["<indent>", "network", "<ws>", "<ipv4>", "<ws>", "mask", "<ws>", "<mask>", "<eol>"]],
    "<address-family>": [
        ["<indent>", "address-family", "<ws>", "ipv4", "<eol>"],
        ["<indent>", "address-family", "<ws>", "ipv4", "<ws>", "unicast", "<eol>"],
    ],
    "<exit-address-family>": [["<indent>", "exit-address-family", "<eol>"]],
    "<ip-route>": [["ip", "<ws>", "route", "<ws>", "<ipv4>", "<ws>", "<mask>", "<ws>", "<route-target>", "<eol>"]],
    "<route-target>": [[NULL_SINK], ["<ipv4>"]],
    "<comment>": [["!", "<eol>"]],
    "<blank>": [["<eol>"]],
}

REPEATED = {"<config>": "<line>"}
IN_BLOCK = {
    "<router-id>", "<log-neighbor-changes>", "<neighbor-remote-as>",
    "<neighbor-max-prefix>", "<network>", "<address-family>", "<exit-address-family>",
}
TOKEN_CLASSES = ("<ws>", "<indent>", "<eol>", "<ipv4>", "<asn>", "<mask>", "<limit>")


def _is_ipv4(text: str) -> bool:
    return bool(_IPV4_RE.match(text))


def _is_mask(text: str) -> bool:
    if not _is_ipv4(text):
        return False
    try:
        mask_to_length(text)
    except PrefixError:
        return False
    return True


def _is_decimal(text: str) -> bool:
    return bool(_DECIMAL_RE.match(text))


_CLASS_MATCHERS = {
    "<ws>": lambda t: t[0] in " \t",
    "<indent>": lambda t: t[0] in " \t",
    "<ipv4>": _is_ipv4,
    "<asn>": _is_decimal,
    "<mask>": _is_mask,
    "<limit>": _is_decimal,
}


@dataclass(frozen=True)
class DerivationTree:
    """A node of the derivation tree. Terminals carry text; nonterminals carry children."""
    symbol: str
    children: Tuple["DerivationTree", ...] = ()
    text: Optional[str] = None
    span: Tuple[int, int] = (0, 0)

    @property
    def is_terminal(self) -> bool:
        return self.text is not None

    def leaves(self) -> Iterator["DerivationTree"]:
        if self.is_terminal:
            yield self
            return
        for child in self.children:
            yield from child.leaves()

    def to_text(self) -> str:
        return "".join(leaf.text for leaf in self.leaves())

    def walk(self, path: Path = ()) -> Iterator[Tuple[Path, "DerivationTree"]]:
        yield path, self
        for index, child in enumerate(self.children):
            yield from child.walk(path + (index,))

    def node_at(self, path: Path) -> "DerivationTree":
        node = self
        for index in path:
            node = node.children[index]
        return node

    def has_path(self, path: Path) -> bool:
        node = self
        for index in path:
            if index >= len(node.children):
                return False
            node = node.children[index]
        return True

    @property
    def lines(self) -> Tuple["DerivationTree", ...]:
        return self.children

    def statement(self) -> "DerivationTree":
        """For a <line> node, the statement nonterminal beneath it."""
        return self.children[0]


def tree_conforms(tree: DerivationTree) -> bool:
    """Check that every expansion in the tree matches a BGP_GRAMMAR production."""
    if tree.is_terminal:
        return not tree.children
    if tree.symbol in REPEATED:
        return all(c.symbol == REPEATED[tree.symbol] and tree_conforms(c) for c in tree.children)
    expansions = BGP_GRAMMAR.get(tree.symbol)
    if expansions is None:
        return False
    for expansion in expansions:
        if len(expansion) != len(tree.children):
            continue
        if all(_child_matches(sym, child) for sym, child in zip(expansion, tree.children)):
            return all(tree_conforms(c) for c in tree.children)
    return False


def _child_matches(symbol: str, child: DerivationTree) -> bool:
    if symbol in BGP_GRAMMAR:
        return child.symbol == symbol and not child.is_terminal
    if symbol in TOKEN_CLASSES:
        if child.symbol != symbol or child.text is None:
            return False
        if symbol == "<eol>":
            return bool(re.fullmatch(r"[ \t]*\n?", child.text))
        return bool(child.text) and _CLASS_MATCHERS[symbol](child.text)
    return child.symbol == symbol and child.text == symbol


# --- Parser ---

def _tokenize(line: str) -> List[Tuple[str, int]]:
    """Split a line (without newline) into (token, column) pairs, whitespace included."""
    return [(m.group(0), m.start()) for m in _TOKEN_RE.finditer(line)]


def _match_expansion(
    expansion: Sequence[str], tokens: List[Tuple[str, int]], eol: str
) -> Tuple[Optional[List[Tuple[str, str]]], int]:
    """
    Match one production against a line's tokens.

    Returns the matched (symbol, text) pairs, or None, with the number of tokens
    consumed before failure. Trailing whitespace is folded into <eol>.
    """
    body = list(tokens)
    trailing = ""
    if body and body[-1][0][0] in " \t" and (len(body) > 1 or expansion[0] != "<indent>"):
        trailing = body.pop()[0]
    out: List[Tuple[str, str]] = []
    pos = 0
    for symbol in expansion:
        if symbol == "<eol>":
            if pos != len(body):
                return None, pos
            out.append(("<eol>", trailing + eol))
            return out, pos
        if pos >= len(body):
            return None, pos
        token = body[pos][0]
        if symbol == "<route-target>":
            if token == NULL_SINK:
                out.append(("<route-target>", token))
            elif _is_ipv4(token):
                out.append(("<route-target>", token))
            else:
                return None, pos
        elif symbol in _CLASS_MATCHERS:
            if not _CLASS_MATCHERS[symbol](token):
                return None, pos
            out.append((symbol, token))
        elif token != symbol:
            return None, pos
        else:
            out.append((symbol, token))
        pos += 1
    return None, pos


def _build_statement(symbol: str, pairs: List[Tuple[str, str]], offset: int) -> DerivationTree:
    children = []
    start = offset
    for sym, text in pairs:
        if sym == "<route-target>":
            inner_sym = NULL_SINK if text == NULL_SINK else "<ipv4>"
            leaf = DerivationTree(inner_sym, text=text, span=(offset, offset + len(text)))
            children.append(DerivationTree(sym, (leaf,), span=(offset, offset + len(text))))
        else:
            children.append(DerivationTree(sym, text=text, span=(offset, offset + len(text))))
        offset += len(text)
    return DerivationTree(symbol, tuple(children), span=(start, offset))


_STATEMENT_SYMBOLS = [alt[0] for alt in BGP_GRAMMAR["<line>"]]


def _parse_line(raw: str, eol: str, lineno: int, offset: int) -> DerivationTree:
    tokens = _tokenize(raw)
    best_progress = -1
    best_column = 0
    best_token = raw
    if not tokens or (len(tokens) == 1 and tokens[0][0][0] in " \t"):
        stmt = _build_statement("<blank>", [("<eol>", raw + eol)], offset)
        return DerivationTree("<line>", (stmt,), span=stmt.span)
    for symbol in _STATEMENT_SYMBOLS:
        if symbol == "<blank>":
            continue
        for expansion in BGP_GRAMMAR[symbol]:
            pairs, consumed = _match_expansion(expansion, tokens, eol)
            if pairs is not None:
                stmt = _build_statement(symbol, pairs, offset)
                return DerivationTree("<line>", (stmt,), span=stmt.span)
            if consumed > best_progress:
                best_progress = consumed
                if consumed < len(tokens):
                    best_token, column = tokens[consumed]
                else:
                    best_token, column = "<end of line>", len(raw)
                best_column = column + 1
    raise ParseError("line does not match any BGP directive", lineno, best_column, best_token)


def parse_tree(text: str) -> DerivationTree:
    """Build the derivation tree for text, checking structure only."""
    if not isinstance(text, str):
        raise ParseError("configuration text must be a string", 0, 0, repr(type(text)))
    lines = []
    offset = 0
    for lineno, chunk in enumerate(text.splitlines(keepends=True), 1):
        eol = "\n" if chunk.endswith("\n") else ""
        raw = chunk[:-1] if eol else chunk
        if "\r" in raw:
            col = raw.index("\r") + 1
            raise ParseError("carriage return not allowed", lineno, col, "\\r")
        line = _parse_line(raw, eol, lineno, offset)
        lines.append(line)
        offset += len(chunk)
    return DerivationTree("<config>", tuple(lines), span=(0, len(text)))


def _terminal(stmt: DerivationTree, symbol: str, occurrence: int = 0) -> DerivationTree:
    seen = 0
    for child in stmt.children:
        if child.symbol == symbol:
            if seen == occurrence:
                return child
            seen += 1
    raise KeyError(symbol)


def _column(text: str, stmt: DerivationTree, leaf: DerivationTree) -> int:
    line_start = text.rfind("\n", 0, stmt.span[0]) + 1
    return leaf.span[0] - line_start + 1


def config_from_tree(tree: DerivationTree, text: Optional[str] = None) -> RouterConfig:
    """Extract the RouterConfig a structurally valid tree denotes, enforcing semantic rules."""
    text = tree.to_text() if text is None else text
    local_asn: Optional[int] = None
    router_id: Optional[Address] = None
    log_changes = False
    neighbors: Dict[Address, NeighborStmt] = {}
    limits: Dict[Address, int] = {}
    networks: List[NetworkStmt] = []
    statics: List[StaticRouteStmt] = []
    in_block = False

    for lineno, line in enumerate(tree.children, 1):
        stmt = line.statement()
        symbol = stmt.symbol

        def fail(message: str, leaf: Optional[DerivationTree] = None):
            leaf = leaf or stmt.children[0]
            raise ParseError(message, lineno, _column(text, stmt, leaf), leaf.text or "")

        if symbol in ("<blank>", "<comment>"):
            continue
        if symbol == "<router-bgp>":
            leaf = _terminal(stmt, "<asn>")
            if local_asn is not None:
                fail("second router bgp stanza", stmt.children[0])
            asn = int(leaf.text)
            if asn > MAX_ASN:
                fail("ASN out of range", leaf)
            local_asn = asn
            in_block = True
            continue
        if symbol == "<ip-route>":
            in_block = False
            addr_leaf = _terminal(stmt, "<ipv4>")
            mask_leaf = _terminal(stmt, "<mask>")
            try:
                prefix = make_prefix(addr_leaf.text, mask_to_length(mask_leaf.text))
            except PrefixError as exc:
                fail(str(exc), addr_leaf)
            target = _terminal(stmt, "<route-target>").children[0]
            next_hop = None if target.text == NULL_SINK else Address(target.text)
            route = StaticRouteStmt(prefix, next_hop)
            if route in statics:
                fail("duplicate statement", addr_leaf)
            statics.append(route)
            continue
        if symbol not in IN_BLOCK or not in_block:
            fail("directive outside router bgp stanza")
        if symbol == "<router-id>":
            if router_id is not None:
                fail("duplicate statement")
            router_id = Address(_terminal(stmt, "<ipv4>").text)
        elif symbol == "<log-neighbor-changes>":
            if log_changes:
                fail("duplicate statement")
            log_changes = True
        elif symbol == "<neighbor-remote-as>":
            addr_leaf = _terminal(stmt, "<ipv4>")
            asn_leaf = _terminal(stmt, "<asn>")
            address = Address(addr_leaf.text)
            if address in neighbors:
                fail("duplicate neighbor", addr_leaf)
            asn = int(asn_leaf.text)
            if asn > MAX_ASN:
                fail("ASN out of range", asn_leaf)
            neighbors[address] = NeighborStmt(address, asn)
        elif symbol == "<neighbor-max-prefix>":
            addr_leaf = _terminal(stmt, "<ipv4>")
            limit_leaf = _terminal(stmt, "<limit>")
            address = Address(addr_leaf.text)
            if address not in neighbors:
                fail("maximum-prefix for unknown neighbor", addr_leaf)
            if address in limits:
                fail("duplicate statement", addr_leaf)
            limit = int(limit_leaf.text)
            if limit > MAX_PREFIX_LIMIT:
                fail("maximum-prefix limit out of range", limit_leaf)
            limits[address] = limit
        elif symbol == "<network>":
            addr_leaf = _terminal(stmt, "<ipv4>")
            mask_leaf = _terminal(stmt, "<mask>")
            try:
                prefix = make_prefix(addr_leaf.text, mask_to_length(mask_leaf.text))
            except PrefixError as exc:
                fail(str(exc), addr_leaf)
            network = NetworkStmt(prefix)
            if network in networks:
                fail("duplicate statement", addr_leaf)
            networks.append(network)
        # address-family lines carry no semantics

    if local_asn is None:
        raise ParseError("missing router bgp stanza", 1, 1, text[:20])
    merged = tuple(
        NeighborStmt(addr, stmt.remote_asn, limits.get(addr))
        for addr, stmt in neighbors.items()
    )
    return RouterConfig(
        local_asn=local_asn,
        router_id=router_id,
        neighbors=merged,
        networks=tuple(networks),
        static_routes=tuple(statics),
        log_neighbor_changes=log_changes,
    )


def parse_config(text: str) -> Tuple[RouterConfig, DerivationTree]:
    """Parse configuration text into its RouterConfig and derivation tree."""
    tree = parse_tree(text)
    cfg = config_from_tree(tree, text)
    logger.debug("parsed config: AS%d, %d neighbors, %d networks",
                 cfg.local_asn, len(cfg.neighbors), len(cfg.networks))
    return cfg, tree


def is_valid_config(text: str) -> bool:
    try:
        parse_config(text)
    except ParseError:
        return False
    return True
