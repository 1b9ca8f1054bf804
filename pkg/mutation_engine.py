"""
Mutation strategies for BGP configurations.

Two families live here. The grammar-aware mutators edit a configuration's
derivation tree (field values, statement insertion and deletion, more-specific
prefix synthesis) and always produce text that re-parses. The random mutator
works on raw bytes with no grammar knowledge and is the baseline the
grammar-aware strategies are compared against.

All randomness comes from a numpy Generator passed in by the caller, so a
fixed seed reproduces the same mutations.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config_model import (
    Address,
    DerivationTree,
    MaxPrefixStmt,
    NetworkStmt,
    ParseError,
    Path as TreePath,
    Prefix,
    RouterConfig,
    StaticRouteStmt,
    config_from_tree,
    parse_config,
    prefix_mask,
)
from simulator import NetworkEvent, RibSnapshot

if TYPE_CHECKING:
    from fuzz_engine import FuzzState

logger = logging.getLogger(__name__)

# --- Configuration ---
SUBPREFIX_OFFSETS = (1, 2)
RANDOM_MAX_OPS = 4
MAX_VALUE_ATTEMPTS = 32
PRIVATE_ASN_RANGE = (64512, 65534)
PUBLIC_ASN_RANGE = (1, 64495)
AS_TRANS = 23456
LIMIT_CHOICES = (1, 2, 5, 10, 100, 1000)
UNICAST_RANGE = (int(Address("1.0.0.0")), int(Address("223.255.255.255")))
RANDOM_OPS = ("flip", "insert", "delete", "duplicate-line")

FIELD_KINDS = ("router-id", "neighbor-address", "remote-asn", "network-prefix", "max-prefix-limit")

InsertableStatement = Union[NetworkStmt, StaticRouteStmt, MaxPrefixStmt]


class MutationError(ValueError):
    """Base class for mutations that cannot be produced."""


class NoMutableField(MutationError):
    """The tree has no field the field mutator may touch."""


class DuplicateStatement(MutationError):
    """An identical statement is already present."""


class NoCandidatePrefix(MutationError):
    """Feedback holds no remotely originated prefix with room for a more-specific."""


class InvalidStatement(MutationError):
    """The statement cannot be placed anywhere the grammar allows."""


class PlanKind(Enum):
    FIELD_MUTATION = "FieldMutation"
    STATEMENT_INSERTION = "StatementInsertion"
    STATEMENT_DELETION = "StatementDeletion"

    @property
    def event(self) -> str:
        return {"FieldMutation": "E1", "StatementInsertion": "E2", "StatementDeletion": "E3"}[self.value]


@dataclass(frozen=True)
class MutationWeights:
    """Relative weights of the strategies select_mutation chooses between."""
    subprefix: float = 0.35
    max_prefix: float = 0.25
    field: float = 0.25
    other: float = 0.15

    def __post_init__(self):
        values = (self.subprefix, self.max_prefix, self.field, self.other)
        if any(v < 0 for v in values) or sum(values) <= 0:
            raise ValueError(f"mutation weights must be >= 0 with a positive sum, got {values}")

    def as_dict(self) -> Dict[str, float]:
        return {"subprefix": self.subprefix, "max_prefix": self.max_prefix,
                "field": self.field, "other": self.other}


DEFAULT_WEIGHTS = MutationWeights()


@dataclass(frozen=True)
class FieldEdit:
    """Replace the leaf at path with a leaf of the same token class."""
    path: TreePath
    replacement: DerivationTree


@dataclass(frozen=True)
class MutationPlan:
    kind: PlanKind
    target: TreePath
    payload: Tuple[Union[FieldEdit, InsertableStatement], ...] = ()
    strategy: str = "field"
    field_kind: Optional[str] = None
    linked: Tuple[TreePath, ...] = ()

    def describe(self) -> str:
        if self.kind is PlanKind.FIELD_MUTATION:
            values = " ".join(e.replacement.text for e in self.payload)
            return f"{self.kind.event} {self.field_kind} -> {values}"
        if self.kind is PlanKind.STATEMENT_DELETION:
            return f"{self.kind.event} delete line {self.target[0] + 1}"
        rendered = "; ".join(s.render().strip() for s in self.payload)
        return f"{self.kind.event} {self.strategy}: {rendered}"


@dataclass(frozen=True)
class Feedback:
    """Runtime observations of the target router after the last convergence."""
    rib: Optional[RibSnapshot] = None
    announced_prefixes: FrozenSet[Prefix] = frozenset()
    session_states: Mapping[Address, str] = field(default_factory=dict)
    last_events: Tuple[NetworkEvent, ...] = ()

    def __post_init__(self):
        known = set(self.rib.prefixes()) if self.rib is not None else set()
        if not set(self.announced_prefixes) <= known:
            raise ValueError("announced prefixes must appear in the RIB")

    @property
    def is_empty(self) -> bool:
        return self.rib is None or not self.rib.entries

    def learned_from(self, address: Address) -> int:
        if self.rib is None:
            return 0
        return len({e.prefix for e in self.rib.entries if not e.is_local and e.next_hop == address})

    def remote_prefixes(self) -> List[Prefix]:
        """Prefixes whose best route was learned from a peer."""
        if self.rib is None:
            return []
        return [e.prefix for e in self.rib.best_entries() if not e.is_local]


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


# --- Text helpers ---

def _line_texts(tree: DerivationTree) -> List[str]:
    texts = [line.to_text() for line in tree.children]
    if texts and not texts[-1].endswith("\n"):
        texts[-1] += "\n"
    return texts


def _reparse(text: str) -> DerivationTree:
    _, tree = parse_config(text)
    return tree


def _apply_edits(tree: DerivationTree, edits: Iterable[FieldEdit]) -> str:
    text = tree.to_text()
    for edit in sorted(edits, key=lambda e: tree.node_at(e.path).span[0], reverse=True):
        start, end = tree.node_at(edit.path).span
        text = text[:start] + edit.replacement.text + text[end:]
    return text


def _child_index(stmt: DerivationTree, symbol: str) -> int:
    for index, child in enumerate(stmt.children):
        if child.symbol == symbol:
            return index
    raise KeyError(symbol)


def _leaf_text(stmt: DerivationTree, symbol: str) -> str:
    return stmt.children[_child_index(stmt, symbol)].text


# --- Field mutation ---

@dataclass(frozen=True)
class MutableField:
    kind: str
    paths: Tuple[TreePath, ...]
    linked: Tuple[TreePath, ...] = ()


def mutable_fields(tree: DerivationTree) -> List[MutableField]:
    """Every leaf the field mutator may rewrite, grouped by field kind."""
    found: List[MutableField] = []
    max_prefix_lines: Dict[str, List[TreePath]] = {}
    for i, line in enumerate(tree.children):
        stmt = line.statement()
        if stmt.symbol == "<neighbor-max-prefix>":
            path = (i, 0, _child_index(stmt, "<ipv4>"))
            max_prefix_lines.setdefault(_leaf_text(stmt, "<ipv4>"), []).append(path)
    for i, line in enumerate(tree.children):
        stmt = line.statement()
        base = (i, 0)
        if stmt.symbol == "<router-id>":
            found.append(MutableField("router-id", (base + (_child_index(stmt, "<ipv4>"),),)))
        elif stmt.symbol == "<neighbor-remote-as>":
            address = _leaf_text(stmt, "<ipv4>")
            found.append(MutableField(
                "neighbor-address",
                (base + (_child_index(stmt, "<ipv4>"),),),
                tuple(max_prefix_lines.get(address, ())),
            ))
            found.append(MutableField("remote-asn", (base + (_child_index(stmt, "<asn>"),),)))
        elif stmt.symbol == "<network>":
            found.append(MutableField(
                "network-prefix",
                (base + (_child_index(stmt, "<ipv4>"),), base + (_child_index(stmt, "<mask>"),)),
            ))
        elif stmt.symbol == "<neighbor-max-prefix>":
            found.append(MutableField("max-prefix-limit", (base + (_child_index(stmt, "<limit>"),),)))
    return found


def _random_unicast(rng: np.random.Generator) -> Address:
    while True:
        value = int(rng.integers(UNICAST_RANGE[0], UNICAST_RANGE[1] + 1))
        if value >> 24 != 127:
            return Address(value)


def _draw_asn(rng: np.random.Generator, current: int, cfg: RouterConfig) -> int:
    others = sorted(({cfg.local_asn} | {n.remote_asn for n in cfg.neighbors}) - {current})
    pools = ["private", "public"] + (["seed"] if others else [])
    while True:
        pool = _pick(rng, pools)
        if pool == "private":
            value = int(rng.integers(PRIVATE_ASN_RANGE[0], PRIVATE_ASN_RANGE[1] + 1))
        elif pool == "public":
            value = int(rng.integers(PUBLIC_ASN_RANGE[0], PUBLIC_ASN_RANGE[1] + 1))
        else:
            value = _pick(rng, others)
        if value not in (current, AS_TRANS):
            return value


def _draw_address(rng: np.random.Generator, current: Address, cfg: RouterConfig) -> Address:
    nearby = set()
    for neighbor in cfg.neighbors:
        base = int(neighbor.peer_address)
        nearby.update(Address(v) for v in (base - 1, base + 1) if 0 < v < 0xFFFFFFFF)
        nearby.add(neighbor.peer_address)
    if cfg.router_id is not None:
        nearby.add(cfg.router_id)
    nearby.discard(current)
    candidates = sorted(nearby)
    while True:
        value = _pick(rng, candidates) if candidates and rng.random() < 0.5 else _random_unicast(rng)
        if value != current:
            return value


def _draw_prefix(rng: np.random.Generator, current: Prefix) -> Prefix:
    options = ["random"]
    if current.prefixlen > 0:
        options += ["sibling", "supernet"]
    if current.prefixlen < 32:
        options.append("subnet")
    while True:
        choice = _pick(rng, options)
        if choice == "sibling":
            flipped = int(current.network_address) ^ (1 << (32 - current.prefixlen))
            value = Prefix((flipped, current.prefixlen))
        elif choice == "supernet":
            value = current.supernet()
        elif choice == "subnet":
            value = _pick(rng, list(current.subnets()))
        else:
            length = int(rng.integers(8, 31))
            mask = (0xFFFFFFFF << (32 - length)) & 0xFFFFFFFF
            value = Prefix((int(_random_unicast(rng)) & mask, length))
        if value != current:
            return value


def _draw_limit(rng: np.random.Generator, current: int) -> int:
    pool = [v for v in LIMIT_CHOICES + (int(rng.integers(1, 100001)),) if v != current]
    return _pick(rng, pool)


def _draw_values(kind: str, texts: Sequence[str], cfg: RouterConfig, rng: np.random.Generator) -> Tuple[str, ...]:
    if kind == "remote-asn":
        return (str(_draw_asn(rng, int(texts[0]), cfg)),)
    if kind in ("router-id", "neighbor-address"):
        return (str(_draw_address(rng, Address(texts[0]), cfg)),)
    if kind == "network-prefix":
        prefix = _draw_prefix(rng, Prefix(f"{texts[0]}/{texts[1]}"))
        return str(prefix.network_address), prefix_mask(prefix)
    return (str(_draw_limit(rng, int(texts[0]))),)


def plan_field_mutation(tree: DerivationTree, rng: np.random.Generator) -> MutationPlan:
    """
    Pick one mutable field (kind first, uniformly, then an instance) and a
    grammar-valid replacement value that keeps the configuration parseable.
    """
    fields = mutable_fields(tree)
    if not fields:
        raise NoMutableField("configuration has no mutable field")
    kinds = [k for k in FIELD_KINDS if any(f.kind == k for f in fields)]
    kind = _pick(rng, kinds)
    target = _pick(rng, [f for f in fields if f.kind == kind])
    cfg = config_from_tree(tree)
    leaves = [tree.node_at(p) for p in target.paths]
    for _ in range(MAX_VALUE_ATTEMPTS):
        values = _draw_values(kind, [leaf.text for leaf in leaves], cfg, rng)
        edits = [FieldEdit(p, DerivationTree(leaf.symbol, text=v)) for p, leaf, v in zip(target.paths, leaves, values)]
        edits += [FieldEdit(p, DerivationTree(tree.node_at(p).symbol, text=values[0])) for p in target.linked]
        try:
            parse_config(_apply_edits(tree, edits))
        except ParseError:
            continue
        return MutationPlan(PlanKind.FIELD_MUTATION, target.paths[0], tuple(edits),
                            strategy="field", field_kind=kind, linked=target.linked)
    raise MutationError(f"no valid replacement found for {kind}")


def mutate_field(tree: DerivationTree, rng: np.random.Generator) -> DerivationTree:
    """Replace exactly one mutable field with a different grammar-valid value."""
    return apply_plan(tree, plan_field_mutation(tree, rng), rng)


# --- Statement insertion and deletion ---

def _block_bounds(symbols: Sequence[str]) -> Tuple[int, int]:
    start = symbols.index("<router-bgp>")
    end = next((i for i in range(start + 1, len(symbols)) if symbols[i] == "<ip-route>"), len(symbols))
    return start, end


def _neighbor_line(tree: DerivationTree, address: Address, symbol: str) -> Optional[int]:
    for i, line in enumerate(tree.children):
        stmt = line.statement()
        if stmt.symbol == symbol and Address(_leaf_text(stmt, "<ipv4>")) == address:
            return i
    return None


def insertion_points(tree: DerivationTree, stmt: InsertableStatement) -> List[int]:
    """Line indices stmt may be inserted before (len(lines) means append)."""
    symbols = [line.statement().symbol for line in tree.children]
    start, end = _block_bounds(symbols)
    if isinstance(stmt, NetworkStmt):
        return list(range(start + 1, end + 1))
    if isinstance(stmt, StaticRouteStmt):
        return list(range(0, start + 1)) + list(range(end, len(symbols) + 1))
    if isinstance(stmt, MaxPrefixStmt):
        index = _neighbor_line(tree, stmt.peer_address, "<neighbor-remote-as>")
        return [] if index is None else [index + 1]
    return []


def insert_statement(tree: DerivationTree, stmt: InsertableStatement, rng: np.random.Generator) -> DerivationTree:
    """
    Insert a network, static-route or maximum-prefix statement at a legal position.

    A maximum-prefix statement for a neighbor that already has a different
    limit rewrites that limit in place.
    """
    cfg = config_from_tree(tree)
    if isinstance(stmt, NetworkStmt) and stmt in cfg.networks:
        raise DuplicateStatement(stmt.render().strip())
    if isinstance(stmt, StaticRouteStmt) and stmt in cfg.static_routes:
        raise DuplicateStatement(stmt.render().strip())
    if isinstance(stmt, MaxPrefixStmt):
        neighbor = cfg.neighbor(stmt.peer_address)
        if neighbor is None:
            raise InvalidStatement(f"no neighbor {stmt.peer_address} for maximum-prefix")
        if neighbor.max_prefix_limit == stmt.limit:
            raise DuplicateStatement(stmt.render().strip())
        if neighbor.max_prefix_limit is not None:
            index = _neighbor_line(tree, stmt.peer_address, "<neighbor-max-prefix>")
            path = (index, 0, _child_index(tree.children[index].statement(), "<limit>"))
            edit = FieldEdit(path, DerivationTree("<limit>", text=str(stmt.limit)))
            return _reparse(_apply_edits(tree, [edit]))
    points = insertion_points(tree, stmt)
    if not points:
        raise InvalidStatement(f"no legal position for {type(stmt).__name__}")
    texts = _line_texts(tree)
    texts.insert(_pick(rng, points), stmt.render() + "\n")
    try:
        return _reparse("".join(texts))
    except ParseError as exc:
        raise InvalidStatement(str(exc)) from exc


PROTECTED_SYMBOLS = {"<router-bgp>", "<router-id>"}


def deletable_lines(tree: DerivationTree, protected: Iterable[Address] = ()) -> List[int]:
    """Statement lines that may be removed; seed neighbors and the stanza header stay."""
    protected = set(protected)
    lines = []
    for i, line in enumerate(tree.children):
        stmt = line.statement()
        if stmt.symbol in PROTECTED_SYMBOLS or stmt.symbol in ("<blank>", "<comment>"):
            continue
        if stmt.symbol == "<neighbor-remote-as>" and Address(_leaf_text(stmt, "<ipv4>")) in protected:
            continue
        lines.append(i)
    return lines


def plan_deletion(tree: DerivationTree, rng: np.random.Generator, protected: Iterable[Address] = ()) -> MutationPlan:
    candidates = deletable_lines(tree, protected)
    if not candidates:
        raise NoMutableField("configuration has no deletable statement")
    index = _pick(rng, candidates)
    stmt = tree.children[index].statement()
    linked: Tuple[TreePath, ...] = ()
    if stmt.symbol == "<neighbor-remote-as>":
        limit_line = _neighbor_line(tree, Address(_leaf_text(stmt, "<ipv4>")), "<neighbor-max-prefix>")
        if limit_line is not None:
            linked = ((limit_line,),)
    return MutationPlan(PlanKind.STATEMENT_DELETION, (index,), strategy="deletion", linked=linked)


def delete_statement(tree: DerivationTree, rng: np.random.Generator, protected: Iterable[Address] = ()) -> DerivationTree:
    """Remove one unprotected statement (with its maximum-prefix line for a neighbor)."""
    return apply_plan(tree, plan_deletion(tree, rng, protected), rng)


def apply_plan(tree: DerivationTree, plan: MutationPlan, rng: np.random.Generator) -> DerivationTree:
    """Carry out a plan and return the re-parsed tree."""
    if not tree.has_path(plan.target):
        raise MutationError(f"plan target {plan.target} not in tree")
    if plan.kind is PlanKind.FIELD_MUTATION:
        return _reparse(_apply_edits(tree, [e for e in plan.payload if isinstance(e, FieldEdit)]))
    if plan.kind is PlanKind.STATEMENT_DELETION:
        dropped = {plan.target[0]} | {p[0] for p in plan.linked}
        texts = [t for i, t in enumerate(_line_texts(tree)) if i not in dropped]
        try:
            return _reparse("".join(texts))
        except ParseError as exc:
            raise InvalidStatement(str(exc)) from exc
    for stmt in plan.payload:
        tree = insert_statement(tree, stmt, rng)
    return tree


# --- Sub-prefix synthesis ---

def subprefix_candidates(feedback: Feedback, offsets: Sequence[int] = SUBPREFIX_OFFSETS) -> List[Prefix]:
    if not offsets:
        return []
    shortest = min(offsets)
    return sorted(
        {p for p in feedback.remote_prefixes() if p.prefixlen + shortest <= 32},
        key=lambda p: (int(p.network_address), p.prefixlen),
    )


def synthesize_subprefix(feedback: Feedback, rng: np.random.Generator,
                         offsets: Sequence[int] = SUBPREFIX_OFFSETS) -> List[InsertableStatement]:
    """
    Pick a remotely originated RIB prefix and return a more-specific network
    statement for it, plus the null-routed static that makes it originable.
    """
    candidates = subprefix_candidates(feedback, offsets)
    if not candidates:
        raise NoCandidatePrefix("RIB holds no remotely originated prefix to deaggregate")
    parent = _pick(rng, candidates)
    k = _pick(rng, [k for k in sorted(offsets) if parent.prefixlen + k <= 32])
    child = _pick(rng, list(parent.subnets(prefixlen_diff=k)))
    logger.debug("synthesized %s inside %s", child, parent)
    return [NetworkStmt(child), StaticRouteStmt(child, None)]


# --- Random baseline ---

def random_mutate(text: str, rng: np.random.Generator, max_ops: int = RANDOM_MAX_OPS) -> str:
    """Apply up to max_ops byte-level edits with no grammar knowledge."""
    if max_ops <= 0:
        return text
    data = bytearray(text.encode("latin-1", errors="replace"))
    for _ in range(int(rng.integers(1, max_ops + 1))):
        op = _pick(rng, RANDOM_OPS)
        if op == "flip" and data:
            pos = int(rng.integers(len(data)))
            data[pos] ^= 1 << int(rng.integers(8))
        elif op == "insert":
            data.insert(int(rng.integers(len(data) + 1)), int(rng.integers(256)))
        elif op == "delete" and data:
            del data[int(rng.integers(len(data)))]
        elif op == "duplicate-line":
            lines = bytes(data).split(b"\n")
            index = int(rng.integers(len(lines)))
            lines.insert(index, lines[index])
            data = bytearray(b"\n".join(lines))
    return data.decode("latin-1")


def validity_rate(texts: Iterable[str]) -> float:
    """Share of texts that parse as configurations."""
    texts = list(texts)
    if not texts:
        return 0.0
    valid = 0
    for text in texts:
        try:
            parse_config(text)
            valid += 1
        except ParseError:
            pass
    return valid / len(texts)


# --- Strategy selection ---

def _max_prefix_plan(tree: DerivationTree, cfg: RouterConfig, feedback: Feedback,
                     rng: np.random.Generator) -> MutationPlan:
    neighbor = _pick(rng, [n for n in cfg.neighbors if n.max_prefix_limit is None])
    learned = feedback.learned_from(neighbor.peer_address)
    limits = sorted({v for v in (1, 2, learned - 1, learned, learned + 1, 100) if v >= 1})
    stmt = MaxPrefixStmt(neighbor.peer_address, _pick(rng, limits))
    return MutationPlan(PlanKind.STATEMENT_INSERTION, (), (stmt,), strategy="max_prefix")


def _random_insertion(cfg: RouterConfig, feedback: Feedback, rng: np.random.Generator) -> InsertableStatement:
    known = list(feedback.rib.prefixes()) if feedback.rib is not None else []
    for _ in range(MAX_VALUE_ATTEMPTS):
        prefix = _pick(rng, known) if known and rng.random() < 0.5 else _draw_prefix(rng, Prefix("0.0.0.0/0"))
        if rng.random() < 0.5:
            stmt: InsertableStatement = NetworkStmt(prefix)
            if stmt not in cfg.networks:
                return stmt
        else:
            hops = [None] + [n.peer_address for n in cfg.neighbors]
            stmt = StaticRouteStmt(prefix, _pick(rng, hops))
            if stmt not in cfg.static_routes:
                return stmt
    raise MutationError("could not draw a fresh statement to insert")


def select_mutation(feedback: Feedback, state: "FuzzState", rng: np.random.Generator,
                    tree: DerivationTree, weights: MutationWeights = DEFAULT_WEIGHTS,
                    offsets: Sequence[int] = SUBPREFIX_OFFSETS,
                    protected: Iterable[Address] = ()) -> MutationPlan:
    """
    Choose the next mutation for the target router.

    Sub-prefix synthesis is only on offer when the RIB holds remote prefixes,
    limit insertion only when some neighbor has no limit, and deletion only
    once the configuration has drifted from the seed (state S1) and feedback
    exists. Remaining weights are renormalized.
    """
    cfg = config_from_tree(tree)
    protected = list(protected)
    options: Dict[str, float] = {}
    if subprefix_candidates(feedback, offsets):
        options["subprefix"] = weights.subprefix
    if any(n.max_prefix_limit is None for n in cfg.neighbors):
        options["max_prefix"] = weights.max_prefix
    if mutable_fields(tree):
        options["field"] = weights.field
    can_delete = (getattr(state, "value", state) == "S1" and not feedback.is_empty
                  and deletable_lines(tree, protected))
    options["insertion"] = weights.other / 2 if can_delete else weights.other
    if can_delete:
        options["deletion"] = weights.other / 2

    names = [n for n in options if options[n] > 0]
    probs = None
    if names:
        total = sum(options[n] for n in names)
        probs = np.array([options[n] / total for n in names])
    else:
        names = ["field"] if "field" in options else ["insertion"]
    strategy = names[int(rng.choice(len(names), p=probs))]

    if strategy == "subprefix":
        stmts = synthesize_subprefix(feedback, rng, offsets)
        return MutationPlan(PlanKind.STATEMENT_INSERTION, (), tuple(stmts), strategy="subprefix")
    if strategy == "max_prefix":
        return _max_prefix_plan(tree, cfg, feedback, rng)
    if strategy == "field":
        return plan_field_mutation(tree, rng)
    if strategy == "deletion":
        return plan_deletion(tree, rng, protected)
    stmt = _random_insertion(cfg, feedback, rng)
    return MutationPlan(PlanKind.STATEMENT_INSERTION, (), (stmt,), strategy="insertion")
