"""
Anomaly oracles.

Compare one iteration's event log, RIBs and forwarding results against the
baseline captured from the unmutated network and turn differences into
findings: session resets, rejected configurations, blackholes, sub-prefix
hijacks, path anomalies and oscillation.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from config_model import Address, Prefix, prefix_contains
from simulator import (
    ConvergenceResult,
    EventKind,
    ForwardingOutcome,
    ForwardingResult,
    Network,
    NetworkEvent,
    RibSnapshot,
    probe_keys,
    reachability,
    snapshot_rib,
    tiebreak_sensitive,
)

logger = logging.getLogger(__name__)


class BugClass(Enum):
    INVALID_CONFIG = "InvalidConfig"
    SESSION_RESET = "SessionReset"
    BLACKHOLE = "Blackhole"
    SUBPREFIX_HIJACK = "SubPrefixHijack"
    PATH_ANOMALY = "PathAnomaly"
    OSCILLATION = "Oscillation"


SEVERITY = {
    BugClass.INVALID_CONFIG: "medium",
    BugClass.SESSION_RESET: "high",
    BugClass.BLACKHOLE: "high",
    BugClass.SUBPREFIX_HIJACK: "high",
    BugClass.PATH_ANOMALY: "medium",
    BugClass.OSCILLATION: "medium",
}

TIEBREAK_FLAG = "tiebreak-sensitive"

ProbeKey = Tuple[str, Address]


@dataclass(frozen=True)
class RibDiff:
    node: str
    prefix: Prefix
    before: Optional[str]
    after: Optional[str]

    def to_dict(self) -> dict:
        return {"type": "rib-diff", "node": self.node, "prefix": str(self.prefix),
                "before": self.before, "after": self.after}


@dataclass(frozen=True)
class PathChange:
    src: str
    dst: Address
    before: str
    after: str

    def to_dict(self) -> dict:
        return {"type": "path-change", "src": self.src, "dst": str(self.dst),
                "before": self.before, "after": self.after}


@dataclass(frozen=True)
class ConvergenceNote:
    status: str
    rounds: int

    def to_dict(self) -> dict:
        return {"type": "convergence", "status": self.status, "rounds": self.rounds}


Evidence = Union[NetworkEvent, RibDiff, PathChange, ConvergenceNote]


def evidence_to_dict(item: Evidence) -> dict:
    if isinstance(item, NetworkEvent):
        return {"type": "event", **item.to_dict()}
    return item.to_dict()


@dataclass(frozen=True)
class Finding:
    oracle: str
    bug_class: BugClass
    key: str
    evidence: Tuple[Evidence, ...]
    config_text: str = ""
    prefix: Optional[Prefix] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.evidence:
            raise ValueError(f"{self.bug_class.value} finding needs evidence")

    @property
    def severity(self) -> str:
        return SEVERITY[self.bug_class]

    @property
    def ident(self) -> Tuple[str, str]:
        return self.bug_class.value, self.key

    def to_dict(self) -> dict:
        return {
            "oracle": self.oracle,
            "severity": self.severity,
            "bug_class": self.bug_class.value,
            "key": self.key,
            "prefix": str(self.prefix) if self.prefix is not None else None,
            "flags": list(self.flags),
            "evidence": [evidence_to_dict(e) for e in self.evidence],
        }


@dataclass(frozen=True)
class Observation:
    """Low-severity signal kept in the report without raising a finding."""
    kind: str
    key: str
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "key": self.key, "detail": self.detail}


@dataclass(frozen=True)
class BaselineProfile:
    ribs: Mapping[str, RibSnapshot]
    reachability: Mapping[ProbeKey, ForwardingResult]
    origins: Mapping[Prefix, FrozenSet[int]]
    asns: Mapping[str, int] = field(default_factory=dict)

    @property
    def keys(self) -> List[ProbeKey]:
        return sorted(self.reachability, key=lambda k: (k[0], int(k[1])))

    @property
    def rib_texts(self) -> Dict[str, str]:
        return {node: snap.text for node, snap in self.ribs.items()}


@dataclass(frozen=True)
class IterationArtifacts:
    """Everything the oracles look at after one iteration's convergence."""
    events: Tuple[NetworkEvent, ...]
    ribs: Mapping[str, RibSnapshot]
    reachability: Mapping[ProbeKey, ForwardingResult]
    convergence: ConvergenceResult
    config_text: str = ""


@dataclass(frozen=True)
class OracleReport:
    findings: Tuple[Finding, ...] = ()
    observations: Tuple[Observation, ...] = ()

    @property
    def is_clean(self) -> bool:
        return not self.findings

    @property
    def bug_classes(self) -> FrozenSet[BugClass]:
        return frozenset(f.bug_class for f in self.findings)

    def idents(self) -> List[Tuple[str, str]]:
        return [f.ident for f in self.findings]

    def to_dict(self) -> dict:
        return {
            "findings": [f.to_dict() for f in self.findings],
            "observations": [o.to_dict() for o in self.observations],
        }

    @property
    def text(self) -> str:
        lines = [f"findings: {len(self.findings)}"]
        for f in self.findings:
            flags = f" [{','.join(f.flags)}]" if f.flags else ""
            lines.append(f"  {f.bug_class.value} {f.key} severity={f.severity} evidence={len(f.evidence)}{flags}")
        for o in self.observations:
            lines.append(f"  observation {o.kind} {o.key}: {o.detail}")
        return "\n".join(lines) + "\n"


def origin_map(ribs: Mapping[str, RibSnapshot]) -> Dict[Prefix, FrozenSet[int]]:
    """Origin ASes of every prefix, read from each router's best entries."""
    origins: Dict[Prefix, set] = {}
    for snapshot in ribs.values():
        for entry in snapshot.best_entries():
            origins.setdefault(entry.prefix, set()).add(snapshot.origin_asn(entry))
    return {p: frozenset(v) for p, v in origins.items()}


def capture_baseline(net: Network) -> BaselineProfile:
    """Record RIBs, the probe reachability matrix and origin map of a converged network."""
    if net.last_convergence is None or not net.last_convergence.converged:
        raise ValueError("baseline can only be captured from a converged network")
    ribs = {name: snapshot_rib(net, name) for name in net.names}
    matrix = reachability(net, probe_keys(net))
    profile = BaselineProfile(
        ribs=ribs,
        reachability=matrix,
        origins=origin_map(ribs),
        asns={name: net.asn_of(name) for name in net.names},
    )
    logger.info("baseline captured: %d routers, %d probes", len(ribs), len(matrix))
    return profile


# --- Oracles ---

def notification_oracle(events: Sequence[NetworkEvent], config_text: str = "") -> List[Finding]:
    """SessionReset per Notification; InvalidConfig per ConfigRejected."""
    findings = []
    for event in events:
        if event.kind is EventKind.NOTIFICATION:
            related = tuple(
                e for e in events
                if e.kind is EventKind.SESSION_DOWN and {e.node, e.peer} == {event.node, event.peer}
            )
            findings.append(Finding("notification", BugClass.SESSION_RESET,
                                    f"{event.node}->{event.peer}", (event,) + related, config_text))
        elif event.kind is EventKind.CONFIG_REJECTED:
            findings.append(Finding("notification", BugClass.INVALID_CONFIG, event.node, (event,), config_text))
    return findings


def _icmp_for(events: Sequence[NetworkEvent], src: str, dst: Address) -> Tuple[NetworkEvent, ...]:
    return tuple(e for e in events if e.kind is EventKind.ICMP_UNREACHABLE and e.src == src and e.dst == dst)


def blackhole_oracle(baseline: BaselineProfile, current: Mapping[ProbeKey, ForwardingResult],
                     events: Sequence[NetworkEvent] = (), config_text: str = "") -> List[Finding]:
    """A Blackhole finding per probe that had a path in the baseline and lost it."""
    findings = []
    for key in baseline.keys:
        before, after = baseline.reachability[key], current.get(key)
        if after is None or not before.delivered:
            continue
        if after.outcome not in (ForwardingOutcome.BLACKHOLED, ForwardingOutcome.UNREACHABLE):
            continue
        src, dst = key
        prefix = after.hops[-1].prefix if after.outcome is ForwardingOutcome.BLACKHOLED else before.hops[-1].prefix
        evidence = (PathChange(src, dst, before.describe(), after.describe()),) + _icmp_for(events, src, dst)
        findings.append(Finding("blackhole", BugClass.BLACKHOLE, str(prefix or dst), evidence, config_text, prefix))
    return findings


def _terminal_asn(result: ForwardingResult, asns: Mapping[str, int]) -> int:
    return asns[result.terminal]


def hijack_oracle(baseline: BaselineProfile, ribs: Mapping[str, RibSnapshot],
                  current: Mapping[ProbeKey, ForwardingResult],
                  config_text: str = "") -> Tuple[List[Finding], List[Observation]]:
    """
    Sub-prefix hijacks, origin changes and forwarding that now ends in a
    different AS. Longer paths to the same AS are only observations.
    """
    findings: List[Finding] = []
    observations: List[Observation] = []
    origins = origin_map(ribs)

    for prefix in sorted(origins, key=lambda p: (int(p.network_address), p.prefixlen)):
        now = origins[prefix]
        if prefix in baseline.origins:
            if now != baseline.origins[prefix]:
                diffs = [
                    RibDiff(node, prefix, _render(baseline.ribs.get(node), prefix), _render(snap, prefix))
                    for node, snap in sorted(ribs.items())
                ]
                evidence = tuple(d for d in diffs if d.before != d.after) or (
                    RibDiff("*", prefix, f"origin {_asns(baseline.origins[prefix])}", f"origin {_asns(now)}"),
                )
                findings.append(Finding("hijack", BugClass.PATH_ANOMALY, str(prefix), evidence, config_text, prefix))
            continue
        for parent in sorted(baseline.origins, key=lambda p: p.prefixlen):
            if parent.prefixlen >= prefix.prefixlen or not prefix_contains(parent, prefix):
                continue
            if now <= baseline.origins[parent]:
                continue
            evidence = (RibDiff("*", parent, f"origin {_asns(baseline.origins[parent])}", None),) + tuple(
                RibDiff(node, prefix, None, _render(snap, prefix))
                for node, snap in sorted(ribs.items()) if snap.best_for(prefix) is not None
            )
            findings.append(Finding("hijack", BugClass.SUBPREFIX_HIJACK, str(prefix), evidence, config_text, prefix))
            break

    for key in baseline.keys:
        before, after = baseline.reachability[key], current.get(key)
        if after is None or not before.delivered:
            continue
        if after.outcome not in (ForwardingOutcome.PATH, ForwardingOutcome.BLACKHOLED):
            continue
        src, dst = key
        change = PathChange(src, dst, before.describe(), after.describe())
        if _terminal_asn(after, baseline.asns) != _terminal_asn(before, baseline.asns):
            prefix = before.hops[-1].prefix
            findings.append(Finding("hijack", BugClass.PATH_ANOMALY, str(prefix or dst), (change,), config_text, prefix))
        elif after.delivered and len(after.hops) > len(before.hops):
            observations.append(Observation("path-length-increase", f"{src}->{dst}",
                                            f"{change.before} became {change.after}"))
    return findings, observations


def _render(snapshot: Optional[RibSnapshot], prefix: Prefix) -> Optional[str]:
    if snapshot is None:
        return None
    entry = snapshot.best_for(prefix)
    return entry.render() if entry is not None else None


def _asns(values: FrozenSet[int]) -> str:
    return ",".join(f"AS{v}" for v in sorted(values))


def oscillation_oracle(convergence: ConvergenceResult, config_text: str = "") -> List[Finding]:
    if convergence.converged:
        return []
    note = ConvergenceNote(convergence.status, convergence.rounds)
    return [Finding("convergence", BugClass.OSCILLATION, "round-cap", (note,), config_text)]


def _sensitive_prefixes(ribs: Mapping[str, RibSnapshot]) -> List[Prefix]:
    sensitive = set()
    for snapshot in ribs.values():
        grouped: Dict[Prefix, list] = {}
        for entry in snapshot.entries:
            grouped.setdefault(entry.prefix, []).append(entry)
        sensitive.update(p for p, entries in grouped.items() if tiebreak_sensitive(entries))
    return sorted(sensitive)


_CLASS_ORDER = {c: i for i, c in enumerate(BugClass)}


def run_all_oracles(baseline: BaselineProfile, artifacts: IterationArtifacts) -> OracleReport:
    """Run every oracle, merge findings sharing (bug class, key) and order them."""
    events = list(artifacts.events)
    hijacks, observations = hijack_oracle(baseline, artifacts.ribs, artifacts.reachability, artifacts.config_text)
    raw = (
        notification_oracle(events, artifacts.config_text)
        + blackhole_oracle(baseline, artifacts.reachability, events, artifacts.config_text)
        + hijacks
        + oscillation_oracle(artifacts.convergence, artifacts.config_text)
    )
    sensitive = _sensitive_prefixes(artifacts.ribs)
    merged: Dict[Tuple[str, str], Finding] = {}
    for finding in raw:
        existing = merged.get(finding.ident)
        if existing is None:
            merged[finding.ident] = finding
            continue
        evidence = existing.evidence + tuple(e for e in finding.evidence if e not in existing.evidence)
        merged[finding.ident] = Finding(existing.oracle, existing.bug_class, existing.key, evidence,
                                        existing.config_text, existing.prefix, existing.flags)
    findings = []
    for ident in sorted(merged, key=lambda i: (_CLASS_ORDER[BugClass(i[0])], i[1])):
        finding = merged[ident]
        if finding.prefix is not None and any(s.overlaps(finding.prefix) for s in sensitive):
            finding = Finding(finding.oracle, finding.bug_class, finding.key, finding.evidence,
                              finding.config_text, finding.prefix, (TIEBREAK_FLAG,))
        findings.append(finding)
    if findings:
        logger.debug("oracles: %s", ", ".join(f"{f.bug_class.value}:{f.key}" for f in findings))
    return OracleReport(tuple(findings), tuple(sorted(observations, key=lambda o: o.key)))
