"""
Fuzzing loop and state machine.

One trial deploys mutated configurations to a target router, lets the
network converge, collects feedback, runs the oracles and, when something
fires, archives the finding and restores the network to its baseline.
A campaign runs several independent trials and summarizes which bug
classes each mutator found.
"""

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from config_model import DerivationTree, parse_config
from mutation_engine import (
    DEFAULT_WEIGHTS,
    RANDOM_MAX_OPS,
    SUBPREFIX_OFFSETS,
    Feedback,
    MutationError,
    MutationWeights,
    apply_plan,
    random_mutate,
    select_mutation,
    validity_rate,
)
from oracles import (
    BaselineProfile,
    BugClass,
    Finding,
    IterationArtifacts,
    OracleReport,
    capture_baseline,
    run_all_oracles,
)
from simulator import (
    EventKind,
    Network,
    NetworkEvent,
    SessionState,
    TopologyError,
    apply_config,
    converge,
    events_to_jsonl,
    load_topology,
    local_originations,
    reachability,
    reset,
    snapshot_rib,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
DEFAULT_BUDGET_ITERATIONS = 500
DEFAULT_TRIALS = 10
MUTATORS = ("grammar", "random")
BUGS = ("Bug-01", "Bug-02", "Bug-03")
BUG_TITLES = {
    "Bug-01": "Invalid config",
    "Bug-02": "Max-prefix session reset",
    "Bug-03": "Sub-prefix hijack",
}
MUTATOR_LABELS = {"grammar": "Grammar (stateful)", "random": "Random baseline"}


class IllegalTransition(RuntimeError):
    """An event arrived in a state that has no edge for it."""


class SetupError(RuntimeError):
    """The campaign cannot start: bad topology, target or baseline."""


class ConfigError(ValueError):
    """The campaign configuration file is invalid."""


class RecoveryError(RuntimeError):
    """Reset did not bring the network back to its golden baseline."""


# --- State machine ---

class FuzzState(Enum):
    S0 = "S0"
    S1 = "S1"
    S2 = "S2"

    @property
    def label(self) -> str:
        return {"S0": "Normal Run", "S1": "Intermediate (No Error)", "S2": "Error Detected"}[self.value]


class FuzzEvent(Enum):
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    E4 = "E4"
    E5 = "E5"
    E6 = "E6"

    @property
    def label(self) -> str:
        return {
            "E1": "field mutation", "E2": "statement insertion", "E3": "statement deletion",
            "E4": "prefix announcement", "E5": "oracle-triggered error", "E6": "recovery",
        }[self.value]


CONFIG_CHANGES = (FuzzEvent.E1, FuzzEvent.E2, FuzzEvent.E3)

TRANSITIONS: Dict[Tuple[FuzzState, FuzzEvent], FuzzState] = {
    (FuzzState.S0, FuzzEvent.E1): FuzzState.S1,
    (FuzzState.S0, FuzzEvent.E2): FuzzState.S1,
    (FuzzState.S0, FuzzEvent.E3): FuzzState.S1,
    (FuzzState.S1, FuzzEvent.E1): FuzzState.S1,
    (FuzzState.S1, FuzzEvent.E2): FuzzState.S1,
    (FuzzState.S1, FuzzEvent.E3): FuzzState.S1,
    (FuzzState.S1, FuzzEvent.E4): FuzzState.S1,
    (FuzzState.S0, FuzzEvent.E5): FuzzState.S2,
    (FuzzState.S1, FuzzEvent.E5): FuzzState.S2,
    (FuzzState.S2, FuzzEvent.E6): FuzzState.S0,
}


def transition(state: FuzzState, event: FuzzEvent, deployed: bool = True) -> FuzzState:
    """
    Next state for an event. A configuration change rejected before
    deployment leaves S0 where it is (the S0 self-loop).
    """
    if not deployed and state is FuzzState.S0 and event in CONFIG_CHANGES:
        return FuzzState.S0
    try:
        return TRANSITIONS[(state, event)]
    except KeyError:
        raise IllegalTransition(f"{event.value} is not allowed in {state.value}") from None


# --- Campaign configuration ---

@dataclass(frozen=True)
class CampaignConfig:
    topology: str
    target: str
    interface: Optional[str] = None
    budget_iterations: Optional[int] = DEFAULT_BUDGET_ITERATIONS
    budget_seconds: Optional[float] = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    mutator: str = "grammar"
    weights: MutationWeights = DEFAULT_WEIGHTS
    subprefix_offsets: Tuple[int, ...] = SUBPREFIX_OFFSETS
    random_ops: int = RANDOM_MAX_OPS
    jobs: int = 1
    out_dir: Optional[str] = None
    archive: bool = True

    def __post_init__(self):
        if self.budget_iterations is None and self.budget_seconds is None:
            raise ConfigError("at least one of budget_iterations / budget_seconds is required")
        if self.budget_iterations is not None and self.budget_iterations < 0:
            raise ConfigError(f"budget_iterations must be >= 0, got {self.budget_iterations}")
        if self.budget_seconds is not None and self.budget_seconds < 0:
            raise ConfigError(f"budget_seconds must be >= 0, got {self.budget_seconds}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.mutator not in MUTATORS:
            raise ConfigError(f"mutator must be one of {MUTATORS}, got {self.mutator!r}")
        if not self.subprefix_offsets or any(not 1 <= k <= 32 for k in self.subprefix_offsets):
            raise ConfigError(f"subprefix_offsets must be in 1..32, got {self.subprefix_offsets}")
        if self.random_ops < 0:
            raise ConfigError(f"random_ops must be >= 0, got {self.random_ops}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def budget_is_zero(self) -> bool:
        return self.budget_iterations == 0 or self.budget_seconds == 0

    def with_overrides(self, **overrides) -> "CampaignConfig":
        """Copy with every non-None override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        data = asdict(self)
        data["subprefix_offsets"] = list(self.subprefix_offsets)
        return data


CONFIG_KEYS = {f for f in CampaignConfig.__dataclass_fields__}


def campaign_config_from_dict(data: dict, base_dir: Optional[Path] = None) -> CampaignConfig:
    if not isinstance(data, dict):
        raise ConfigError("campaign configuration must be a mapping")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown campaign keys: {', '.join(unknown)}")
    for required in ("topology", "target"):
        if required not in data:
            raise ConfigError(f"campaign configuration needs '{required}'")
    values = dict(data)
    if isinstance(values.get("weights"), dict):
        try:
            values["weights"] = MutationWeights(**values["weights"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad weights: {exc}") from exc
    if "subprefix_offsets" in values:
        values["subprefix_offsets"] = tuple(int(k) for k in values["subprefix_offsets"])
    for key in ("topology", "out_dir"):
        if values.get(key) and base_dir is not None and not Path(values[key]).is_absolute():
            values[key] = str(base_dir / values[key])
    return CampaignConfig(**values)


def load_campaign_config(path: str) -> CampaignConfig:
    """Read a YAML campaign file; relative paths resolve against its directory."""
    config_path = Path(path)
    try:
        data = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return campaign_config_from_dict(data or {}, config_path.parent)


# --- Records and reports ---

@dataclass(frozen=True)
class IterationRecord:
    index: int
    state_before: FuzzState
    state_after: FuzzState
    events: Tuple[FuzzEvent, ...]
    states: Tuple[FuzzState, ...]
    config_hash: str
    plan: str
    report: OracleReport
    deployed: bool = True
    bugs: Tuple[str, ...] = ()
    archive_paths: Tuple[str, ...] = ()
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "state_before": self.state_before.value,
            "state_after": self.state_after.value,
            "events": [e.value for e in self.events],
            "states": [s.value for s in self.states],
            "config_hash": self.config_hash,
            "plan": self.plan,
            "deployed": self.deployed,
            "bugs": list(self.bugs),
            "findings": [list(i) for i in self.report.idents()],
            "observations": len(self.report.observations),
            "archive_paths": list(self.archive_paths),
        }


def classify_bugs(report: OracleReport) -> Tuple[str, ...]:
    """Map one iteration's findings onto the tracked bug classes."""
    classes = report.bug_classes
    bugs = []
    if BugClass.INVALID_CONFIG in classes:
        bugs.append("Bug-01")
    if BugClass.SESSION_RESET in classes:
        bugs.append("Bug-02")
    if BugClass.SUBPREFIX_HIJACK in classes and classes & {BugClass.BLACKHOLE, BugClass.PATH_ANOMALY}:
        bugs.append("Bug-03")
    return tuple(bugs)


def validate_trace(records: Sequence[IterationRecord]) -> bool:
    """Check every record against the transition table and its predecessor."""
    previous: Optional[FuzzState] = None
    for record in records:
        if previous is not None and record.state_before is not previous:
            return False
        state = record.state_before
        path = [state]
        try:
            for event in record.events:
                state = transition(state, event, record.deployed)
                path.append(state)
        except IllegalTransition:
            return False
        if state is not record.state_after or tuple(path) != record.states:
            return False
        if FuzzState.S2 in record.states and record.states[-1] is not FuzzState.S0:
            return False
        previous = record.state_after
    return True


@dataclass
class TrialReport:
    trial: int
    seed: int
    mutator: str
    iterations: int = 0
    first_detection: Dict[str, Optional[int]] = field(default_factory=lambda: {b: None for b in BUGS})
    finding_counts: Dict[str, int] = field(default_factory=dict)
    validity: float = 0.0
    records: List[IterationRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    stopped_by_clock: bool = False

    @property
    def detected(self) -> List[str]:
        return [b for b in BUGS if self.first_detection[b] is not None]

    def to_dict(self, with_records: bool = True) -> dict:
        data = {
            "trial": self.trial,
            "seed": self.seed,
            "mutator": self.mutator,
            "iterations": self.iterations,
            "first_detection": dict(self.first_detection),
            "finding_counts": dict(sorted(self.finding_counts.items())),
            "validity_rate": round(self.validity, 6),
            "warnings": list(self.warnings),
            "stopped_by_clock": self.stopped_by_clock,
        }
        if with_records:
            data["records"] = [r.to_dict() for r in self.records]
        return data


@dataclass
class CampaignReport:
    config: CampaignConfig
    trials: List[TrialReport] = field(default_factory=list)

    @property
    def mutator(self) -> str:
        return self.config.mutator

    def detection_counts(self) -> Dict[str, int]:
        return {b: sum(1 for t in self.trials if t.first_detection[b] is not None) for b in BUGS}

    def detection_rates(self) -> Dict[str, float]:
        if not self.trials:
            return {b: 0.0 for b in BUGS}
        return {b: n / len(self.trials) for b, n in self.detection_counts().items()}

    def validity_rate(self) -> float:
        measured = [t.validity for t in self.trials if t.iterations]
        return float(np.mean(measured)) if measured else 0.0

    @property
    def total_findings(self) -> int:
        return sum(sum(t.finding_counts.values()) for t in self.trials)

    @property
    def warnings(self) -> List[str]:
        return [w for t in self.trials for w in t.warnings]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "mutator": self.mutator,
            "weights": self.config.weights.as_dict(),
            "trials": [t.to_dict(with_records=False) for t in self.trials],
            "detection_counts": self.detection_counts(),
            "detection_rates": self.detection_rates(),
            "validity_rate": round(self.validity_rate(), 6),
            "warnings": self.warnings,
        }


def format_summary_table(reports: Sequence[CampaignReport]) -> str:
    """Bug class x mutator matrix; each cell is 'detected trials / trials'."""
    header = ["Mutator"] + [f"{b} {BUG_TITLES[b]}" for b in BUGS] + ["Valid configs"]
    rows = []
    for report in reports:
        counts = report.detection_counts()
        total = len(report.trials)
        cells = [MUTATOR_LABELS.get(report.mutator, report.mutator)]
        for bug in BUGS:
            mark = "yes" if counts[bug] else "--"
            cells.append(f"{mark} ({counts[bug]}/{total})")
        cells.append(f"{report.validity_rate() * 100:.1f}%")
        rows.append(cells)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    sep = "|-" + "-|-".join("-" * w for w in widths) + "-|"
    seeds = ", ".join(f"{MUTATOR_LABELS.get(r.mutator, r.mutator)}: seed {r.config.seed}, "
                      f"{len(r.trials)} trials, budget {r.config.budget_iterations} iterations"
                      for r in reports)
    return "\n".join([line(header), sep] + [line(r) for r in rows] + ["", seeds]) + "\n"


# --- Trial ---

def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8", errors="replace")).hexdigest()[:16]


def filter_interface(events: Sequence[NetworkEvent], target: str, interface: Optional[str] = None) -> List[NetworkEvent]:
    """Events seen at the target; with an interface label only that peer's session events."""
    kept = []
    for event in events:
        if event.node != target and event.peer != target:
            continue
        if interface is not None and event.peer is not None and interface not in (event.peer, event.node):
            continue
        kept.append(event)
    return kept


def collect_feedback(net: Network, target: str, events: Sequence[NetworkEvent] = (),
                     interface: Optional[str] = None) -> Feedback:
    """Snapshot the target's RIB and sessions plus the iteration's events."""
    rib = snapshot_rib(net, target)
    states = {}
    for session in net.sessions_of(target):
        up = session.state is SessionState.ESTABLISHED
        states[net.peer_address(target, session.peer)] = "Established" if up else "Down"
    return Feedback(
        rib=rib,
        announced_prefixes=frozenset(e.prefix for e in rib.best_entries()),
        session_states=states,
        last_events=tuple(filter_interface(events, target, interface)),
    )


def rib_dump(ribs) -> str:
    return "".join(f"# {node}\n{snap.text}" for node, snap in sorted(ribs.items()))


def replay_iteration(topology_text: str, target: str, config_text: str) -> OracleReport:
    """Deploy one archived configuration on a fresh network and rerun the oracles."""
    net = load_topology(topology_text)
    result, _ = converge(net)
    if not result.converged:
        raise SetupError("baseline does not converge")
    baseline = capture_baseline(net)
    start = len(net.events)
    apply_config(net, target, config_text)
    result, _ = converge(net)
    return run_all_oracles(baseline, _artifacts(net, baseline, start, result, config_text))


def _artifacts(net: Network, baseline: BaselineProfile, start: int, result, config_text: str) -> IterationArtifacts:
    # probing appends IcmpUnreachable events, so slice the log afterwards
    matrix = reachability(net, baseline.keys)
    return IterationArtifacts(
        events=tuple(net.events[start:]),
        ribs={n: snapshot_rib(net, n) for n in net.names},
        reachability=matrix,
        convergence=result,
        config_text=config_text,
    )


class _Rejected(Exception):
    """A planned mutation that could not be applied to the current tree."""

    def __init__(self, event: FuzzEvent, plan: str, reason: str):
        super().__init__(reason)
        self.event = event
        self.plan = plan
        self.reason = reason


class TrialRunner:
    """One trial: a private Network, baseline and rng stream."""

    def __init__(self, cfg: CampaignConfig, trial: int, topology_text: str,
                 archive_root: Optional[Path] = None):
        self.cfg = cfg
        self.trial = trial
        self.topology_text = topology_text
        self.archive_root = archive_root
        self.rng = np.random.default_rng([cfg.seed, trial])
        try:
            self.net = load_topology(topology_text)
        except TopologyError as exc:
            raise SetupError(str(exc)) from exc
        if cfg.target not in self.net.names:
            raise SetupError(f"target {cfg.target!r} is not in the topology")
        peers = [s.peer for s in self.net.sessions_of(cfg.target)]
        if cfg.interface is not None and cfg.interface not in peers:
            raise SetupError(f"interface {cfg.interface!r} is not a link of {cfg.target}")
        result, _ = converge(self.net)
        if not result.converged:
            raise SetupError("baseline does not converge")
        self.baseline = capture_baseline(self.net)
        self.golden = self.baseline.rib_texts
        self.seed_text = self.net.config_texts[cfg.target]
        self.seed_cfg, self.seed_tree = parse_config(self.seed_text)
        self.protected = [n.peer_address for n in self.seed_cfg.neighbors]
        self.current_text = self.seed_text
        self.current_tree: DerivationTree = self.seed_tree
        self.feedback = collect_feedback(self.net, cfg.target, interface=cfg.interface)
        self.warnings: List[str] = []
        self.mutants: List[str] = []

    @property
    def target(self) -> str:
        return self.cfg.target

    def _mutate(self, state: FuzzState) -> Tuple[str, List[FuzzEvent], str]:
        if self.cfg.mutator == "random":
            text = random_mutate(self.current_text, self.rng, self.cfg.random_ops)
            return text, [FuzzEvent.E1], "E1 random byte mutation"
        plan = select_mutation(self.feedback, state, self.rng, self.current_tree,
                               self.cfg.weights, self.cfg.subprefix_offsets, self.protected)
        try:
            tree = apply_plan(self.current_tree, plan, self.rng)
        except MutationError as exc:
            raise _Rejected(FuzzEvent(plan.kind.event), plan.describe(), str(exc)) from exc
        return tree.to_text(), [FuzzEvent(plan.kind.event)], plan.describe()

    def run_iteration(self, state: FuzzState, index: int) -> Tuple[IterationRecord, FuzzState]:
        """Mutate, deploy, converge, check; recover on findings, otherwise carry the config forward."""
        started = time.monotonic()
        state_before = state
        try:
            text, events, plan = self._mutate(state)
        except _Rejected as rejected:
            state = transition(state, rejected.event, deployed=False)
            logger.debug("iteration %d: mutation rejected (%s)", index, rejected.reason)
            record = IterationRecord(index, state_before, state, (rejected.event,), (state_before, state),
                                     config_hash(self.current_text), rejected.plan, OracleReport(),
                                     deployed=False, elapsed=time.monotonic() - started)
            return record, state
        except MutationError as exc:
            state = transition(state, FuzzEvent.E1, deployed=False)
            record = IterationRecord(index, state_before, state, (FuzzEvent.E1,), (state_before, state),
                                     config_hash(self.current_text), f"rejected: {exc}", OracleReport(),
                                     deployed=False, elapsed=time.monotonic() - started)
            return record, state

        self.mutants.append(text)
        start = len(self.net.events)
        originated_before = set(local_originations(self.net, self.target))
        apply_config(self.net, self.target, text)
        result, _ = converge(self.net)
        if set(local_originations(self.net, self.target)) - originated_before:
            events.append(FuzzEvent.E4)
        artifacts = _artifacts(self.net, self.baseline, start, result, text)
        report = run_all_oracles(self.baseline, artifacts)
        if report.findings:
            events += [FuzzEvent.E5, FuzzEvent.E6]

        path = [state]
        for event in events:
            state = transition(state, event)
            path.append(state)
        record = IterationRecord(index, state_before, state, tuple(events), tuple(path), config_hash(text),
                                 plan, report, bugs=classify_bugs(report))
        if report.findings:
            self.recover()
            if self.archive_root is not None and self.cfg.archive:
                archived = [self.archive_finding(f, record, n, artifacts) for n, f in enumerate(report.findings)]
                record = replace(record, archive_paths=tuple(p for p in archived if p is not None))
        else:
            if any(e.kind is EventKind.CONFIG_APPLIED for e in artifacts.events):
                self.current_text = text
                _, self.current_tree = parse_config(text)
            self.feedback = collect_feedback(self.net, self.target, artifacts.events, self.cfg.interface)

        record = replace(record, elapsed=time.monotonic() - started)
        classes = ",".join(sorted(c.value for c in report.bug_classes)) or "clean"
        logger.debug("iteration %d: %s %s -> %s %s", index, plan, state_before.value, state.value, classes)
        return record, state

    def recover(self) -> None:
        """Reset to the initial baseline and verify it against the golden RIBs."""
        reset(self.net)
        result, _ = converge(self.net)
        current = {n: snapshot_rib(self.net, n).text for n in self.net.names}
        if not result.converged or current != self.golden:
            raise RecoveryError("baseline RIBs differ from the golden snapshot after reset")
        self.current_text = self.seed_text
        self.current_tree = self.seed_tree
        self.feedback = collect_feedback(self.net, self.target, interface=self.cfg.interface)

    def archive_finding(self, finding: Finding, record: IterationRecord, number: int,
                        artifacts: IterationArtifacts) -> Optional[str]:
        """Write a self-contained directory that replays this finding."""
        name = f"iter-{record.index:05d}-{number:02d}-{finding.bug_class.value}"
        directory = self.archive_root / "findings" / f"trial-{self.trial:02d}" / name
        metadata = {
            "seed": self.cfg.seed,
            "trial": self.trial,
            "iteration": record.index,
            "finding_index": number,
            "target": self.target,
            "mutator": self.cfg.mutator,
            "plan": record.plan,
            "config_hash": record.config_hash,
            "bug_class": finding.bug_class.value,
            "key": finding.key,
            "finding": finding.to_dict(),
            "iteration_findings": [list(i) for i in record.report.idents()],
        }
        try:
            directory.mkdir(parents=True, exist_ok=True)
            (directory / "config.cfg").write_text(finding.config_text, encoding="utf-8")
            (directory / "baseline_rib.txt").write_text(rib_dump(self.baseline.ribs), encoding="utf-8")
            (directory / "current_rib.txt").write_text(rib_dump(artifacts.ribs), encoding="utf-8")
            (directory / "events.jsonl").write_text(events_to_jsonl(artifacts.events), encoding="utf-8")
            (directory / "topology.topo").write_text(self.topology_text, encoding="utf-8")
            (directory / "metadata.json").write_text(json.dumps(metadata, indent=2, sort_keys=True), encoding="utf-8")
        except OSError as exc:
            message = f"could not archive {name}: {exc}"
            logger.warning(message)
            self.warnings.append(message)
            return None
        logger.info("archived %s", directory)
        return str(directory)

    def run(self) -> TrialReport:
        report = TrialReport(self.trial, self.cfg.seed, self.cfg.mutator)
        if self.cfg.budget_is_zero:
            return report
        deadline = time.monotonic() + self.cfg.budget_seconds if self.cfg.budget_seconds is not None else None
        state = FuzzState.S0
        index = 0
        while self.cfg.budget_iterations is None or index < self.cfg.budget_iterations:
            if deadline is not None and time.monotonic() >= deadline:
                logger.warning("trial %d: wall-clock budget reached after %d iterations", self.trial, index)
                report.stopped_by_clock = True
                break
            record, state = self.run_iteration(state, index)
            report.records.append(record)
            for finding in record.report.findings:
                report.finding_counts[finding.bug_class.value] = report.finding_counts.get(finding.bug_class.value, 0) + 1
            for bug in record.bugs:
                if report.first_detection[bug] is None:
                    report.first_detection[bug] = index
            index += 1
        if not validate_trace(report.records):
            raise IllegalTransition(f"trial {self.trial} produced an inconsistent state trace")
        report.iterations = index
        report.validity = validity_rate(self.mutants) if self.mutants else 0.0
        report.warnings = list(self.warnings)
        logger.info("trial %d (%s): %d iterations, detected %s", self.trial, self.cfg.mutator,
                    index, ", ".join(report.detected) or "nothing")
        return report


def run_iteration(runner: TrialRunner, state: FuzzState, index: int = 0) -> Tuple[IterationRecord, FuzzState]:
    return runner.run_iteration(state, index)


def run_trial(cfg: CampaignConfig, trial: int, topology_text: str,
              archive_root: Optional[str] = None) -> TrialReport:
    root = Path(archive_root) if archive_root is not None else None
    return TrialRunner(cfg, trial, topology_text, root).run()


def run_campaign(cfg: CampaignConfig) -> CampaignReport:
    """Run every trial (in worker processes when jobs > 1) and collect the report."""
    try:
        topology_text = Path(cfg.topology).read_text(encoding="utf-8")
    except OSError as exc:
        raise SetupError(f"cannot read topology {cfg.topology}: {exc}") from exc
    report = CampaignReport(cfg)
    if cfg.budget_is_zero:
        return report
    archive_root = str(Path(cfg.out_dir) / cfg.mutator) if cfg.out_dir else None
    logger.info("campaign: %s mutator, %d trials, seed %d", cfg.mutator, cfg.trials, cfg.seed)
    if cfg.jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(run_trial, cfg, t, topology_text, archive_root) for t in range(cfg.trials)]
            report.trials = [f.result() for f in futures]
    else:
        report.trials = [run_trial(cfg, t, topology_text, archive_root) for t in range(cfg.trials)]
    report.trials.sort(key=lambda t: t.trial)
    return report
