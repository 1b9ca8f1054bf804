import argparse
import hashlib
import json
import logging
import sys
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass
from ipaddress import IPv4Address, IPv4Network
from pathlib import Path
from typing import FrozenSet, List, Optional, Tuple

import networkx as nx

from config_model import ParseError, parse_config
from fuzz_engine import (
    MUTATORS,
    CampaignConfig,
    CampaignReport,
    ConfigError,
    SetupError,
    format_summary_table,
    load_campaign_config,
    replay_iteration,
    run_campaign,
)
from oracles import OracleReport
from simulator import TopologyError, load_topology

logger = logging.getLogger(__name__)

# --- Configuration ---
VERSION = "0.1.0"
DEFAULT_CONFIG = "campaign.yaml"
DEFAULT_OUT_DIR = "output"
ZOO_ASN_BASE = 64512
ZOO_OWNED_SUPERNET = "10.0.0.0/8"
ZOO_OWNED_LENGTH = 24
ZOO_LINK_SUPERNET = "172.16.0.0/12"
ZOO_LINK_LENGTH = 30
ZOO_ROUTER_ID_BASE = "192.168.0.1"
TINY_RANGE = (5, 15)

EXIT_OK = 0
EXIT_SETUP = 1
EXIT_USAGE = 2
EXIT_FINDINGS = 3


class TopologyImportError(ValueError):
    """The GraphML input cannot be turned into a native topology."""


class ArchiveError(ValueError):
    """An archived finding directory is missing files or metadata."""


# --- Topology Zoo import ---

def _node_name(node) -> str:
    return "_".join(str(node).split()) or "node"


def import_topology_zoo(graphml_path: str,
                        owned_supernet: str = ZOO_OWNED_SUPERNET,
                        link_supernet: str = ZOO_LINK_SUPERNET,
                        asn_base: int = ZOO_ASN_BASE) -> str:
    """Convert a GraphML graph into native topology text; only the graph structure is used."""
    try:
        graph = nx.read_graphml(graphml_path)
    except (nx.NetworkXError, ET.ParseError, ValueError, KeyError) as exc:
        raise TopologyImportError(f"malformed GraphML {graphml_path}: {exc}") from exc
    graph = nx.Graph(graph.to_undirected())
    graph.remove_edges_from(list(nx.selfloop_edges(graph)))
    if graph.number_of_nodes() == 0:
        raise TopologyImportError(f"{graphml_path} has no nodes")

    names = {node: _node_name(node) for node in graph.nodes}
    if len(set(names.values())) != len(names):
        raise TopologyImportError("node identifiers collide after whitespace normalization")
    ordered = sorted(graph.nodes, key=lambda n: names[n])
    owned_pool = IPv4Network(owned_supernet).subnets(new_prefix=ZOO_OWNED_LENGTH)
    link_pool = IPv4Network(link_supernet).subnets(new_prefix=ZOO_LINK_LENGTH)
    owned_capacity = 2 ** (ZOO_OWNED_LENGTH - IPv4Network(owned_supernet).prefixlen)
    link_capacity = 2 ** (ZOO_LINK_LENGTH - IPv4Network(link_supernet).prefixlen)
    if len(ordered) > owned_capacity:
        raise TopologyImportError(f"{len(ordered)} nodes exceed the {owned_capacity} blocks in {owned_supernet}")
    if graph.number_of_edges() > link_capacity:
        raise TopologyImportError(f"{graph.number_of_edges()} edges exceed the {link_capacity} blocks in {link_supernet}")

    count = len(ordered)
    if not TINY_RANGE[0] <= count <= TINY_RANGE[1]:
        logger.warning("%s has %d nodes, outside the tiny range %d-%d", graphml_path, count, *TINY_RANGE)

    lines = [f"# imported from {Path(graphml_path).name}: {count} nodes, {graph.number_of_edges()} links",
             f"# ASNs assigned sequentially from {asn_base} by sorted node name"]
    router_id = IPv4Address(ZOO_ROUTER_ID_BASE)
    for index, node in enumerate(ordered):
        lines.append(f"node {names[node]} asn {asn_base + index} router-id {router_id + index} "
                     f"owns {next(owned_pool)}")
    edges = sorted(tuple(sorted((names[a], names[b]))) for a, b in graph.edges)
    for a, b in edges:
        lines.append(f"link {a} {b} subnet {next(link_pool)}")
    return "\n".join(lines) + "\n"


# --- Run manifest ---

@dataclass(frozen=True)
class RunManifest:
    config: dict
    version: str
    topology_hash: str
    layout: dict
    asn_scheme: str = "from topology file"

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True), encoding="utf-8")
        return path


def build_manifest(cfg: CampaignConfig, mutators: List[str]) -> RunManifest:
    topology_text = Path(cfg.topology).read_text(encoding="utf-8")
    config = cfg.to_dict()
    config["mutator"] = "both" if len(mutators) > 1 else mutators[0]
    scheme = "from topology file"
    if "ASNs assigned sequentially" in topology_text:
        scheme = f"synthesized sequentially from {ZOO_ASN_BASE}"
    return RunManifest(
        config=config,
        version=VERSION,
        topology_hash=hashlib.sha256(topology_text.encode("utf-8")).hexdigest(),
        layout={
            "manifest": "manifest.json",
            "report": "report.json",
            "summary": "summary.txt",
            "trials": "trials/<mutator>/trial-XX.json",
            "findings": "<mutator>/findings/trial-XX/iter-NNNNN-MM-<class>/",
        },
        asn_scheme=scheme,
    )


def write_reports(out_dir: Path, reports: List[CampaignReport]) -> str:
    summary = format_summary_table(reports)
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8")
    combined = {"version": VERSION, "campaigns": [r.to_dict() for r in reports]}
    (out_dir / "report.json").write_text(json.dumps(combined, indent=2, sort_keys=True), encoding="utf-8")
    for report in reports:
        trial_dir = out_dir / "trials" / report.mutator
        trial_dir.mkdir(parents=True, exist_ok=True)
        for trial in report.trials:
            (trial_dir / f"trial-{trial.trial:02d}.json").write_text(
                json.dumps(trial.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    return summary


# --- Replay ---

@dataclass(frozen=True)
class ReplayResult:
    matched: bool
    expected: Tuple[str, str]
    report: OracleReport
    archived: FrozenSet[Tuple[str, str]] = frozenset()

    @property
    def missing(self) -> List[Tuple[str, str]]:
        return sorted(self.archived - set(self.report.idents()))

    @property
    def unexpected(self) -> List[Tuple[str, str]]:
        return sorted(set(self.report.idents()) - self.archived)


def replay_archive(archive_dir: str) -> ReplayResult:
    """
    Re-deploy an archived configuration; it matches when the replay yields
    exactly the findings archived for that iteration.
    """
    directory = Path(archive_dir)
    try:
        metadata = json.loads((directory / "metadata.json").read_text(encoding="utf-8"))
        config_text = (directory / "config.cfg").read_text(encoding="utf-8")
        topology_text = (directory / "topology.topo").read_text(encoding="utf-8")
        expected = (metadata["bug_class"], metadata["key"])
        target = metadata["target"]
        archived = frozenset(tuple(i) for i in metadata.get("iteration_findings", [expected]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ArchiveError(f"corrupt archive {archive_dir}: {exc}") from exc
    if expected not in archived:
        raise ArchiveError(f"corrupt archive {archive_dir}: {expected} missing from iteration_findings")
    try:
        report = replay_iteration(topology_text, target, config_text)
    except (TopologyError, SetupError, KeyError) as exc:
        raise ArchiveError(f"archive {archive_dir} cannot be replayed: {exc}") from exc
    return ReplayResult(set(report.idents()) == archived, expected, report, archived)


# --- Commands ---

def cmd_run(args) -> int:
    config_path = Path(args.config)
    if not config_path.exists():
        print(f"❌ Campaign file '{config_path}' not found.")
        return EXIT_USAGE
    try:
        cfg = load_campaign_config(str(config_path))
        both = args.mutator == "both"
        cfg = cfg.with_overrides(
            seed=args.seed,
            budget_iterations=args.budget_iters,
            budget_seconds=args.budget_seconds,
            trials=args.trials,
            mutator=None if both or args.mutator is None else args.mutator,
            jobs=args.jobs,
            out_dir=args.out_dir,
        )
    except ConfigError as exc:
        print(f"❌ Invalid campaign configuration: {exc}")
        return EXIT_USAGE
    if not Path(cfg.topology).exists():
        print(f"❌ Topology file '{cfg.topology}' not found.")
        return EXIT_USAGE

    mutators = list(MUTATORS) if both else [cfg.mutator]
    out_dir = Path(cfg.out_dir or DEFAULT_OUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = cfg.with_overrides(out_dir=str(out_dir))

    print(f"=== BGP Configuration Fuzzer v{VERSION} ===")
    print(f"Topology: {cfg.topology}")
    print(f"Target router: {cfg.target}" + (f" (interface {cfg.interface})" if cfg.interface else ""))
    print(f"Mutator: {' + '.join(mutators)}")
    print(f"Budget: {cfg.budget_iterations} iterations" +
          (f", {cfg.budget_seconds}s wall clock" if cfg.budget_seconds is not None else ""))
    print(f"Trials: {cfg.trials} (jobs: {cfg.jobs})")
    print(f"Seed: {cfg.seed}")
    print(f"Output directory: {out_dir}")
    print("=" * 50)

    build_manifest(cfg, mutators).write(out_dir)
    reports = []
    for mutator in mutators:
        print(f"\n🎯 Running {mutator} campaign...")
        try:
            reports.append(run_campaign(cfg.with_overrides(mutator=mutator)))
        except SetupError as exc:
            print(f"❌ Setup error: {exc}")
            return EXIT_SETUP

    summary = write_reports(out_dir, reports)
    print("\n📊 Summary:")
    print(summary)
    for report in reports:
        print(f"   {report.mutator}: {report.total_findings} findings, "
              f"validity {report.validity_rate() * 100:.1f}%")
        for warning in report.warnings:
            print(f"   ⚠️  {warning}")
    print(f"\n✅ Campaign complete. Reports written to {out_dir}")

    if args.fail_on_finding and any(r.total_findings for r in reports):
        return EXIT_FINDINGS
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        result = replay_archive(args.archive)
    except ArchiveError as exc:
        print(f"❌ {exc}")
        return EXIT_SETUP
    print(result.report.text, end="")
    verdict = "MATCH" if result.matched else "MISMATCH"
    print(f"{verdict}: expected {result.expected[0]} {result.expected[1]}")
    for bug_class, key in result.missing:
        print(f"   missing {bug_class} {key}")
    for bug_class, key in result.unexpected:
        print(f"   unexpected {bug_class} {key}")
    return EXIT_OK if result.matched else EXIT_SETUP


def cmd_import_zoo(args) -> int:
    if not Path(args.graphml).exists():
        print(f"❌ GraphML file '{args.graphml}' not found.")
        return EXIT_USAGE
    try:
        text = import_topology_zoo(args.graphml, args.owned_supernet, args.link_supernet, args.asn_base)
        load_topology(text)
    except (TopologyImportError, TopologyError) as exc:
        print(f"❌ Import failed: {exc}")
        return EXIT_SETUP
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")
    print(f"✅ Wrote {output}")
    return EXIT_OK


def cmd_validate(args) -> int:
    path = Path(args.path)
    if not path.exists():
        print(f"❌ File '{path}' not found.")
        return EXIT_USAGE
    text = path.read_text(encoding="utf-8", errors="replace")
    try:
        if path.suffix == ".topo":
            net = load_topology(text)
            print(f"✅ Topology OK: {len(net.names)} nodes, {len(net.topology.links)} links")
        else:
            cfg, _ = parse_config(text)
            print(f"✅ Configuration OK: AS{cfg.local_asn}, {len(cfg.neighbors)} neighbors, "
                  f"{len(cfg.networks)} networks, {len(cfg.static_routes)} static routes")
    except (ParseError, TopologyError) as exc:
        print(f"❌ {path}: {exc}")
        return EXIT_SETUP
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Grammar-aware, stateful BGP configuration fuzzer")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a fuzzing campaign")
    run.add_argument("--config", "-c", default=DEFAULT_CONFIG, help="Campaign YAML file")
    run.add_argument("--seed", type=int, help="Override the campaign seed")
    run.add_argument("--budget-iters", type=int, help="Iterations per trial")
    run.add_argument("--budget-seconds", type=float, help="Wall-clock cap per trial")
    run.add_argument("--trials", type=int, help="Number of trials")
    run.add_argument("--mutator", choices=list(MUTATORS) + ["both"], help="Mutator kind")
    run.add_argument("--jobs", type=int, help="Parallel trial workers")
    run.add_argument("--out-dir", "-o", help="Report directory")
    run.add_argument("--fail-on-finding", action="store_true",
                     help=f"Exit {EXIT_FINDINGS} when any finding is reported")
    run.set_defaults(func=cmd_run)

    replay = sub.add_parser("replay", help="Replay an archived finding")
    replay.add_argument("archive", help="Finding directory")
    replay.set_defaults(func=cmd_replay)

    zoo = sub.add_parser("import-zoo", help="Convert a Topology Zoo GraphML file")
    zoo.add_argument("graphml", help="GraphML input")
    zoo.add_argument("--output", "-o", required=True, help="Native topology output file")
    zoo.add_argument("--owned-supernet", default=ZOO_OWNED_SUPERNET)
    zoo.add_argument("--link-supernet", default=ZOO_LINK_SUPERNET)
    zoo.add_argument("--asn-base", type=int, default=ZOO_ASN_BASE)
    zoo.set_defaults(func=cmd_import_zoo)

    validate = sub.add_parser("validate", help="Check a configuration or .topo file")
    validate.add_argument("path")
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function with command line argument support."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
