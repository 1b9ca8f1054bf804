#!/usr/bin/env python3
"""Tests for the fuzzing state machine, trial runner and campaign reports."""

import json
import sys
from dataclasses import replace
from ipaddress import IPv4Network
from pathlib import Path

import pytest

from config_model import NetworkStmt
from fuzz_engine import (
    BUGS,
    TRANSITIONS,
    CampaignConfig,
    CampaignReport,
    ConfigError,
    FuzzEvent,
    FuzzState,
    IllegalTransition,
    SetupError,
    TrialReport,
    TrialRunner,
    campaign_config_from_dict,
    collect_feedback,
    filter_interface,
    format_summary_table,
    load_campaign_config,
    run_campaign,
    run_iteration,
    transition,
    validate_trace,
)
from mutation_engine import MutationPlan, MutationWeights, PlanKind
from simulator import EventKind, NetworkEvent, converge, load_topology, snapshot_rib

ROOT = Path(__file__).resolve().parent
TINY5_PATH = ROOT / "topologies" / "tiny5.topo"
TINY5 = TINY5_PATH.read_text()

S0, S1, S2 = FuzzState.S0, FuzzState.S1, FuzzState.S2
E1, E2, E3, E4, E5, E6 = (FuzzEvent(f"E{i}") for i in range(1, 7))


def make_config(**overrides):
    values = dict(topology=str(TINY5_PATH), target="R1", budget_iterations=20, trials=1, seed=42)
    values.update(overrides)
    return CampaignConfig(**values)


# --- State machine ---

def test_transition_table():
    assert TRANSITIONS == {
        (S0, E1): S1, (S0, E2): S1, (S0, E3): S1,
        (S1, E1): S1, (S1, E2): S1, (S1, E3): S1, (S1, E4): S1,
        (S0, E5): S2, (S1, E5): S2,
        (S2, E6): S0,
    }


@pytest.mark.parametrize("state,event", [(S0, E4), (S0, E6), (S1, E6), (S2, E1), (S2, E5)])
def test_illegal_transitions(state, event):
    with pytest.raises(IllegalTransition):
        transition(state, event)


def test_rejected_change_keeps_normal_run():
    assert transition(S0, E2, deployed=False) is S0
    assert transition(S1, E2, deployed=False) is S1


def test_state_labels():
    assert S2.label == "Error Detected"
    assert E4.label == "prefix announcement"


# --- Campaign configuration ---

@pytest.mark.parametrize("overrides", [
    dict(budget_iterations=None, budget_seconds=None),
    dict(budget_iterations=-1),
    dict(budget_seconds=-0.5),
    dict(trials=0),
    dict(mutator="afl"),
    dict(subprefix_offsets=()),
    dict(subprefix_offsets=(0,)),
    dict(jobs=0),
])
def test_campaign_config_validation(overrides):
    with pytest.raises(ConfigError):
        make_config(**overrides)


def test_with_overrides_skips_none():
    cfg = make_config().with_overrides(seed=7, trials=None, mutator="random")
    assert (cfg.seed, cfg.trials, cfg.mutator) == (7, 1, "random")


def test_config_from_dict(tmp_path):
    cfg = campaign_config_from_dict(
        {"topology": "net.topo", "target": "R1", "out_dir": "out",
         "weights": {"subprefix": 1, "max_prefix": 0, "field": 0, "other": 0},
         "subprefix_offsets": [3]},
        tmp_path,
    )
    assert cfg.topology == str(tmp_path / "net.topo")
    assert cfg.out_dir == str(tmp_path / "out")
    assert cfg.weights == MutationWeights(1, 0, 0, 0)
    assert cfg.subprefix_offsets == (3,)


@pytest.mark.parametrize("data", [
    {"target": "R1"},
    {"topology": "t.topo"},
    {"topology": "t.topo", "target": "R1", "colour": "blue"},
    {"topology": "t.topo", "target": "R1", "weights": {"subprefix": -1}},
    ["topology", "target"],
])
def test_config_from_dict_rejects(data):
    with pytest.raises(ConfigError):
        campaign_config_from_dict(data)


def test_load_campaign_config(tmp_path):
    path = tmp_path / "campaign.yaml"
    path.write_text("topology: tiny.topo\ntarget: R1\nbudget_iterations: 5\nseed: 3\n")
    cfg = load_campaign_config(str(path))
    assert cfg.topology == str(tmp_path / "tiny.topo")
    assert cfg.budget_iterations == 5
    path.write_text("topology: [unclosed\n")
    with pytest.raises(ConfigError):
        load_campaign_config(str(path))


# --- Trial setup ---

@pytest.mark.parametrize("overrides,text", [
    (dict(target="R9"), TINY5),
    (dict(interface="R5"), TINY5),
    ({}, "node R1 asn 1\n"),
])
def test_trial_setup_errors(overrides, text):
    with pytest.raises(SetupError):
        TrialRunner(make_config(**overrides), 0, text)


def test_filter_interface():
    events = [
        NetworkEvent(1, "R1", EventKind.PREFIX_ANNOUNCED, peer="R2"),
        NetworkEvent(1, "R1", EventKind.PREFIX_ANNOUNCED, peer="R3"),
        NetworkEvent(1, "R1", EventKind.CONFIG_APPLIED),
        NetworkEvent(1, "R4", EventKind.SESSION_UP, peer="R5"),
        NetworkEvent(1, "R2", EventKind.SESSION_DOWN, peer="R1"),
    ]
    assert len(filter_interface(events, "R1")) == 4
    assert [e.peer for e in filter_interface(events, "R1", "R2")] == ["R2", None, "R1"]


def test_collect_feedback():
    net = load_topology(TINY5)
    converge(net)
    feedback = collect_feedback(net, "R1")
    assert set(feedback.session_states.values()) == {"Established"}
    assert feedback.announced_prefixes == frozenset(e.prefix for e in snapshot_rib(net, "R1").best_entries())


# --- Iterations ---

def test_subprefix_iteration_detects_hijack_and_recovers(tmp_path):
    cfg = make_config(weights=MutationWeights(1, 0, 0, 0))
    runner = TrialRunner(cfg, 0, TINY5, tmp_path)
    record, state = run_iteration(runner, S0, 0)
    assert record.events == (E2, E4, E5, E6)
    assert record.states == (S0, S1, S1, S2, S0)
    assert state is S0
    assert record.bugs == ("Bug-03",)
    assert record.plan.startswith("E2 subprefix:")

    assert runner.current_text == runner.seed_text
    assert {n: snapshot_rib(runner.net, n).text for n in runner.net.names} == runner.golden

    hijack_dirs = [Path(p) for p in record.archive_paths if p.endswith("SubPrefixHijack")]
    assert len(hijack_dirs) == 1
    metadata = json.loads((hijack_dirs[0] / "metadata.json").read_text())
    assert metadata["bug_class"] == "SubPrefixHijack"
    assert metadata["seed"] == 42
    config = (hijack_dirs[0] / "config.cfg").read_text()
    assert "Null0" in config
    for name in ("baseline_rib.txt", "current_rib.txt", "events.jsonl", "topology.topo"):
        assert (hijack_dirs[0] / name).is_file()


def test_max_prefix_iteration_records_session_reset():
    cfg = make_config(weights=MutationWeights(0, 1, 0, 0))
    for seed in range(40):
        runner = TrialRunner(cfg.with_overrides(seed=seed), 0, TINY5)
        record, state = runner.run_iteration(S0, 0)
        if "Bug-02" in record.bugs:
            break
    else:
        pytest.fail("no low maximum-prefix limit drawn in 40 seeds")
    assert record.events == (E2, E5, E6)
    assert record.states == (S0, S1, S2, S0)
    assert record.report.idents()[0][0] == "SessionReset"
    assert state is S0


def test_clean_iteration_carries_config_forward():
    cfg = make_config(weights=MutationWeights(0, 1, 0, 0))
    for seed in range(40):
        runner = TrialRunner(cfg.with_overrides(seed=seed), 0, TINY5)
        record, state = runner.run_iteration(S0, 0)
        if record.report.is_clean:
            break
    else:
        pytest.fail("every drawn limit tripped the session")
    assert state is S1
    assert record.events == (E2,)
    assert "maximum-prefix" in runner.current_text
    assert runner.current_text != runner.seed_text


def test_rejected_insertion_is_self_loop(monkeypatch):
    duplicate = MutationPlan(PlanKind.STATEMENT_INSERTION, (), (NetworkStmt(IPv4Network("10.1.0.0/24")),),
                             strategy="insertion")
    monkeypatch.setattr("fuzz_engine.select_mutation", lambda *args, **kwargs: duplicate)
    runner = TrialRunner(make_config(), 0, TINY5)
    events_before = len(runner.net.events)
    record, state = runner.run_iteration(S0, 0)
    assert state is S0
    assert not record.deployed
    assert record.events == (E2,)
    assert record.states == (S0, S0)
    assert len(runner.net.events) == events_before
    assert validate_trace([record])


# --- Trials and campaigns ---

def test_scaled_grammar_campaign(tmp_path):
    cfg = make_config(budget_iterations=100, trials=3, out_dir=str(tmp_path))
    report = run_campaign(cfg)
    assert [t.trial for t in report.trials] == [0, 1, 2]
    for trial in report.trials:
        assert trial.iterations == 100
        assert trial.validity == 1.0
        assert trial.first_detection["Bug-01"] is None
        assert trial.first_detection["Bug-02"] is not None
        assert trial.first_detection["Bug-03"] is not None
        assert validate_trace(trial.records)
    counts = report.detection_counts()
    assert counts == {"Bug-01": 0, "Bug-02": 3, "Bug-03": 3}
    assert (tmp_path / "grammar" / "findings" / "trial-00").is_dir()


def test_scaled_random_campaign():
    report = run_campaign(make_config(budget_iterations=100, trials=2, mutator="random"))
    counts = report.detection_counts()
    assert counts["Bug-01"] == 2
    assert counts["Bug-03"] == 0
    assert report.validity_rate() < 1.0


def test_campaign_is_deterministic():
    cfg = make_config(budget_iterations=40, trials=2)
    first, second = run_campaign(cfg), run_campaign(cfg)
    for a, b in zip(first.trials, second.trials):
        assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]
        assert a.first_detection == b.first_detection
    assert format_summary_table([first]) == format_summary_table([second])


def test_trials_use_distinct_streams():
    report = run_campaign(make_config(budget_iterations=30, trials=2))
    plans = [[r.plan for r in t.records] for t in report.trials]
    assert plans[0] != plans[1]


def test_zero_budget_campaign():
    report = run_campaign(make_config(budget_iterations=0))
    assert report.trials == []
    assert report.detection_rates() == {b: 0.0 for b in BUGS}


def test_wall_clock_budget():
    report = run_campaign(make_config(budget_iterations=None, budget_seconds=0.5))
    (trial,) = report.trials
    assert trial.stopped_by_clock
    assert trial.iterations >= 1


def test_missing_topology_file(tmp_path):
    with pytest.raises(SetupError):
        run_campaign(make_config(topology=str(tmp_path / "absent.topo")))


def test_validate_trace_catches_inconsistency():
    report = run_campaign(make_config(budget_iterations=10))
    records = report.trials[0].records
    assert validate_trace(records)
    broken = list(records)
    broken[0] = replace(broken[0], state_after=S2)
    assert not validate_trace(broken)


def test_summary_table():
    grammar = CampaignReport(make_config(trials=2))
    grammar.trials = [
        TrialReport(0, 42, "grammar", 10, {"Bug-01": None, "Bug-02": 3, "Bug-03": 1}, validity=1.0),
        TrialReport(1, 42, "grammar", 10, {"Bug-01": None, "Bug-02": None, "Bug-03": 4}, validity=1.0),
    ]
    random = CampaignReport(make_config(trials=2, mutator="random"))
    random.trials = [
        TrialReport(0, 42, "random", 10, {"Bug-01": 0, "Bug-02": None, "Bug-03": None}, validity=0.25),
        TrialReport(1, 42, "random", 10, {"Bug-01": 2, "Bug-02": None, "Bug-03": None}, validity=0.35),
    ]
    table = format_summary_table([grammar, random])
    lines = table.splitlines()
    assert "Bug-01 Invalid config" in lines[0]
    assert "-- (0/2)" in lines[2] and "yes (1/2)" in lines[2] and "yes (2/2)" in lines[2]
    assert "100.0%" in lines[2]
    assert lines[3].count("-- (0/2)") == 2
    assert "30.0%" in lines[3]
    assert "seed 42" in table
    assert grammar.detection_rates()["Bug-02"] == 0.5


@pytest.mark.slow
def test_full_campaign_detection_rates():
    cfg = load_campaign_config(str(ROOT / "campaign.yaml")).with_overrides(archive=False)
    cfg = replace(cfg, out_dir=None)
    grammar = run_campaign(cfg)
    counts = grammar.detection_counts()
    assert counts["Bug-01"] == 0
    assert counts["Bug-02"] >= 9
    assert counts["Bug-03"] >= 9
    assert grammar.validity_rate() == 1.0

    baseline = run_campaign(cfg.with_overrides(mutator="random"))
    counts = baseline.detection_counts()
    assert counts["Bug-01"] >= 9
    assert counts["Bug-02"] <= 1
    assert counts["Bug-03"] <= 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
