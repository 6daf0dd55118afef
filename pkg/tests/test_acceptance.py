"""Acceptance gate: one test per criterion, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import functools
import io
import json
import random
import time

import pytest
from click.testing import CliRunner

from actreach.cli import main as cli_main
from actreach.coverage import (
    LaunchOutcomeRecord,
    activity_coverage,
    launch_success_rate,
    recall_at_k,
    unreachable_set,
)
from actreach.ctg import build_ctg, find_launch_sites, resolve_intent_target
from actreach.episodic import Recorder, SequentialClock
from actreach.index import build_code_index
from actreach.loop import REACHED, UNREACHABLE_BY_TOOL
from actreach.mcp_server import TOOLS, serve
from actreach.smali import Kind, emit, parse_smali_file

from conftest import SMALI_FIXTURES, load_kind_annotations, write_demo_config
from test_cli import run_full_pipeline
from test_index import brute_force_duality_holds, make_synthetic_package
from test_loop import BAD_PLAN, dyn_turn, run as run_loop, succeed_at
from test_widgets import check_against_oracle, check_invariants, random_instance


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            print(f"\nACCEPTANCE {name}: PASS")
            return result

        return wrapper

    return decorate


@criterion("parser-corpus")
def test_parser_corpus():
    started = time.monotonic()
    paths = sorted(SMALI_FIXTURES.glob("*.smali"))
    annotated = 0
    for path in paths:
        text = path.read_text(encoding="utf-8")
        cls = parse_smali_file(text)
        assert emit(cls) == text, f"emit-parse round-trip failed for {path.name}"
        table = load_kind_annotations(path)
        if not table:
            continue
        annotated += 1
        by_line = {ins.line_no: ins for m in cls.methods for ins in m.instructions}
        for line_no, expected in table.items():
            ins = by_line[line_no]
            assert ins.kind.value == expected, f"{path.name}:{line_no}"
            if expected != "Other":
                assert ins.kind is not Kind.OTHER
    assert annotated >= 10, "need the motivating fixture plus at least ten annotated fixtures"
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"parser corpus took {elapsed:.1f}s"


@criterion("callgraph-duality")
def test_callgraph_duality_brute_force():
    started = time.monotonic()
    rng = random.Random(20260810)
    for _ in range(200):
        classes = make_synthetic_package(rng, max_classes=50)
        assert len(classes) <= 50
        index = build_code_index(classes)
        assert brute_force_duality_holds(index)
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"duality sweep took {elapsed:.1f}s"


@criterion("ctg-soundness")
def test_ctg_soundness_on_planted_fixtures():
    names_and_planted = [
        ("launcher_constclass.smali", {("Lcom/fix/HomeActivity;", "Lcom/fix/DetailActivity;")}),
        ("launcher_setclassname.smali", {("Lcom/fix/MenuActivity;", "Lcom/fix/TargetActivity;")}),
        (
            "launcher_two.smali",
            {
                ("Lcom/fix/DoubleActivity;", "Lcom/fix/FirstActivity;"),
                ("Lcom/fix/DoubleActivity;", "Lcom/fix/SecondActivity;"),
            },
        ),
    ]
    declared = [
        "Lcom/fix/HomeActivity;",
        "Lcom/fix/DetailActivity;",
        "Lcom/fix/MenuActivity;",
        "Lcom/fix/TargetActivity;",
        "Lcom/fix/DoubleActivity;",
        "Lcom/fix/FirstActivity;",
        "Lcom/fix/SecondActivity;",
        "Lcom/fix/RelayActivity;",
    ]
    for name, planted in names_and_planted:
        cls = parse_smali_file((SMALI_FIXTURES / name).read_text(encoding="utf-8"))
        index = build_code_index([cls])
        ctg = build_ctg(declared, index)
        assert {(src, dst) for src, _m, dst in ctg.edges} == planted
        assert len(ctg.edges) == len(planted)
        assert ctg.unresolved_sites == ()

    relay = parse_smali_file((SMALI_FIXTURES / "launcher_param.smali").read_text(encoding="utf-8"))
    index = build_code_index([relay])
    sites = [resolve_intent_target(index, s) for s in find_launch_sites(index)]
    ctg = build_ctg(declared, index, sites)
    assert ctg.edges == ()
    assert len(ctg.unresolved_sites) == 1
    assert ctg.unresolved_sites[0].resolution == "Unresolved"


@criterion("dialog-planner-oracle")
def test_dialog_planner_matches_independent_oracle():
    rng = random.Random(77007)
    for _ in range(200):
        declared, mains, unreachables, instrumentations, edge_pairs = random_instance(rng)
        dialogs = check_against_oracle(declared, mains, unreachables, instrumentations, edge_pairs)
        check_invariants(dialogs, mains, unreachables, instrumentations, edge_pairs, declared)
        again = check_against_oracle(declared, mains, unreachables, instrumentations, edge_pairs)
        assert dialogs.buttons == again.buttons and list(dialogs.buttons) == list(again.buttons)


@criterion("mcp-conformance")
def test_mcp_conformance(demo_pkg):
    names = [t.name for t in TOOLS]
    assert len(names) == 9
    assert sorted(set(names)) == [
        "check_activity_exists",
        "check_class_exists",
        "get_activities",
        "get_caller_methods",
        "get_launching_activities_and_methods",
        "get_method_body",
        "get_methods_inside_class",
        "get_methods_invoked",
    ]
    assert names.count("get_launching_activities_and_methods") == 2

    frames = []
    for i in range(50):
        frames.append(
            json.dumps(
                {
                    "jsonrpc": "2.0",
                    "id": 1000 + i,
                    "method": "tools/call",
                    "params": {"name": "get_activities", "arguments": {}},
                }
            )
        )
    frames.insert(10, "}}} not json at all")
    frames.insert(30, json.dumps({"jsonrpc": "2.0", "id": 9999, "method": "tools/call", "params": {"name": "bogus"}}))

    stdin = io.StringIO("\n".join(frames) + "\n")
    stdout = io.StringIO()
    recorder = Recorder(clock=SequentialClock())
    serve(demo_pkg, recorder, stdin=stdin, stdout=stdout)
    responses = [json.loads(line) for line in stdout.getvalue().splitlines()]

    ok = [r for r in responses if "result" in r]
    assert [r["id"] for r in ok] == [1000 + i for i in range(50)]
    parse_errors = [r for r in responses if r.get("error", {}).get("code") == -32700]
    assert len(parse_errors) == 1
    bogus = [r for r in responses if r.get("id") == 9999]
    assert bogus[0]["error"]["code"] == -32601
    # 50 good calls + 1 bogus tools/call are recorded; the unparsable frame is not a call
    assert len(recorder) == 51
    assert [r.seq for r in recorder.records] == list(range(1, 52))


@criterion("loop-bound-and-lineage")
def test_loop_bound_and_feedback_lineage(demo_pkg):
    for k in (1, 3, 5):
        client = succeed_at(k)
        result = run_loop(demo_pkg, client)
        assert result.status == REACHED
        assert result.iterations_used == k
        assert len(result.artifacts) == k
        refine_prompts = client.prompts[1:]
        assert all("OUTCOME:" in p for p in refine_prompts)

    from test_loop import TranscriptClient

    always_wrong = TranscriptClient([dyn_turn(BAD_PLAN)] * 5)
    result = run_loop(demo_pkg, always_wrong)
    assert result.status == UNREACHABLE_BY_TOOL
    assert result.iterations_used == 5
    assert len(result.artifacts) == 5


@criterion("end-to-end-coverage-lift")
def test_end_to_end_coverage_lift(tmp_path):
    started = time.monotonic()
    runner = CliRunner()
    config_path = write_demo_config(tmp_path, out_name="out")
    out = tmp_path / "out"
    run_full_pipeline(runner, config_path, out)

    report = (out / "report.txt").read_text(encoding="utf-8")
    assert "baseline_activity_coverage=0.500000" in report
    assert "final_activity_coverage=1.000000" in report

    cancel = runner.invoke(
        cli_main,
        ["-c", str(config_path), "explore", "--dialogs", str(out / "dialogs.tsv"),
         "--cancel-prob", "1.0", "--out", "cancel.log"],
        catch_exceptions=False,
    )
    assert cancel.exit_code == 0
    baseline = {l for l in (out / "baseline.log").read_text().splitlines() if not l.startswith("#")}
    cancel_visited = {l for l in (out / "cancel.log").read_text().splitlines() if not l.startswith("#")}
    assert cancel_visited == baseline

    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"end-to-end pipeline took {elapsed:.1f}s"


@criterion("metric-identities")
def test_metric_identities():
    rng = random.Random(31337)
    ids = [f"r{i}" for i in range(13)]

    for _ in range(1000):
        ranked = rng.sample(ids, rng.randint(1, len(ids)))
        truth = set(rng.sample(ids, rng.randint(1, 5)))
        values = [recall_at_k(ranked, truth, k) for k in range(1, len(ranked) + 2)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    for _ in range(100):
        records = [
            LaunchOutcomeRecord("La/T;", rng.choice(["c1", "c2", "c3", "c4"]), rng.random() < 0.5)
            for _ in range(rng.randint(1, 60))
        ]
        rates = launch_success_rate(records)
        total = sum(r.success for r in records) / len(records)
        assert rates.weighted_average == pytest.approx(total)

    for _ in range(100):
        declared = {f"La/N{i};" for i in rng.sample(range(60), rng.randint(1, 40))}
        visited = {a for a in declared if rng.random() < 0.5}
        cov = activity_coverage(declared, visited)
        unreachable = unreachable_set(declared, visited)
        assert cov == pytest.approx(1 - len(unreachable) / len(declared))


@criterion("pipeline-determinism")
def test_pipeline_determinism(tmp_path):
    runner = CliRunner()
    outputs = []
    for out_name in ("run1", "run2"):
        config_path = write_demo_config(tmp_path, out_name=out_name)
        out = tmp_path / out_name
        run_full_pipeline(runner, config_path, out)
        outputs.append(out)

    first, second = outputs
    compare = ["report.txt", "dialogs.tsv", "ctg.tsv", "unreachable.txt", "package.json",
               "baseline.log", "explored.log"]
    for name in compare:
        assert (first / name).read_bytes() == (second / name).read_bytes(), f"{name} differs"
    first_episodic = sorted((first / "episodic").glob("*.jsonl"))
    second_episodic = sorted((second / "episodic").glob("*.jsonl"))
    assert [p.name for p in first_episodic] == [p.name for p in second_episodic]
    for a, b in zip(first_episodic, second_episodic):
        assert a.read_bytes() == b.read_bytes(), f"episodic {a.name} differs"
    for a, b in zip(sorted((first / "loop").glob("*")), sorted((second / "loop").glob("*"))):
        assert a.read_bytes() == b.read_bytes(), f"loop artifact {a.name} differs"
