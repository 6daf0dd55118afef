"""Command-line pipeline: ingest, graph, infer, instrument, validate, plan,
explore, report.

Stages communicate only through files in the configured output directory,
so any stage can be re-run independently. All randomness flows from the one
seed in the config; tool-call records use a sequential logical clock, which
keeps repeated runs byte-identical.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import agents, coverage, ctg as ctgmod, mcp_server, widgets
from .clients import HttpChatClient, ReplayClient
from .config import PipelineConfig, load_config
from .device import ExternalDeviceAdapter, SimulatedDevice, load_scenario
from .episodic import EpisodicMemory, Recorder, SequentialClock
from .errors import (
    ActreachError,
    ClientError,
    ConfigError,
    DeviceUnavailable,
    EmptyInput,
    MalformedResponse,
)
from .explorer import simulated_explore
from .loop import REACHED, validation_loop
from .names import to_descriptor, to_dotted
from .package import AppPackage, ingest_package
from .plan import dump_plan
from .prompts import GENERATE

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_MODEL = 4
EXIT_DEVICE = 5


def _fail(category: str, code: int, exc: Exception) -> None:
    message = str(exc).replace("\n", " ")
    click.echo(f"error: {category}: {message}", err=True)
    sys.exit(code)


def guarded(fn):
    """Map toolkit errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ClientError, MalformedResponse) as exc:
            _fail("model-client", EXIT_MODEL, exc)
        except DeviceUnavailable as exc:
            _fail("device", EXIT_DEVICE, exc)
        except ActreachError as exc:
            _fail("input-format", EXIT_INPUT, exc)

    return wrapper


@click.group()
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def main(ctx, config_path):
    """Break activity-coverage ceilings: index the app, infer activation
    conditions, validate instrumentation plans, and plan injected dialogs."""
    try:
        ctx.obj = load_config(config_path)
    except ConfigError as exc:
        _fail("input-format", EXIT_INPUT, exc)


def _out(cfg: PipelineConfig, *parts: str) -> Path:
    path = cfg.output_dir.joinpath(*parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _pkg(cfg: PipelineConfig) -> AppPackage:
    return ingest_package(cfg.package_root)


def _target_file_stem(target: str) -> str:
    return to_dotted(target)


def _load_targets(cfg: PipelineConfig) -> list[str]:
    path = _out(cfg, "unreachable.txt")
    if not path.is_file():
        raise EmptyInput("unreachable.txt not found; run the unreachable stage first")
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _resolve_targets(cfg: PipelineConfig, target: str | None, all_targets: bool) -> list[str]:
    if all_targets == (target is not None):
        raise click.UsageError("pass exactly one of TARGET or --all")
    if all_targets:
        return _load_targets(cfg)
    return [to_descriptor(target)]


def _model_client(cfg: PipelineConfig, section: str, target: str):
    if cfg.model_kind == "replay":
        return ReplayClient.from_bundle(cfg.replay_path, section, target)
    return HttpChatClient(endpoint=cfg.endpoint, model_id=cfg.model_id, api_key=cfg.api_key())


def _device(cfg: PipelineConfig, pkg: AppPackage):
    if cfg.device_kind == "simulated":
        scenario = load_scenario(cfg.scenario_path.read_text(encoding="utf-8"))
        return SimulatedDevice(scenario, known_methods=pkg.index.method_refs())
    return ExternalDeviceAdapter(cfg.device_command, pkg.package_name, _out(cfg, "scripts"))


@main.command()
@click.pass_obj
@guarded
def ingest(cfg: PipelineConfig):
    """Ingest the decompiled package and persist its summary."""
    pkg = _pkg(cfg)
    summary = {
        "package_name": pkg.package_name,
        "declared_activities": list(pkg.declared_activities),
        "main_activities": list(pkg.main_activities),
        "class_count": len(pkg.index.classes),
        "method_count": len(pkg.index.method_refs()),
        "launch_site_count": len(pkg.index.launch_sites),
    }
    path = _out(cfg, "package.json")
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"{pkg.package_name}: {len(pkg.declared_activities)} activities, "
               f"{len(pkg.main_activities)} mains -> {path}")


@main.command("ctg")
@click.pass_obj
@guarded
def ctg_cmd(cfg: PipelineConfig):
    """Emit the component transition graph file."""
    pkg = _pkg(cfg)
    path = _out(cfg, "ctg.tsv")
    path.write_text(ctgmod.dump_ctg(pkg.ctg), encoding="utf-8")
    click.echo(f"{len(pkg.ctg.edges)} edges, {len(pkg.ctg.unresolved_sites)} unresolved -> {path}")


@main.command()
@click.pass_obj
@guarded
def unreachable(cfg: PipelineConfig):
    """Derive target activities: declared minus visited."""
    if cfg.exploration_log is None or not cfg.exploration_log.is_file():
        raise EmptyInput("config exploration_log must point at an existing visited-activities log")
    pkg = _pkg(cfg)
    log = coverage.ExplorationLog.from_text(cfg.exploration_log.read_text(encoding="utf-8"))
    report = coverage.build_report(pkg.declared_activities, log.visited)
    path = _out(cfg, "unreachable.txt")
    path.write_text("\n".join(report.unreachable) + ("\n" if report.unreachable else ""), encoding="utf-8")
    click.echo(f"{len(report.unreachable)} unreachable of {report.declared_count} declared -> {path}")


@main.command("mcp-serve")
@click.option("--record", type=click.Path(dir_okay=False), default=None, help="Tool-call record file.")
@click.pass_obj
@guarded
def mcp_serve(cfg: PipelineConfig, record):
    """Serve the code-query tools over JSON-RPC on stdio."""
    pkg = _pkg(cfg)
    record_path = Path(record) if record else _out(cfg, "mcp-session.jsonl")
    recorder = Recorder(record_path, clock=SequentialClock())
    mcp_server.serve(pkg, recorder, result_cap=cfg.result_size_cap)


def _infer_one(cfg: PipelineConfig, pkg: AppPackage, target: str) -> str:
    stem = _target_file_stem(target)
    record_path = _out(cfg, "episodic", f"{stem}.jsonl")
    recorder = Recorder(record_path, clock=SequentialClock())
    client = _model_client(cfg, "static", target)
    report = agents.run_static_agent(
        client, pkg, target, recorder, budget=cfg.tool_call_budget, result_cap=cfg.result_size_cap
    )
    # persist the record-file reference relative to output_dir so reports are
    # byte-identical wherever the pipeline runs
    report = dataclasses.replace(report, episodic_ref=str(record_path.relative_to(cfg.output_dir)))
    path = _out(cfg, "reports", f"{stem}.json")
    path.write_text(report.to_json() + "\n", encoding="utf-8")
    flag = " (partial)" if report.partial else ""
    return f"{to_dotted(target)}: {report.tool_call_count} tool calls{flag} -> {path}"


@main.command()
@click.argument("target", required=False)
@click.option("--all", "all_targets", is_flag=True, help="Infer every unreachable target.")
@click.option("--jobs", default=1, show_default=True, help="Parallel sessions for --all.")
@click.pass_obj
@guarded
def infer(cfg: PipelineConfig, target, all_targets, jobs):
    """Infer activation conditions for targets; writes reports + episodic files."""
    targets = _resolve_targets(cfg, target, all_targets)
    pkg = _pkg(cfg)
    if jobs > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for line in pool.map(lambda t: _infer_one(cfg, pkg, t), targets):
                click.echo(line)
    else:
        for t in targets:
            click.echo(_infer_one(cfg, pkg, t))


def _load_report(cfg: PipelineConfig, target: str) -> agents.ActivationConditionReport:
    stem = _target_file_stem(target)
    path = _out(cfg, "reports", f"{stem}.json")
    if not path.is_file():
        raise EmptyInput(f"no activation report for {to_dotted(target)}; run infer first")
    return agents.ActivationConditionReport.from_json(path.read_text(encoding="utf-8"))


def _load_episodic(cfg: PipelineConfig, target: str) -> EpisodicMemory:
    stem = _target_file_stem(target)
    path = _out(cfg, "episodic", f"{stem}.jsonl")
    if not path.is_file():
        raise EmptyInput(f"no episodic record file for {to_dotted(target)}; run infer first")
    return EpisodicMemory.load(path, target)


@main.command()
@click.argument("target")
@click.pass_obj
@guarded
def instrument(cfg: PipelineConfig, target):
    """Generate the first-iteration instrumentation artifact for one target."""
    target = to_descriptor(target)
    report = _load_report(cfg, target)
    episodic = _load_episodic(cfg, target)
    client = _model_client(cfg, "dynamic", target)
    artifact = agents.run_dyn_agent(client, episodic, report, GENERATE)
    stem = _target_file_stem(target)
    script_path = _out(cfg, "artifacts", f"{stem}.iter1.js")
    script_path.write_text(artifact.script_text, encoding="utf-8")
    meta_path = _out(cfg, "artifacts", f"{stem}.iter1.json")
    meta_path.write_text(
        json.dumps(
            {
                "target": artifact.target,
                "iteration": artifact.iteration,
                "phase": artifact.phase,
                "pseudocode": artifact.pseudocode,
                "plan": dump_plan(artifact.plan),
                "model_script": artifact.model_script,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    click.echo(f"{to_dotted(target)}: iteration 1 artifact -> {script_path}")


def _validate_one(cfg: PipelineConfig, pkg: AppPackage, device, target: str) -> str:
    report = _load_report(cfg, target)
    episodic = _load_episodic(cfg, target)
    client = _model_client(cfg, "dynamic", target)
    result = validation_loop(report, device, client, episodic, target, max_iterations=cfg.max_iterations)
    stem = _target_file_stem(target)
    path = _out(cfg, "loop", f"{stem}.json")
    path.write_text(result.to_json() + "\n", encoding="utf-8")
    for artifact in result.artifacts:
        _out(cfg, "loop", f"{stem}.iter{artifact.iteration}.js").write_text(
            artifact.script_text, encoding="utf-8"
        )
    return f"{to_dotted(target)}: {result.status} after {result.iterations_used} iteration(s) -> {path}"


@main.command()
@click.argument("target", required=False)
@click.option("--all", "all_targets", is_flag=True, help="Validate every unreachable target.")
@click.option("--jobs", default=1, show_default=True, help="Parallel loops for --all.")
@click.pass_obj
@guarded
def validate(cfg: PipelineConfig, target, all_targets, jobs):
    """Run the bounded validate-refine loop against the configured device."""
    targets = _resolve_targets(cfg, target, all_targets)
    pkg = _pkg(cfg)
    if cfg.device_kind == "simulated":
        scenario = load_scenario(cfg.scenario_path.read_text(encoding="utf-8"))

        def make_device():
            return SimulatedDevice(scenario, known_methods=pkg.index.method_refs())

    else:

        def make_device():
            return _device(cfg, pkg)

    if jobs > 1 and len(targets) > 1:
        # one device per loop; scenarios are immutable so this is cheap
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for line in pool.map(lambda t: _validate_one(cfg, pkg, make_device(), t), targets):
                click.echo(line)
    else:
        device = make_device()
        for t in targets:
            click.echo(_validate_one(cfg, pkg, device, t))


def _validated_targets(cfg: PipelineConfig) -> list[str]:
    loop_dir = _out(cfg, "loop")
    targets = []
    for path in sorted(loop_dir.glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("status") == REACHED:
            targets.append(data["target"])
    return targets


@main.command("plan-widgets")
@click.pass_obj
@guarded
def plan_widgets(cfg: PipelineConfig):
    """Place injected dialogs for every validated target."""
    summary_path = _out(cfg, "package.json")
    if not summary_path.is_file():
        raise EmptyInput("package.json not found; run ingest first")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    ctg_path = _out(cfg, "ctg.tsv")
    if not ctg_path.is_file():
        raise EmptyInput("ctg.tsv not found; run the ctg stage first")
    graph = ctgmod.load_ctg(ctg_path.read_text(encoding="utf-8"))
    unreachables = _load_targets(cfg)
    validated = _validated_targets(cfg)
    dialogs = widgets.find_dialog_for_target(
        validated,
        graph,
        summary["main_activities"],
        unreachables,
        summary["declared_activities"],
    )
    path = _out(cfg, "dialogs.tsv")
    path.write_text(widgets.dump_dialogs(dialogs), encoding="utf-8")
    click.echo(f"{len(dialogs.buttons)} dialog source(s) for {len(validated)} validated target(s) -> {path}")


@main.command()
@click.option("--dialogs", "dialogs_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="dialogs.tsv with injected buttons; omit for a baseline walk.")
@click.option("--budget", default=None, type=int, help="Steps to walk (default from config).")
@click.option("--cancel-prob", default=None, type=float, help="Cancel-click probability (default from config).")
@click.option("--out", "out_name", default="explored.log", show_default=True)
@click.pass_obj
@guarded
def explore(cfg: PipelineConfig, dialogs_path, budget, cancel_prob, out_name):
    """Random-walk the simulated device; writes the visited-activities log."""
    if cfg.device_kind != "simulated":
        raise DeviceUnavailable("explore requires the simulated device")
    pkg = _pkg(cfg)
    scenario = load_scenario(cfg.scenario_path.read_text(encoding="utf-8"))
    device = SimulatedDevice(scenario, known_methods=pkg.index.method_refs())
    dialogs = widgets.load_dialogs(Path(dialogs_path).read_text(encoding="utf-8")) if dialogs_path else None
    log = simulated_explore(
        device,
        dialogs=dialogs,
        budget=cfg.explore_budget if budget is None else budget,
        cancel_prob=cfg.cancel_prob if cancel_prob is None else cancel_prob,
        seed=cfg.rng_seed,
    )
    path = _out(cfg, out_name)
    path.write_text(log.to_text(), encoding="utf-8")
    click.echo(f"visited {len(log.visited)} activities -> {path}")


@main.command()
@click.option("--before", "before_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--after", "after_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--coverage-file", "coverage_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="External kind<TAB>covered<TAB>total counters.")
@click.pass_obj
@guarded
def report(cfg: PipelineConfig, before_path, after_path, coverage_path):
    """Coverage report from visited-activity logs (before/after)."""
    pkg = _pkg(cfg)
    before_log = coverage.ExplorationLog.from_text(Path(before_path).read_text(encoding="utf-8"))
    before = coverage.build_report(pkg.declared_activities, before_log.visited)
    after = None
    if after_path:
        after_log = coverage.ExplorationLog.from_text(Path(after_path).read_text(encoding="utf-8"))
        after = coverage.build_report(pkg.declared_activities, after_log.visited)
    external = None
    if coverage_path:
        external = coverage.ExternalCoverage.from_text(Path(coverage_path).read_text(encoding="utf-8"))
    text = coverage.render_report(before, after, external)
    path = _out(cfg, "report.txt")
    path.write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@main.command("eval-recall")
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Lines of target<TAB>ranked,ids<TAB>truth,ids.")
@click.pass_obj
@guarded
def eval_recall(cfg: PipelineConfig, labels_path):
    """Recall@{1,3,5} of ranked unreachability reasons against ground truth."""
    rows = []
    for raw in Path(labels_path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise EmptyInput(f"labels line needs target<TAB>ranked<TAB>truth: {line!r}")
        target, ranked_text, truth_text = parts
        ranked = [r for r in ranked_text.split(",") if r]
        truth = {t for t in truth_text.split(",") if t}
        rows.append((target, ranked, truth))
    if not rows:
        raise EmptyInput("labels file has no rows")
    lines = ["target\trecall@1\trecall@3\trecall@5"]
    sums = {1: 0.0, 3: 0.0, 5: 0.0}
    for target, ranked, truth in rows:
        values = {k: coverage.recall_at_k(ranked, truth, k) for k in (1, 3, 5)}
        for k in sums:
            sums[k] += values[k]
        lines.append(f"{target}\t{values[1]:.4f}\t{values[3]:.4f}\t{values[5]:.4f}")
    lines.append(
        "average\t" + "\t".join(f"{sums[k] / len(rows):.4f}" for k in (1, 3, 5))
    )
    text = "\n".join(lines) + "\n"
    path = _out(cfg, "recall.txt")
    path.write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


if __name__ == "__main__":
    main()
