"""Device abstraction for script validation.

The SimulatedDevice is a desk-scale stand-in for an emulator plus an
injection runtime: it adjudicates a plan against a declarative scenario of
activities, transitions, and guard conditions, and classifies the outcome
into the same observation channels a real device exposes (instrumentation
exception, app crash, no transition). A real-device adapter is specified as
an external-command contract and ships as a stub.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DeviceUnavailable, ScenarioParseError
from .plan import EXTRA_TYPES, InstrumentationPlan, check_literal
from .smali import MethodRef

SUCCESS = "Success"
INSTRUMENTATION_EXCEPTION = "InstrumentationException"
APP_CRASH = "AppCrash"
NO_TRANSITION = "NoTransition"

GUARD_FLAGS = ("disabled", "server-dependent")


@dataclass(frozen=True)
class GuardCondition:
    kind: str  # "return" | "extra" | "flag"
    method: MethodRef | None = None
    required_return: str | None = None
    extra_key: str | None = None
    extra_type: str | None = None
    extra_value: str | None = None
    flag: str | None = None


@dataclass(frozen=True)
class DeviceScenario:
    activities: tuple[str, ...]
    mains: tuple[str, ...]
    transitions: tuple[tuple[str, str, str], ...]  # (source, method, target)
    guards: dict[str, tuple[GuardCondition, ...]] = field(default_factory=dict)

    def successors(self, activity: str) -> list[str]:
        found: dict[str, None] = {}
        for src, _method, dst in self.transitions:
            if src == activity:
                found.setdefault(dst)
        return sorted(found)

    def is_guarded(self, activity: str) -> bool:
        return bool(self.guards.get(activity))


def load_scenario(text: str) -> DeviceScenario:
    """Parse the sectioned scenario format (ACTIVITIES/MAINS/TRANSITIONS/GUARDS)."""
    sections: dict[str, list[str]] = {"ACTIVITIES": [], "MAINS": [], "TRANSITIONS": [], "GUARDS": []}
    current: str | None = None
    for raw in text.splitlines():
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.strip() in sections:
            current = line.strip()
            continue
        if current is None:
            raise ScenarioParseError(f"line before any section header: {line!r}")
        sections[current].append(line)

    activities = tuple(line.strip() for line in sections["ACTIVITIES"])
    mains = tuple(line.strip() for line in sections["MAINS"])
    transitions = []
    for line in sections["TRANSITIONS"]:
        parts = line.split("\t")
        if len(parts) != 3:
            raise ScenarioParseError(f"transition needs source<TAB>method<TAB>target: {line!r}")
        transitions.append((parts[0], parts[1], parts[2]))
    guards: dict[str, list[GuardCondition]] = {}
    for line in sections["GUARDS"]:
        target, guard = _parse_guard(line)
        guards.setdefault(target, []).append(guard)

    activity_set = set(activities)
    for main in mains:
        if main not in activity_set:
            raise ScenarioParseError(f"main {main} not in ACTIVITIES")
    for target in guards:
        if target not in activity_set:
            raise ScenarioParseError(f"guarded target {target} not in ACTIVITIES")
    return DeviceScenario(
        activities=activities,
        mains=mains,
        transitions=tuple(transitions),
        guards={t: tuple(gs) for t, gs in guards.items()},
    )


def _parse_guard(line: str) -> tuple[str, GuardCondition]:
    parts = line.split("\t")
    if len(parts) < 3:
        raise ScenarioParseError(f"guard needs target<TAB>KIND<TAB>...: {line!r}")
    target, kind = parts[0], parts[1].upper()
    if kind == "RETURN":
        if len(parts) != 4:
            raise ScenarioParseError(f"RETURN guard needs target<TAB>RETURN<TAB>method<TAB>literal: {line!r}")
        return target, GuardCondition(
            kind="return", method=MethodRef.parse(parts[2]), required_return=check_literal(parts[3])
        )
    if kind == "EXTRA":
        if len(parts) != 5:
            raise ScenarioParseError(f"EXTRA guard needs target<TAB>EXTRA<TAB>key<TAB>type<TAB>value: {line!r}")
        if parts[3] not in EXTRA_TYPES:
            raise ScenarioParseError(f"extra guard type must be one of {EXTRA_TYPES}: {line!r}")
        return target, GuardCondition(kind="extra", extra_key=parts[2], extra_type=parts[3], extra_value=parts[4])
    if kind == "FLAG":
        if len(parts) != 3 or parts[2] not in GUARD_FLAGS:
            raise ScenarioParseError(f"FLAG guard needs one of {GUARD_FLAGS}: {line!r}")
        return target, GuardCondition(kind="flag", flag=parts[2])
    raise ScenarioParseError(f"unknown guard kind {kind!r}")


@dataclass(frozen=True)
class ValidationOutcome:
    kind: str
    message: str = ""
    observed_activity: str | None = None
    raw_log: str = ""


class SimulatedDevice:
    """Adjudicates plans against a scenario; same scenario + same plan give
    the same outcome. Success is decided from the plan, not the script text.
    """

    def __init__(self, scenario: DeviceScenario, known_methods: frozenset[MethodRef] = frozenset()):
        self.scenario = scenario
        self.known_methods = frozenset(known_methods)

    def validate(self, plan: InstrumentationPlan, target: str) -> ValidationOutcome:
        log = [f"[device] loading instrumentation for {target}"]

        for hook in plan.hooks:
            if not hook.external and hook.method not in self.known_methods:
                message = (
                    "Error: java.lang.ClassNotFoundException: "
                    f"cannot hook {hook.method}: method not found in app"
                )
                log.append(f"[frida] {message}")
                return ValidationOutcome(INSTRUMENTATION_EXCEPTION, message, None, "\n".join(log))
        log.append(f"[frida] hooks installed: {len(plan.hooks)}")

        if plan.intent_spec is None and not plan.launch_directive:
            message = "script installed hooks but never attempted a launch; transition did not occur"
            log.append(f"[device] {message}")
            return ValidationOutcome(NO_TRANSITION, message, None, "\n".join(log))

        launch_target = plan.intent_spec.target if plan.intent_spec is not None else target
        log.append(f"[device] trigger pressed, launching {launch_target}")
        if launch_target not in self.scenario.activities:
            message = (
                "android.content.ActivityNotFoundException: unable to find explicit activity class "
                f"{launch_target}\n    at android.app.Instrumentation.checkStartActivityResult"
            )
            log.append(f"[logcat] {message}")
            return ValidationOutcome(APP_CRASH, message, None, "\n".join(log))
        if launch_target != target:
            message = f"launched {launch_target} instead of {target}; transition did not occur"
            log.append(f"[device] {message}")
            return ValidationOutcome(NO_TRANSITION, message, launch_target, "\n".join(log))

        for guard in self.scenario.guards.get(target, ()):
            outcome = self._check_guard(plan, guard, target, log)
            if outcome is not None:
                return outcome

        log.append(f"[device] transition observed -> {target}")
        return ValidationOutcome(SUCCESS, "", target, "\n".join(log))

    def _check_guard(self, plan, guard: GuardCondition, target: str, log: list) -> ValidationOutcome | None:
        if guard.kind == "flag":
            message = f"transition blocked: activity is {guard.flag}; no instrumentation can satisfy this"
            log.append(f"[device] {message}")
            return ValidationOutcome(NO_TRANSITION, message, None, "\n".join(log))
        if guard.kind == "return":
            for hook in plan.hooks:
                if hook.method == guard.method and hook.forced_return == guard.required_return:
                    log.append(f"[device] guard satisfied: {guard.method} -> {guard.required_return}")
                    return None
            message = (
                f"guard {guard.method} still returns the blocking value; "
                "activity finished early and the transition did not occur"
            )
            log.append(f"[device] {message}")
            return ValidationOutcome(NO_TRANSITION, message, None, "\n".join(log))
        if guard.kind == "extra":
            extras = plan.intent_spec.extras if plan.intent_spec is not None else ()
            for etype, key, value in extras:
                if key == guard.extra_key and etype == guard.extra_type and value == guard.extra_value:
                    log.append(f"[device] guard satisfied: extra {key}")
                    return None
            message = (
                f"java.lang.RuntimeException: Unable to start activity {target}: "
                f"missing required intent extra '{guard.extra_key}' (expected {guard.extra_type})\n"
                f"    at android.app.ActivityThread.performLaunchActivity"
            )
            log.append(f"[logcat] {message}")
            return ValidationOutcome(APP_CRASH, message, None, "\n".join(log))
        raise ScenarioParseError(f"unknown guard kind {guard.kind!r}")  # pragma: no cover


def validate_script(device, artifact, target: str) -> ValidationOutcome:
    """Validate one generated artifact on a device.

    Adjudication runs against the structured plan; the script text is only
    checked for its recoverable plan header elsewhere.
    """
    plan = artifact.plan if hasattr(artifact, "plan") else artifact
    return device.validate(plan, target)


class ExternalDeviceAdapter:
    """Contract for a real device: spawn an injector command per validation.

    The command is invoked as ``<command> <script_path> <package_id>
    <target>`` and must print the outcome kind (Success,
    InstrumentationException, AppCrash, or NoTransition) on its first stdout
    line, followed by raw log/trace lines. Orchestrating the emulator and
    the injection runtime is environment-specific and out of scope here;
    this stub only implements the process handshake.
    """

    def __init__(self, command: str, package_id: str, script_dir: str | Path):
        self.command = command
        self.package_id = package_id
        self.script_dir = Path(script_dir)

    def validate(self, plan: InstrumentationPlan, target: str) -> ValidationOutcome:
        from .scriptgen import render_script

        self.script_dir.mkdir(parents=True, exist_ok=True)
        script_path = self.script_dir / "candidate.js"
        script_path.write_text(render_script(plan, target), encoding="utf-8")
        try:
            proc = subprocess.run(
                [self.command, str(script_path), self.package_id, target],
                capture_output=True,
                text=True,
                timeout=600,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise DeviceUnavailable(f"injector command failed: {exc}") from exc
        lines = proc.stdout.splitlines()
        if not lines or lines[0] not in (SUCCESS, INSTRUMENTATION_EXCEPTION, APP_CRASH, NO_TRANSITION):
            raise DeviceUnavailable(f"injector printed no outcome kind: {proc.stdout[:200]!r}")
        kind = lines[0]
        message = "\n".join(lines[1:])
        observed = target if kind == SUCCESS else None
        return ValidationOutcome(kind, message, observed, proc.stdout)
