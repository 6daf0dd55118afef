"""Prompt assembly for both agents.

Prompts are pure string builds: identical inputs yield byte-identical
prompts, which keeps replayed sessions reproducible.
"""

from __future__ import annotations

import json

from .episodic import EpisodicMemory
from .names import to_dotted
from .package import AppPackage

GENERATE = "Generate"
REFINE = "Refine"

_STATIC_COT = """\
Work through the following steps, thinking out loud before acting:

Step 1: Forward Analysis

Inspect the body of the onCreate, onStart, and onResume lifecycle hooks of the target activity.
- Follow the control flow of each hook body: guard conditions, early returns, thrown exceptions.
- Note every value the hooks read from the incoming intent (getIntent, extras, action, data URI)
  and from other APIs or global state in the app instance.
- Recursively inspect sub-procedures invoked by these hooks until you have a complete picture of
  the control- and data-dependencies; stop when you have collected enough information.

Step 2: Backward Analysis

Inspect the body of source methods that call `startActivity` or `startActivityForResult` to launch
the target activity.
- If a launching source method is available, analyze the variables it declares and how it
  constructs the intent: target class, action, categories, and every extra it attaches.

Step 3: Launching the target activity

Derive the desired logical flow of statements achievable via dynamic instrumentation to directly
launch the target activity successfully using `startActivity`: which methods must be hooked and
what they must return, and what the launch intent must carry.

Report your findings under the headings "Forward Analysis", "Backward Analysis", and
"Launch Guideline"."""


def build_static_prompt(pkg: AppPackage, target: str) -> str:
    package_info = (
        "You are a Smali language (Dalvik assembly) expert with deep knowledge of the Android "
        "activity lifecycle. Your task is to analyze the dependencies and preconditions for "
        f"successfully launching a given activity in the {pkg.package_name} app that was not "
        "covered during the previous automated GUI-driven app exploration. Use the available "
        "code-query tools to ground every claim in the app's actual code."
    )
    target_block = f"Target activity: {to_dotted(target)}"
    return "\n\n".join([package_info, _STATIC_COT, target_block])


_PLAN_GRAMMAR = """\
PLAN lines use this grammar, one directive per line:
  HOOK <class>-><signature> RETURN <true|false|null|integer|"string">
  HOOK <class>-><signature> SKIP
  (append EXTERNAL when the hooked method belongs to the framework, not the app)
  INTENT <target class>
  ACTION <action string>
  EXTRA <string|int|boolean> <key> <value>
  LAUNCH"""


def _phase_instruction(phase: str) -> str:
    if phase == GENERATE:
        return (
            "state['phase'] is Generate: analyze the extracted activation conditions and the "
            "suggested instrumentation strategy, then design a script that satisfies them."
        )
    return (
        "state['phase'] is Refine: evaluate the most recent generated code in "
        "state['current_code'] against the validation feedback below, diagnose why the launch "
        "failed, and repair the script."
    )


def _dyn_cot(phase: str) -> str:
    return f"""\
You generate dynamic instrumentation scripts that launch a target Android activity by satisfying
its activation conditions at runtime.

Step 1: {_phase_instruction(phase)}

For both cases, if you need to, you can call the tool `retrieve_tool_call_result` to inspect the
results of the code queries made during the dependency analysis, by sequence number or by tool
name. The recorded queries come from these tools:
- get_activities(): the list of activities of the app.
- check_activity_exists(class_name): whether an activity exists inside the app.
- check_class_exists(class_name), get_methods_inside_class(class_name),
  get_method_body(class_name, method_sig), get_methods_invoked(class_name, method_sig),
  get_caller_methods(class_name, method_sig),
  get_launching_activities_and_methods(target_activity).

Step 2: Write down the logic of the instrumentation in pseudocode.

Step 3: Translate the pseudocode into a structured plan and then into a valid Frida
instrumentation JavaScript code.

{_PLAN_GRAMMAR}

Respond with exactly three fenced sections headed PSEUDOCODE, PLAN, and SCRIPT."""


def render_tool_history(episodic: EpisodicMemory) -> str:
    header = f"Tool calls made while analyzing the dependencies of {to_dotted(episodic.target)}:"
    if not episodic.records:
        return f"{header}\n(no tool calls recorded)"
    entries = []
    for rec in episodic.records:
        args = json.dumps(rec.args, sort_keys=True)
        entries.append(f"{rec.seq}: name: {rec.tool_name}, args: {args}")
    return "\n".join([header, *entries])


def build_dyn_prompt(
    report,
    episodic: EpisodicMemory,
    phase: str,
    current_code: str | None = None,
    feedback: str | None = None,
) -> str:
    """Three blocks: phase-branched instructions, the recorded tool-call
    history, and the analysis agent's final findings. Refine prompts carry
    the prior script and the validation feedback verbatim."""
    if phase == REFINE and (current_code is None or feedback is None):
        raise ValueError("Refine prompts need current_code and feedback")
    blocks = [_dyn_cot(phase), render_tool_history(episodic)]
    findings = (
        f"Final response of the dependency analysis for {to_dotted(report.target)}:\n\n"
        f"## Detailed Analysis Results\n\n"
        f"### Forward Analysis\n{report.forward_findings}\n\n"
        f"### Backward Analysis\n{report.backward_findings}\n\n"
        f"### Launch Guideline\n{report.launch_guideline}"
    )
    blocks.append(findings)
    if phase == REFINE:
        blocks.append(f"state['current_code']:\n{current_code}")
        blocks.append(f"Validation feedback:\n{feedback}")
    return "\n\n".join(blocks)
