"""Agent sessions: activation-condition inference and script generation.

The static-analysis session drives a tool-calling loop over the code-query
surface until the model decides it has enough and emits a final answer; the
termination decision belongs to the model, a tool-call budget is only a
safety net. The instrumentation session consumes the recorded tool calls
plus the final findings and must answer in three fenced sections
(PSEUDOCODE / PLAN / SCRIPT).
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass

from .clients import ModelClient, ModelTurn, ToolCall
from .episodic import EpisodicMemory, Recorder, retrieve_tool_call_result
from .errors import ClientError, MalformedResponse, NotFound
from .mcp_server import TOOLS, MissingArgument, ToolDescriptor, UnknownTool, handle_tool_call, truncate_result
from .package import AppPackage
from .plan import InstrumentationPlan, parse_plan
from .prompts import GENERATE, REFINE, build_dyn_prompt, build_static_prompt
from .scriptgen import render_script

DEFAULT_TOOL_BUDGET = 40

RETRIEVE_TOOL = ToolDescriptor(
    "retrieve_tool_call_result",
    (("seq_or_name", "Record sequence number, or a tool name to fetch all its records"),),
    "Inspect recorded code-query results from the dependency analysis of this target.",
)


@dataclass(frozen=True)
class ActivationConditionReport:
    target: str
    forward_findings: str
    backward_findings: str
    launch_guideline: str
    episodic_ref: str
    tool_call_count: int
    partial: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ActivationConditionReport":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class InstrumentationArtifact:
    target: str
    iteration: int
    pseudocode: str
    plan: InstrumentationPlan
    script_text: str
    phase: str
    model_script: str = ""

    def __post_init__(self):
        if not 1 <= self.iteration <= 5:
            raise ValueError(f"iteration {self.iteration} outside [1, 5]")
        if (self.phase == GENERATE) != (self.iteration == 1):
            raise ValueError(f"phase {self.phase} inconsistent with iteration {self.iteration}")


_MD_HEADING_RE = re.compile(r"^\s{0,3}(?:#{1,6}\s+|\*\*)(.+?)(?:\*\*)?\s*:?\s*$")


def _heading_key(line: str) -> str | None:
    """Classify a line as a section heading, tolerating markdown dressing.

    Plain prose never switches sections; an undecorated line only counts
    when it is nothing but the heading itself.
    """
    m = _MD_HEADING_RE.match(line)
    text = (m.group(1) if m else line).strip().rstrip(":").lower()
    if m:
        if text.startswith("forward analysis"):
            return "forward"
        if text.startswith("backward analysis"):
            return "backward"
        return "other"
    if text == "forward analysis":
        return "forward"
    if text == "backward analysis":
        return "backward"
    return None


def parse_report_sections(text: str) -> tuple[str, str, str]:
    """Split a final answer into forward / backward / guideline sections.

    Heading matching is lenient (case-insensitive, markdown-tolerant); any
    text outside the two analysis sections lands in the guideline catch-all.
    """
    forward: list[str] = []
    backward: list[str] = []
    guideline: list[str] = []
    current = guideline
    for line in text.splitlines():
        key = _heading_key(line)
        if key == "forward":
            current = forward
        elif key == "backward":
            current = backward
        elif key == "other":
            current = guideline
        else:
            current.append(line)
    return (
        "\n".join(forward).strip(),
        "\n".join(backward).strip(),
        "\n".join(guideline).strip(),
    )


def _assistant_tool_message(calls: tuple[ToolCall, ...], base_seq: int) -> dict:
    return {
        "role": "assistant",
        "content": None,
        "tool_calls": [
            {
                "id": f"call_{base_seq + i}",
                "type": "function",
                "function": {"name": c.name, "arguments": json.dumps(c.arguments, sort_keys=True)},
            }
            for i, c in enumerate(calls)
        ],
    }


def run_static_agent(
    client: ModelClient,
    pkg: AppPackage,
    target: str,
    recorder: Recorder,
    budget: int = DEFAULT_TOOL_BUDGET,
    result_cap: int = 64 * 1024,
) -> ActivationConditionReport:
    """Drive the inference loop; every executed call lands in the recorder.

    When the tool-call budget runs out before a final text turn the report
    is returned marked partial instead of raising.
    """
    messages: list[dict] = [{"role": "user", "content": build_static_prompt(pkg, target)}]
    episodic_ref = str(recorder.path) if recorder.path is not None else ""

    while True:
        try:
            turn: ModelTurn = client.send(messages, TOOLS)
        except ClientError as exc:
            exc.transcript = messages
            raise

        if turn.tool_calls:
            if len(recorder) + len(turn.tool_calls) > budget:
                return ActivationConditionReport(
                    target=target,
                    forward_findings="",
                    backward_findings="",
                    launch_guideline="",
                    episodic_ref=episodic_ref,
                    tool_call_count=len(recorder),
                    partial=True,
                )
            messages.append(_assistant_tool_message(turn.tool_calls, len(recorder) + 1))
            for i, call in enumerate(turn.tool_calls):
                try:
                    result = truncate_result(handle_tool_call(pkg, call.name, call.arguments), result_cap)
                except (UnknownTool, MissingArgument) as exc:
                    result = f"error: {exc}"
                rec = recorder.record(call.name, call.arguments, result)
                messages.append({"role": "tool", "tool_call_id": f"call_{rec.seq}", "content": result})
            continue

        forward, backward, guideline = parse_report_sections(turn.text or "")
        return ActivationConditionReport(
            target=target,
            forward_findings=forward,
            backward_findings=backward,
            launch_guideline=guideline,
            episodic_ref=episodic_ref,
            tool_call_count=len(recorder),
        )


_SECTION_RE = re.compile(
    r"^\s{0,3}(?:#{1,6}\s*|\*\*\s*)?(PSEUDOCODE|PLAN|SCRIPT)(?:\s*\*\*)?\s*:?\s*$",
    re.IGNORECASE | re.MULTILINE,
)
_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def parse_dyn_sections(text: str) -> dict[str, str] | None:
    """Extract the three mandated sections; None when any is missing."""
    matches = list(_SECTION_RE.finditer(text))
    sections: dict[str, str] = {}
    for i, m in enumerate(matches):
        name = m.group(1).upper()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        chunk = text[m.end() : end]
        fence = _FENCE_RE.search(chunk)
        sections[name] = (fence.group(1) if fence else chunk).strip()
    if not {"PSEUDOCODE", "PLAN", "SCRIPT"} <= set(sections):
        return None
    return sections


def run_dyn_agent(
    client: ModelClient,
    episodic: EpisodicMemory,
    report: ActivationConditionReport,
    phase: str,
    prior: InstrumentationArtifact | None = None,
    feedback: str | None = None,
) -> InstrumentationArtifact:
    """One script-generation session: pseudocode, then plan, then script.

    The only tool available here is retrieve_tool_call_result over this
    target's episodic memory. A response missing a mandated section earns
    one automatic re-ask before failing.
    """
    if phase == REFINE and prior is None:
        raise ValueError("Refine needs the prior artifact")
    current_code = prior.script_text if prior is not None else None
    prompt = build_dyn_prompt(report, episodic, phase, current_code=current_code, feedback=feedback)
    messages: list[dict] = [{"role": "user", "content": prompt}]

    reasked = False
    while True:
        try:
            turn: ModelTurn = client.send(messages, (RETRIEVE_TOOL,))
        except ClientError as exc:
            exc.transcript = messages
            raise

        if turn.tool_calls:
            messages.append(_assistant_tool_message(turn.tool_calls, len(messages)))
            for i, call in enumerate(turn.tool_calls):
                if call.name != RETRIEVE_TOOL.name:
                    result = f"error: unknown tool {call.name!r}; only retrieve_tool_call_result is available"
                else:
                    try:
                        result = retrieve_tool_call_result(episodic, call.arguments.get("seq_or_name", ""))
                    except NotFound as exc:
                        result = f"error: {exc}"
                messages.append({"role": "tool", "tool_call_id": f"call_{len(messages) + i}", "content": result})
            continue

        sections = parse_dyn_sections(turn.text or "")
        if sections is None:
            if reasked:
                raise MalformedResponse(
                    "response still missing a mandated section after re-ask", transcript=messages
                )
            reasked = True
            messages.append({"role": "assistant", "content": turn.text or ""})
            messages.append(
                {
                    "role": "user",
                    "content": "Your response is missing at least one of the mandated fenced sections. "
                    "Resend all three sections headed PSEUDOCODE, PLAN, and SCRIPT.",
                }
            )
            continue

        plan = parse_plan(sections["PLAN"])
        iteration = 1 if phase == GENERATE else prior.iteration + 1
        return InstrumentationArtifact(
            target=report.target,
            iteration=iteration,
            pseudocode=sections["PSEUDOCODE"],
            plan=plan,
            script_text=render_script(plan, report.target),
            phase=phase,
            model_script=sections["SCRIPT"],
        )
