"""Bounded validate-refine loop.

Iteration 1 generates a script from the activation-condition findings; every
failed validation feeds its observation back into a refinement pass. The
loop stops on the first success, without composing feedback, or after five
iterations, after which the target counts as unreachable by this tool.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .agents import ActivationConditionReport, InstrumentationArtifact, run_dyn_agent
from .clients import ModelClient
from .device import NO_TRANSITION, SUCCESS, ValidationOutcome, validate_script
from .episodic import EpisodicMemory
from .errors import ClientError, PlanParseError
from .plan import dump_plan
from .prompts import GENERATE, REFINE

MAX_ITERATIONS = 5
FEEDBACK_CAP = 8 * 1024

REACHED = "Reached"
UNREACHABLE_BY_TOOL = "UnreachableByTool"


@dataclass(frozen=True)
class LoopResult:
    target: str
    iterations_used: int
    final: ValidationOutcome
    artifacts: tuple[InstrumentationArtifact, ...]
    status: str
    partial_report: bool = False
    error: str | None = None

    def to_json(self) -> str:
        payload = {
            "target": self.target,
            "iterations_used": self.iterations_used,
            "status": self.status,
            "partial_report": self.partial_report,
            "error": self.error,
            "final": asdict(self.final),
            "artifacts": [
                {
                    "iteration": a.iteration,
                    "phase": a.phase,
                    "pseudocode": a.pseudocode,
                    "plan": dump_plan(a.plan),
                    "script_text": a.script_text,
                    "model_script": a.model_script,
                }
                for a in self.artifacts
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def compose_feedback(outcome: ValidationOutcome) -> str:
    """Kind tag line plus the raw message or trace, capped at 8 KiB."""
    message = outcome.message or "transition did not occur"
    text = f"OUTCOME: {outcome.kind}\n{message}"
    if len(text) > FEEDBACK_CAP:
        text = text[:FEEDBACK_CAP] + "\n[feedback truncated]"
    return text


def validation_loop(
    static_report: ActivationConditionReport,
    device,
    client: ModelClient,
    episodic: EpisodicMemory,
    target: str,
    max_iterations: int = MAX_ITERATIONS,
) -> LoopResult:
    """Generate, validate, and refine until success or the iteration cap.

    A partial static report does not abort the loop; the flag is carried on
    the result. Agent-layer errors abort with status UnreachableByTool and
    the error attached.
    """
    if not 1 <= max_iterations <= MAX_ITERATIONS:
        raise ValueError(f"max_iterations must be within [1, {MAX_ITERATIONS}]")

    artifacts: list[InstrumentationArtifact] = []
    prior: InstrumentationArtifact | None = None
    feedback: str | None = None
    outcome = ValidationOutcome(NO_TRANSITION, "no iteration ran")

    for iteration in range(1, max_iterations + 1):
        phase = GENERATE if iteration == 1 else REFINE
        try:
            artifact = run_dyn_agent(client, episodic, static_report, phase, prior=prior, feedback=feedback)
        except (ClientError, PlanParseError) as exc:
            return LoopResult(
                target=target,
                iterations_used=len(artifacts),
                final=outcome,
                artifacts=tuple(artifacts),
                status=UNREACHABLE_BY_TOOL,
                partial_report=static_report.partial,
                error=str(exc),
            )
        artifacts.append(artifact)
        outcome = validate_script(device, artifact, target)
        if outcome.kind == SUCCESS:
            return LoopResult(
                target=target,
                iterations_used=iteration,
                final=outcome,
                artifacts=tuple(artifacts),
                status=REACHED,
                partial_report=static_report.partial,
            )
        feedback = compose_feedback(outcome)
        prior = artifact

    return LoopResult(
        target=target,
        iterations_used=max_iterations,
        final=outcome,
        artifacts=tuple(artifacts),
        status=UNREACHABLE_BY_TOOL,
        partial_report=static_report.partial,
    )
