"""Seeded random-walk explorer over a device scenario.

Stands in for an off-the-shelf GUI fuzzer: walks the scenario's transition
edges from a main activity, relaunching to a main on dead ends. Guarded
targets block normal transitions; injected dialog buttons bypass guards.
On entering a dialog-bearing activity the walker either clicks a uniformly
chosen target button, or clicks Cancel (with the given probability) and
keeps exploring the current activity.
"""

from __future__ import annotations

import random

from .coverage import ExplorationLog
from .device import SimulatedDevice
from .errors import EmptyMains
from .widgets import ActivityDialogs


def simulated_explore(
    device: SimulatedDevice,
    dialogs: ActivityDialogs | None = None,
    budget: int = 200,
    cancel_prob: float = 0.0,
    seed: int = 0,
    source_tool: str = "simulated-explorer",
) -> ExplorationLog:
    scenario = device.scenario
    mains = sorted(scenario.mains)
    if not mains:
        raise EmptyMains("scenario declares no main activities to start from")
    buttons = dialogs.buttons if dialogs is not None else {}

    rng = random.Random(seed)
    current = rng.choice(mains)
    visited: dict[str, None] = {current: None}
    dialog_pending = current in buttons

    for _ in range(budget):
        if dialog_pending:
            if rng.random() < cancel_prob:
                dialog_pending = False
                continue
            current = rng.choice(list(buttons[current]))
        else:
            moves = [t for t in scenario.successors(current) if not scenario.is_guarded(t)]
            current = rng.choice(moves) if moves else rng.choice(mains)
        visited.setdefault(current)
        dialog_pending = current in buttons

    return ExplorationLog(visited=tuple(visited), source_tool=source_tool, duration=float(budget))
