"""Placement of injected navigation dialogs.

Decides, for each target with a validated instrumentation, which source
activities show the multi-button dialog whose buttons trigger the
instrumented transitions. Every dialog implicitly includes a Cancel button.
Transitions stay realistic: a target keeps its graph-given sources whenever
at least one of them is a reachable non-main activity, and falls back to
the main activities only otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ctg import Ctg
from .errors import EmptyMains
from .names import to_descriptor


@dataclass(frozen=True)
class ActivityDialogs:
    buttons: dict  # source activity -> ordered tuple of target activities

    def targets_of(self, source: str) -> tuple[str, ...]:
        return self.buttons.get(to_descriptor(source), ())

    def all_targets(self) -> set[str]:
        out: set[str] = set()
        for targets in self.buttons.values():
            out.update(targets)
        return out


def find_dialog_for_target(
    instrumentations,
    ctg: Ctg,
    mains,
    unreachables,
    declared,
) -> ActivityDialogs:
    """Map each instrumented-and-unreachable target to its dialog sources.

    Targets that are already reachable are skipped. Targets with no graph
    sources attach to every main activity; targets with at least one source
    in the reachable non-main set attach to each such source; targets whose
    sources are all mains or all unreachable fall back to every main.
    """
    targets = sorted({to_descriptor(t) for t in instrumentations})
    mains_sorted = sorted({to_descriptor(m) for m in mains})
    unreachable_set = {to_descriptor(u) for u in unreachables}
    declared_set = {to_descriptor(d) for d in declared}

    non_main_reachables = declared_set - unreachable_set - set(mains_sorted)

    dialogs: dict[str, dict[str, None]] = {}
    found_reachable: set[str] = set()

    def add(source: str, target: str) -> None:
        dialogs.setdefault(source, {}).setdefault(target)

    def attach_to_mains(target: str) -> None:
        if not mains_sorted:
            raise EmptyMains(f"target {target} needs a main-activity fallback but no mains exist")
        for main in mains_sorted:
            add(main, target)

    for target in targets:
        if target not in unreachable_set:
            continue
        sources = ctg.sources(target)
        if not sources:
            attach_to_mains(target)
            continue
        for source in sources:
            if source in non_main_reachables:
                add(source, target)
                found_reachable.add(target)
        if target not in found_reachable:
            attach_to_mains(target)

    return ActivityDialogs({src: tuple(ts) for src, ts in sorted(dialogs.items())})


def dump_dialogs(dialogs: ActivityDialogs) -> str:
    lines = [f"{source}\t{','.join(targets)}" for source, targets in dialogs.buttons.items()]
    return "\n".join(lines) + ("\n" if lines else "")


def load_dialogs(text: str) -> ActivityDialogs:
    buttons: dict[str, tuple[str, ...]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        source, _, targets = line.partition("\t")
        buttons[source] = tuple(t for t in targets.split(",") if t)
    return ActivityDialogs(buttons)
