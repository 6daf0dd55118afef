"""Coverage and evaluation metrics.

Unreachable-set derivation (declared minus visited), activity-coverage
ratios, launch-success rates per reason category, and recall@k over ranked
unreachability reasons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import EmptyInput, EmptyTruth
from .names import to_descriptor


@dataclass(frozen=True)
class ExplorationLog:
    visited: tuple[str, ...]
    source_tool: str = ""
    duration: float = 0.0

    @classmethod
    def from_names(cls, names, source_tool: str = "", duration: float = 0.0) -> "ExplorationLog":
        seen: dict[str, None] = {}
        for name in names:
            seen.setdefault(to_descriptor(name))
        return cls(visited=tuple(seen), source_tool=source_tool, duration=duration)

    @classmethod
    def from_text(cls, text: str, source_tool: str = "") -> "ExplorationLog":
        names = []
        for raw in text.splitlines():
            line = raw.strip()
            if line and not line.startswith("#"):
                names.append(line)
        return cls.from_names(names, source_tool=source_tool)

    def to_text(self) -> str:
        lines = [f"# visited activities ({self.source_tool or 'unknown tool'})"]
        lines.extend(self.visited)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CoverageReport:
    declared_count: int
    visited_count: int
    activity_coverage: float
    unreachable: tuple[str, ...]
    ignored_visited: int = 0
    degenerate: bool = False


def unreachable_set(declared, visited) -> set[str]:
    declared = {to_descriptor(a) for a in declared}
    visited = {to_descriptor(a) for a in visited}
    return declared - visited


def activity_coverage(declared, visited) -> float:
    declared = {to_descriptor(a) for a in declared}
    if not declared:
        return 0.0
    visited = {to_descriptor(a) for a in visited}
    return len(visited & declared) / len(declared)


def build_report(declared, visited) -> CoverageReport:
    declared_set = {to_descriptor(a) for a in declared}
    visited_set = {to_descriptor(a) for a in visited}
    ignored = len(visited_set - declared_set)
    return CoverageReport(
        declared_count=len(declared_set),
        visited_count=len(visited_set & declared_set),
        activity_coverage=activity_coverage(declared_set, visited_set),
        unreachable=tuple(sorted(declared_set - visited_set)),
        ignored_visited=ignored,
        degenerate=not declared_set,
    )


@dataclass(frozen=True)
class Reason:
    id: str
    label: str
    description: str


@dataclass(frozen=True)
class ReasonTaxonomy:
    reasons: tuple[Reason, ...]

    def __post_init__(self):
        if not self.reasons:
            raise ValueError("taxonomy must not be empty")
        ids = [r.id for r in self.reasons]
        if len(ids) != len(set(ids)):
            raise ValueError("taxonomy ids must be unique")

    def ids(self) -> list[str]:
        return [r.id for r in self.reasons]

    @classmethod
    def from_text(cls, text: str) -> "ReasonTaxonomy":
        reasons = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"taxonomy line needs id<TAB>label<TAB>description: {line!r}")
            reasons.append(Reason(*parts))
        return cls(tuple(reasons))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ReasonTaxonomy":
        if path is None:
            text = resources.files("actreach.data").joinpath("reasons.tsv").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.from_text(text)


@dataclass(frozen=True)
class LaunchOutcomeRecord:
    target: str
    category: str
    success: bool
    tool: str = ""


@dataclass(frozen=True)
class SuccessRates:
    per_category: dict[str, float]
    category_counts: dict[str, int]
    weighted_average: float


def launch_success_rate(records: list[LaunchOutcomeRecord]) -> SuccessRates:
    """Per-category success rates plus the count-weighted average.

    Weighting each category by its record count makes the average equal to
    overall successes over overall records.
    """
    if not records:
        raise EmptyInput("no launch outcome records")
    counts: dict[str, int] = {}
    successes: dict[str, int] = {}
    for record in records:
        counts[record.category] = counts.get(record.category, 0) + 1
        successes[record.category] = successes.get(record.category, 0) + int(record.success)
    per_category = {cat: successes[cat] / counts[cat] for cat in sorted(counts)}
    weighted = sum(successes.values()) / sum(counts.values())
    return SuccessRates(
        per_category=per_category,
        category_counts={cat: counts[cat] for cat in sorted(counts)},
        weighted_average=weighted,
    )


def launch_success_rate_by_tool(records: list[LaunchOutcomeRecord]) -> dict[str, SuccessRates]:
    tools: dict[str, list[LaunchOutcomeRecord]] = {}
    for record in records:
        tools.setdefault(record.tool, []).append(record)
    return {tool: launch_success_rate(tools[tool]) for tool in sorted(tools)}


def recall_at_k(ranked: list[str], truth: set[str], k: int) -> float:
    if not truth:
        raise EmptyTruth("ground-truth reason set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    top = set(ranked[:k])
    return len(truth & top) / len(truth)


@dataclass(frozen=True)
class ExternalCoverage:
    """Class/method/line counters supplied by an external measurement tool.

    Parsed from ``kind<TAB>covered<TAB>total`` lines; this toolkit never
    instruments bytecode itself.
    """

    rows: tuple[tuple[str, int, int], ...] = field(default=())

    @classmethod
    def from_text(cls, text: str) -> "ExternalCoverage":
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            kind, covered, total = line.split("\t")
            rows.append((kind, int(covered), int(total)))
        return cls(tuple(rows))


def format_percent(ratio: float) -> str:
    """Integer-percent display convention, e.g. 11/33 -> ``33%``."""
    return f"{round(ratio * 100):d}%"


def render_report(
    before: CoverageReport,
    after: CoverageReport | None = None,
    external: ExternalCoverage | None = None,
) -> str:
    """Human-readable table followed by machine-readable key=value lines."""
    lines = ["ACTIVITY COVERAGE"]
    lines.append(f"  declared            {before.declared_count}")
    lines.append(f"  baseline visited    {before.visited_count} ({format_percent(before.activity_coverage)})")
    if after is not None:
        lines.append(f"  final visited       {after.visited_count} ({format_percent(after.activity_coverage)})")
    unreachable = after.unreachable if after is not None else before.unreachable
    if unreachable:
        lines.append("  unreachable:")
        lines.extend(f"    {name}" for name in unreachable)
    else:
        lines.append("  unreachable:        none")
    if external is not None and external.rows:
        lines.append("EXTERNAL COVERAGE")
        for kind, covered, total in external.rows:
            ratio = covered / total if total else 0.0
            lines.append(f"  {kind:<10}{covered}/{total} ({format_percent(ratio)})")
    lines.append("")
    lines.append(f"declared_count={before.declared_count}")
    lines.append(f"baseline_visited={before.visited_count}")
    lines.append(f"baseline_activity_coverage={before.activity_coverage:.6f}")
    if after is not None:
        lines.append(f"final_visited={after.visited_count}")
        lines.append(f"final_activity_coverage={after.activity_coverage:.6f}")
        lines.append(f"unreachable_count={len(after.unreachable)}")
    else:
        lines.append(f"unreachable_count={len(before.unreachable)}")
    if external is not None:
        for kind, covered, total in external.rows:
            ratio = covered / total if total else 0.0
            lines.append(f"{kind}_coverage={ratio:.6f}")
    return "\n".join(lines) + "\n"
