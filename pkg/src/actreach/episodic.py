"""Tool-call records: the per-target log the instrumentation agent replays.

Every tool invocation made while inferring one target's activation
conditions is appended to a line-delimited JSON file. That file is both the
audit trail of the tool server and the only code context the downstream
agent is allowed to see for the same target.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable

from .errors import NotFound


@dataclass(frozen=True)
class ToolCallRecord:
    seq: int
    tool_name: str
    args: dict[str, str]
    result: str
    timestamp: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ToolCallRecord":
        data = json.loads(line)
        return cls(
            seq=data["seq"],
            tool_name=data["tool_name"],
            args=dict(data["args"]),
            result=data["result"],
            timestamp=data["timestamp"],
        )


class SequentialClock:
    """Deterministic stand-in for wall time: returns 0.0, 1.0, 2.0, ..."""

    def __init__(self):
        self._next = 0.0

    def __call__(self) -> float:
        value = self._next
        self._next += 1.0
        return value


class Recorder:
    """Append-only sink of ToolCallRecords, optionally mirrored to a file."""

    def __init__(self, path: str | Path | None = None, clock: Callable[[], float] = time.time):
        self.path = Path(path) if path is not None else None
        self._clock = clock
        self._records: list[ToolCallRecord] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def record(self, tool_name: str, args: dict[str, str], result: str) -> ToolCallRecord:
        rec = ToolCallRecord(
            seq=len(self._records) + 1,
            tool_name=tool_name,
            args=dict(args),
            result=result,
            timestamp=self._clock(),
        )
        self._records.append(rec)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(rec.to_json() + "\n")
        return rec

    @property
    def records(self) -> list[ToolCallRecord]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)


@dataclass(frozen=True)
class EpisodicMemory:
    """Ordered tool-call records from one target's inference session only."""

    target: str
    records: tuple[ToolCallRecord, ...]

    @classmethod
    def from_records(cls, target: str, records: Iterable[ToolCallRecord]) -> "EpisodicMemory":
        return cls(target=target, records=tuple(records))

    @classmethod
    def load(cls, path: str | Path, target: str) -> "EpisodicMemory":
        records = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                records.append(ToolCallRecord.from_json(line))
        return cls(target=target, records=tuple(records))

    def retrieve(self, seq_or_name: int | str) -> list[ToolCallRecord]:
        """Look up by exact seq, or by tool name (all matches, in order)."""
        if isinstance(seq_or_name, int) or (isinstance(seq_or_name, str) and seq_or_name.isdigit()):
            seq = int(seq_or_name)
            for rec in self.records:
                if rec.seq == seq:
                    return [rec]
            raise NotFound(f"no tool call with seq {seq}")
        matches = [rec for rec in self.records if rec.tool_name == seq_or_name]
        if not matches:
            raise NotFound(f"no tool call named {seq_or_name!r}")
        return matches


def retrieve_tool_call_result(episodic: EpisodicMemory, seq_or_name: int | str) -> str:
    """Render matching records as text, the form the agent consumes."""
    matches = episodic.retrieve(seq_or_name)
    blocks = []
    for rec in matches:
        args = json.dumps(rec.args, sort_keys=True)
        blocks.append(f"{rec.seq}: name: {rec.tool_name}, args: {args}\n{rec.result}")
    return "\n\n".join(blocks)
