"""Chat-model clients with tool calling.

Two implementations of one contract: a live HTTP client for an OpenAI-style
chat-completions endpoint, and a replay client that returns canned turns
from a script file so the whole agent layer runs deterministically in tests
and offline pipelines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .errors import ClientError


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict[str, str]


@dataclass(frozen=True)
class ModelTurn:
    """Either assistant text or a list of tool-call requests, never both."""

    text: str | None = None
    tool_calls: tuple[ToolCall, ...] = ()


class ModelClient(Protocol):
    def send(self, messages: list[dict], tools: Sequence) -> ModelTurn: ...


class ReplayClient:
    """Returns scripted turns in order; exhaustion is a client error."""

    def __init__(self, turns: list[dict], label: str = "replay"):
        self._turns = list(turns)
        self._pos = 0
        self.label = label

    @classmethod
    def from_bundle(cls, path: str | Path, section: str, target: str) -> "ReplayClient":
        """Load one target's turn list from a replay bundle file.

        The bundle maps agent section ("static" / "dynamic") to a map of
        target descriptor to turn list.
        """
        bundle = json.loads(Path(path).read_text(encoding="utf-8"))
        try:
            turns = bundle[section][target]
        except KeyError:
            raise ClientError(f"replay bundle {path} has no turns for {section}/{target}") from None
        return cls(turns, label=f"{section}/{target}")

    def send(self, messages: list[dict], tools: Sequence) -> ModelTurn:
        if self._pos >= len(self._turns):
            raise ClientError(f"replay script {self.label} exhausted after {self._pos} turns")
        turn = self._turns[self._pos]
        self._pos += 1
        if "tool_calls" in turn:
            calls = tuple(
                ToolCall(name=c["name"], arguments={str(k): str(v) for k, v in c.get("arguments", {}).items()})
                for c in turn["tool_calls"]
            )
            return ModelTurn(tool_calls=calls)
        if "text" in turn:
            return ModelTurn(text=turn["text"])
        raise ClientError(f"replay turn {self._pos} of {self.label} has neither text nor tool_calls")


class HttpChatClient:
    """Minimal chat-completions client (OpenAI wire format, tools enabled)."""

    def __init__(self, endpoint: str, model_id: str, api_key: str = "", max_tokens: int = 4096, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.max_tokens = max_tokens
        self.timeout = timeout

    def send(self, messages: list[dict], tools: Sequence) -> ModelTurn:
        import requests

        payload = {
            "model": self.model_id,
            "messages": messages,
            "max_tokens": self.max_tokens,
        }
        if tools:
            payload["tools"] = [
                {
                    "type": "function",
                    "function": {
                        "name": t.name,
                        "description": t.description,
                        "parameters": t.input_schema(),
                    },
                }
                for t in tools
            ]
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.endpoint}/chat/completions", json=payload, headers=headers, timeout=self.timeout
            )
            resp.raise_for_status()
            data = resp.json()
        except requests.RequestException as exc:
            raise ClientError(f"model endpoint failure: {exc}", transcript=messages) from exc
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError) as exc:
            raise ClientError(f"unexpected response shape: {data!r:.200}", transcript=messages) from exc
        raw_calls = message.get("tool_calls") or []
        if raw_calls:
            calls = []
            for c in raw_calls:
                fn = c.get("function", {})
                try:
                    arguments = json.loads(fn.get("arguments") or "{}")
                except json.JSONDecodeError:
                    arguments = {}
                calls.append(ToolCall(name=fn.get("name", ""), arguments={str(k): str(v) for k, v in arguments.items()}))
            return ModelTurn(tool_calls=tuple(calls))
        return ModelTurn(text=message.get("content") or "")
