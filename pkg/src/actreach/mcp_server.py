"""JSON-RPC 2.0 stdio server exposing the code-query tool surface.

Serves ``initialize``, ``tools/list``, and ``tools/call`` over newline
delimited messages so any tool-calling model can query the index and the
transition graph. Every tools/call is appended to a recorder; the resulting
record file is handed to the instrumentation agent as its episodic memory.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass

from .episodic import Recorder
from .errors import ActreachError
from .names import to_dotted
from .package import AppPackage

logger = logging.getLogger(__name__)

SERVER_NAME = "actreach-code-memory"
SERVER_VERSION = "0.1.0"
PROTOCOL_VERSION = "2024-11-05"

DEFAULT_RESULT_CAP = 64 * 1024


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    params: tuple[tuple[str, str], ...]
    description: str

    def input_schema(self) -> dict:
        return {
            "type": "object",
            "properties": {name: {"type": "string", "description": desc} for name, desc in self.params},
            "required": [name for name, _ in self.params],
        }


# The launching-sites query is served under the same name twice: once for the
# smali-derived call sites and once for the transition graph. Both rows
# dispatch to the single graph-backed handler.
TOOLS: tuple[ToolDescriptor, ...] = (
    ToolDescriptor(
        "get_activities",
        (),
        "Returns the list of all declared activities within the application.",
    ),
    ToolDescriptor(
        "check_activity_exists",
        (("class_name", "Activity class name, dotted or descriptor form"),),
        "Checks whether a given activity is defined in the app.",
    ),
    ToolDescriptor(
        "check_class_exists",
        (("class_name", "Class name, dotted or descriptor form"),),
        "Verifies the existence of any class within the decompiled smali files.",
    ),
    ToolDescriptor(
        "get_methods_inside_class",
        (("class_name", "Class name, dotted or descriptor form"),),
        "Lists all methods defined within a specified class.",
    ),
    ToolDescriptor(
        "get_method_body",
        (
            ("class_name", "Class name, dotted or descriptor form"),
            ("method_sig", "Method signature, e.g. onCreate(Landroid/os/Bundle;)V; bare names match all overloads"),
        ),
        "Retrieves the full smali code body for a given method.",
    ),
    ToolDescriptor(
        "get_methods_invoked",
        (
            ("class_name", "Class name, dotted or descriptor form"),
            ("method_sig", "Method signature; bare names match all overloads"),
        ),
        "Returns the list of methods invoked within a specified method body, for forward control-flow traversal.",
    ),
    ToolDescriptor(
        "get_caller_methods",
        (
            ("class_name", "Class name, dotted or descriptor form"),
            ("method_sig", "Method signature; bare names match all overloads"),
        ),
        "Identifies methods that call the specified method, for backward data- or control-flow traversal.",
    ),
    ToolDescriptor(
        "get_launching_activities_and_methods",
        (("target_activity", "Target activity name, dotted or descriptor form"),),
        "Returns activity-method pairs whose smali launch sites start the target activity.",
    ),
    ToolDescriptor(
        "get_launching_activities_and_methods",
        (("target_activity", "Target activity name, dotted or descriptor form"),),
        "Returns source activities and method signatures that transition to the target activity in the app's transition graph.",
    ),
)

TOOL_NAMES = tuple(t.name for t in TOOLS)

# Agents routinely emit activity_name where the schema says class_name.
_ARG_ALIASES = {
    "class_name": ("class_name", "activity_name", "target_activity"),
    "method_sig": ("method_sig", "method_signature", "method_name"),
    "target_activity": ("target_activity", "activity_name", "class_name"),
}


class UnknownTool(ActreachError):
    pass


class MissingArgument(ActreachError):
    pass


def _arg(args: dict, name: str) -> str:
    for alias in _ARG_ALIASES.get(name, (name,)):
        if alias in args and str(args[alias]).strip():
            return str(args[alias])
    raise MissingArgument(f"missing required argument {name!r}")


def handle_tool_call(pkg: AppPackage, name: str, args: dict) -> str:
    """Dispatch one tool call to the index/package/graph query it fronts.

    Results are plain text blocks, stable across runs: agents consume them
    as prompt text.
    """
    if name == "get_activities":
        activities = pkg.get_activities()
        if not activities:
            return "(no activities declared)"
        return "\n".join(to_dotted(a) for a in activities)

    if name == "check_activity_exists":
        presence = pkg.check_activity_exists(_arg(args, "class_name"))
        if not presence.exists:
            return "false"
        if presence.missing_smali:
            return "true (warning: declared in manifest but no smali class found)"
        return "true"

    if name == "check_class_exists":
        return "true" if pkg.index.check_class_exists(_arg(args, "class_name")) else "false"

    if name == "get_methods_inside_class":
        class_name = _arg(args, "class_name")
        sigs = pkg.index.get_methods_inside_class(class_name)
        if sigs is None:
            return f"class not found: {to_dotted(class_name)}"
        if not sigs:
            return "(no methods)"
        return "\n".join(sigs)

    if name == "get_method_body":
        class_name = _arg(args, "class_name")
        sig = _arg(args, "method_sig")
        body = pkg.index.get_method_body(class_name, sig)
        if body is None:
            return f"method not found: {to_dotted(class_name)}->{sig}"
        return body

    if name == "get_methods_invoked":
        class_name = _arg(args, "class_name")
        sig = _arg(args, "method_sig")
        refs = pkg.index.get_methods_invoked(class_name, sig)
        if refs is None:
            return f"method not found: {to_dotted(class_name)}->{sig}"
        if not refs:
            return "(none)"
        return "\n".join(str(r) for r in refs)

    if name == "get_caller_methods":
        refs = pkg.index.get_caller_methods(_arg(args, "class_name"), _arg(args, "method_sig"))
        if not refs:
            return "(none)"
        return "\n".join(str(r) for r in refs)

    if name == "get_launching_activities_and_methods":
        pairs = pkg.ctg.get_launching_activities_and_methods(_arg(args, "target_activity"))
        if not pairs:
            return "(no launching sites found)"
        return "\n".join(f"{to_dotted(activity)}\t{method}" for activity, method in pairs)

    raise UnknownTool(f"unknown tool {name!r}")


def truncate_result(text: str, cap: int) -> str:
    data = text.encode("utf-8")
    if len(data) <= cap:
        return text
    kept = data[:cap].decode("utf-8", errors="ignore")
    return f"{kept}\n[truncated {len(data) - cap} bytes]"


def _error(req_id, code: int, message: str) -> dict:
    return {"jsonrpc": "2.0", "id": req_id, "error": {"code": code, "message": message}}


def _result(req_id, payload: dict) -> dict:
    return {"jsonrpc": "2.0", "id": req_id, "result": payload}


def handle_request(pkg: AppPackage, recorder: Recorder, request: dict, result_cap: int) -> dict | None:
    """Answer one decoded JSON-RPC request; None for notifications."""
    req_id = request.get("id")
    is_notification = "id" not in request
    method = request.get("method")
    if not isinstance(method, str):
        return None if is_notification else _error(req_id, -32600, "invalid request: missing method")

    if method == "initialize":
        payload = {
            "protocolVersion": PROTOCOL_VERSION,
            "serverInfo": {"name": SERVER_NAME, "version": SERVER_VERSION},
            "capabilities": {"tools": {}},
        }
        return None if is_notification else _result(req_id, payload)

    if method == "tools/list":
        tools = [
            {"name": t.name, "description": t.description, "inputSchema": t.input_schema()}
            for t in TOOLS
        ]
        return None if is_notification else _result(req_id, {"tools": tools})

    if method == "tools/call":
        params = request.get("params")
        params = params if isinstance(params, dict) else {}
        name = str(params.get("name", ""))
        arguments = params.get("arguments")
        arguments = {str(k): str(v) for k, v in arguments.items()} if isinstance(arguments, dict) else {}
        try:
            text = truncate_result(handle_tool_call(pkg, name, arguments), result_cap)
            response = _result(req_id, {"content": [{"type": "text", "text": text}], "isError": False})
        except UnknownTool as exc:
            text = str(exc)
            response = _error(req_id, -32601, text)
        except MissingArgument as exc:
            text = str(exc)
            response = _error(req_id, -32602, text)
        recorder.record(name, arguments, text)
        return None if is_notification else response

    return None if is_notification else _error(req_id, -32601, f"method not found: {method}")


def serve(pkg: AppPackage, recorder: Recorder, stdin=None, stdout=None, result_cap: int = DEFAULT_RESULT_CAP) -> None:
    """Run the request loop until input closes.

    Requests are processed strictly serially in arrival order; malformed
    frames are answered with protocol error objects, never process death.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            _write(stdout, _error(None, -32700, "parse error"))
            continue
        if not isinstance(request, dict):
            _write(stdout, _error(None, -32600, "invalid request: not an object"))
            continue
        try:
            response = handle_request(pkg, recorder, request, result_cap)
        except Exception as exc:  # pragma: no cover - defensive: the loop must survive
            logger.exception("internal error handling request")
            response = _error(request.get("id"), -32603, f"internal error: {exc}")
        if response is not None:
            _write(stdout, response)


def _write(stdout, response: dict) -> None:
    try:
        stdout.write(json.dumps(response, sort_keys=True) + "\n")
        stdout.flush()
    except (OSError, ValueError):  # pragma: no cover - transport failure
        logger.error("failed to write response")
