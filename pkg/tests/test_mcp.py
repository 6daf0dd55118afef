import io
import json

from actreach.episodic import Recorder, SequentialClock
from actreach.mcp_server import TOOLS, handle_tool_call, serve, truncate_result

EXPECTED_TOOL_NAMES = [
    "get_activities",
    "check_activity_exists",
    "check_class_exists",
    "get_methods_inside_class",
    "get_method_body",
    "get_methods_invoked",
    "get_caller_methods",
    "get_launching_activities_and_methods",
    "get_launching_activities_and_methods",
]


def run_session(pkg, frames: list[str]) -> list:
    stdin = io.StringIO("\n".join(frames) + "\n")
    stdout = io.StringIO()
    recorder = Recorder(clock=SequentialClock())
    serve(pkg, recorder, stdin=stdin, stdout=stdout)
    responses = [json.loads(line) for line in stdout.getvalue().splitlines()]
    return responses, recorder


def rpc(method, params=None, req_id=None):
    frame = {"jsonrpc": "2.0", "method": method}
    if params is not None:
        frame["params"] = params
    if req_id is not None:
        frame["id"] = req_id
    return json.dumps(frame)


def test_tool_surface_is_the_nine_entries():
    assert [t.name for t in TOOLS] == EXPECTED_TOOL_NAMES
    descriptions = [t.description for t in TOOLS if t.name == "get_launching_activities_and_methods"]
    assert len(descriptions) == 2 and descriptions[0] != descriptions[1]


def test_tools_list_returns_nine_descriptors(demo_pkg):
    responses, _ = run_session(demo_pkg, [rpc("tools/list", req_id=1)])
    tools = responses[0]["result"]["tools"]
    assert [t["name"] for t in tools] == EXPECTED_TOOL_NAMES
    for tool in tools:
        assert tool["inputSchema"]["type"] == "object"


def test_initialize_handshake(demo_pkg):
    responses, _ = run_session(demo_pkg, [rpc("initialize", {"protocolVersion": "2024-11-05"}, req_id=0)])
    assert responses[0]["id"] == 0
    assert responses[0]["result"]["serverInfo"]["name"]


def test_get_activities_on_basic_fixture(basic_pkg):
    text = handle_tool_call(basic_pkg, "get_activities", {})
    assert text.splitlines() == [
        "com.demo.basic.MainActivity",
        "com.demo.basic.ListActivity",
        "com.demo.basic.DetailActivity",
        "com.demo.basic.GhostActivity",
    ]


def test_check_activity_exists_dotted(demo_pkg):
    assert handle_tool_call(demo_pkg, "check_activity_exists", {"class_name": "com.demo.app.TransferActivity"}) == "true"
    assert handle_tool_call(demo_pkg, "check_activity_exists", {"activity_name": "com.demo.app.TransferActivity"}) == "true"
    assert handle_tool_call(demo_pkg, "check_activity_exists", {"class_name": "com.none.X"}) == "false"


def test_get_method_body_returns_guard_lines(demo_pkg):
    text = handle_tool_call(
        demo_pkg,
        "get_method_body",
        {"class_name": "com.demo.app.TransferActivity", "method_sig": "onCreate(Landroid/os/Bundle;)V"},
    )
    assert "if-nez v0, :cond_0" in text
    assert "SdGate;->isSdCardMissing()Z" in text


def test_get_caller_methods_empty_result_text(demo_pkg):
    text = handle_tool_call(
        demo_pkg, "get_caller_methods", {"class_name": "com.demo.app.StatusActivity", "method_sig": "openBrowse()V"}
    )
    assert text == "(none)"


def test_launching_pairs_text(demo_pkg):
    text = handle_tool_call(
        demo_pkg, "get_launching_activities_and_methods", {"target_activity": "com.demo.app.TransferActivity"}
    )
    assert "com.demo.app.BrowseActivity\t" in text
    missing = handle_tool_call(
        demo_pkg, "get_launching_activities_and_methods", {"target_activity": "com.demo.app.DiagnosticsActivity"}
    )
    assert missing == "(no launching sites found)"


def test_fifty_calls_roundtrip_with_matching_ids(demo_pkg):
    frames = [
        rpc("tools/call", {"name": "check_class_exists", "arguments": {"class_name": f"com.demo.app.C{i}"}}, req_id=100 + i)
        for i in range(50)
    ]
    responses, recorder = run_session(demo_pkg, frames)
    assert [r["id"] for r in responses] == [100 + i for i in range(50)]
    assert all(r["result"]["content"][0]["text"] == "false" for r in responses)
    assert len(recorder) == 50


def test_malformed_frames_never_kill_session(demo_pkg):
    frames = [
        "this is not json {{{",
        json.dumps(["not", "an", "object"]),
        rpc("nonexistent/method", req_id=1),
        rpc("tools/call", {"name": "no_such_tool", "arguments": {}}, req_id=2),
        rpc("tools/call", {"name": "get_method_body", "arguments": {}}, req_id=3),
        rpc("tools/list", req_id=4),
    ]
    responses, recorder = run_session(demo_pkg, frames)
    assert responses[0]["error"]["code"] == -32700
    assert responses[1]["error"]["code"] == -32600
    assert responses[2]["error"]["code"] == -32601
    assert responses[3]["error"]["code"] == -32601
    assert responses[4]["error"]["code"] == -32602
    assert "tools" in responses[5]["result"]
    # the two failed tools/call frames are still recorded
    assert len(recorder) == 2


def test_notifications_get_no_response(demo_pkg):
    frames = [json.dumps({"jsonrpc": "2.0", "method": "notifications/initialized"}), rpc("tools/list", req_id=9)]
    responses, _ = run_session(demo_pkg, frames)
    assert len(responses) == 1
    assert responses[0]["id"] == 9


def test_recorder_completeness_in_seq_order(demo_pkg):
    frames = [
        rpc("tools/call", {"name": "get_activities", "arguments": {}}, req_id=i) for i in range(7)
    ]
    _, recorder = run_session(demo_pkg, frames)
    assert [r.seq for r in recorder.records] == list(range(1, 8))
    assert all(r.tool_name == "get_activities" for r in recorder.records)


def test_result_size_cap_truncates_with_marker(demo_pkg):
    long_text = "x" * 100
    capped = truncate_result(long_text, 10)
    assert capped.startswith("x" * 10)
    assert "[truncated 90 bytes]" in capped
    assert truncate_result("short", 100) == "short"


def test_tools_list_idempotent(demo_pkg):
    first, _ = run_session(demo_pkg, [rpc("tools/list", req_id=1)])
    second, _ = run_session(demo_pkg, [rpc("tools/list", req_id=1)])
    assert first == second


def test_activity_check_on_mail_style_package(tmp_path):
    from actreach.package import ingest_package

    (tmp_path / "AndroidManifest.xml").write_text(
        '<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="com.fsck.k9">'
        '<application><activity android:name=".activity.ChooseAccount"/></application></manifest>',
        encoding="utf-8",
    )
    smali = tmp_path / "smali" / "com" / "fsck" / "k9" / "activity"
    smali.mkdir(parents=True)
    (smali / "ChooseAccount.smali").write_text(
        ".class public Lcom/fsck/k9/activity/ChooseAccount;\n.super Landroid/app/Activity;\n",
        encoding="utf-8",
    )
    pkg = ingest_package(tmp_path)
    assert handle_tool_call(pkg, "check_activity_exists", {"class_name": "com.fsck.k9.activity.ChooseAccount"}) == "true"
    assert handle_tool_call(pkg, "check_activity_exists", {"activity_name": "com.fsck.k9.activity.ChooseAccount"}) == "true"
