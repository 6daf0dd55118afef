"""Deterministic rendering of instrumentation plans into Frida-style scripts.

The rendered text embeds the plan as a structured header comment so the
exact plan can be recovered from any script file for audit; semantic checks
run against the plan, never against script syntax.
"""

from __future__ import annotations

from .errors import PlanParseError, UnsupportedLiteralType
from .names import to_dotted
from .plan import SKIP_BODY, InstrumentationPlan, check_literal, dump_plan, parse_plan

PLAN_BEGIN = "// PLAN-BEGIN"
PLAN_END = "// PLAN-END"

_PRIMITIVES = {
    "Z": "boolean",
    "B": "byte",
    "S": "short",
    "C": "char",
    "I": "int",
    "J": "long",
    "F": "float",
    "D": "double",
    "V": "void",
}


def _java_type(descriptor: str) -> str:
    if descriptor.startswith("["):
        return "[" + descriptor[1:].replace("/", ".")
    if descriptor in _PRIMITIVES:
        return _PRIMITIVES[descriptor]
    if descriptor.startswith("L") and descriptor.endswith(";"):
        return descriptor[1:-1].replace("/", ".")
    return descriptor


def _overload_types(signature: str) -> list[str]:
    params = signature[signature.index("(") + 1 : signature.rindex(")")]
    types = []
    i = 0
    while i < len(params):
        start = i
        while params[i] == "[":
            i += 1
        if params[i] == "L":
            i = params.index(";", i)
        i += 1
        types.append(_java_type(params[start:i]))
    return types


def render_script(plan: InstrumentationPlan, target: str | None = None) -> str:
    """Expand the plan into Frida-compatible JavaScript.

    One hook stanza per hook entry, an intent-construction stanza when an
    intent is specified, and a launch stanza when the script itself starts
    the activity. The launch falls back to `target` when the plan carries no
    explicit intent.
    """
    for hook in plan.hooks:
        if hook.forced_return != SKIP_BODY:
            check_literal(hook.forced_return)

    header = [PLAN_BEGIN]
    for line in dump_plan(plan).splitlines():
        header.append(f"// {line}")
    header.append(PLAN_END)

    body = ["Java.perform(function () {", "    try {", '        console.log("[*] instrumentation loaded");']
    for i, hook in enumerate(plan.hooks):
        cls = to_dotted(hook.method.owner)
        name = hook.method.signature.split("(", 1)[0]
        overload = ", ".join(f"'{t}'" for t in _overload_types(hook.method.signature))
        body.append(f'        var cls{i} = Java.use("{cls}");')
        body.append(f"        cls{i}.{name}.overload({overload}).implementation = function () {{")
        if hook.forced_return == SKIP_BODY:
            body.append(f'            console.log("[*] skipped body of {name}");')
        else:
            body.append(f'            console.log("[*] forced return from {name}");')
            body.append(f"            return {hook.forced_return};")
        body.append("        };")

    launch_target = plan.intent_spec.target if plan.intent_spec is not None else target
    if plan.intent_spec is not None or plan.launch_directive:
        body.append('        var ActivityThread = Java.use("android.app.ActivityThread");')
        body.append("        var ctx = ActivityThread.currentApplication().getApplicationContext();")
        body.append('        var Intent = Java.use("android.content.Intent");')
        body.append("        var intent = Intent.$new();")
        if launch_target is not None:
            body.append(f'        intent.setClassName(ctx, "{to_dotted(launch_target)}");')
        if plan.intent_spec is not None:
            if plan.intent_spec.action:
                body.append(f'        intent.setAction("{plan.intent_spec.action}");')
            for etype, key, value in plan.intent_spec.extras:
                body.append(f'        intent.putExtra("{key}", {_js_extra(etype, value)});')
        body.append("        intent.addFlags(0x10000000);")
        body.append("        ctx.startActivity(intent);")
        body.append('        console.log("[*] startActivity issued");')

    body.append("    } catch (err) {")
    body.append('        console.log("[!] instrumentation error: " + err);')
    body.append("    }")
    body.append("});")
    return "\n".join(header + body) + "\n"


def _js_extra(etype: str, value: str) -> str:
    if etype == "string":
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if etype in ("int", "boolean"):
        return value
    raise UnsupportedLiteralType(f"unsupported extra type {etype!r}")


def parse_script_plan(script_text: str) -> InstrumentationPlan:
    """Recover the plan embedded in a rendered script's header comment."""
    lines = script_text.splitlines()
    try:
        start = lines.index(PLAN_BEGIN)
        end = lines.index(PLAN_END)
    except ValueError:
        raise PlanParseError("script has no plan header") from None
    plan_lines = []
    for raw in lines[start + 1 : end]:
        if not raw.startswith("// "):
            raise PlanParseError("malformed plan header line", raw)
        plan_lines.append(raw[3:])
    return parse_plan("\n".join(plan_lines))
