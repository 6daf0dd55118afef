"""Machine-checkable instrumentation plans.

A plan is the structured core of a generated instrumentation script: which
methods to hook and what they must return, what intent to construct, and
whether the script launches the target itself. The line grammar::

    HOOK <class>-><signature> RETURN <literal> [EXTERNAL]
    HOOK <class>-><signature> SKIP [EXTERNAL]
    INTENT <target class>
    ACTION <action string>
    EXTRA <string|int|boolean> <key> <value>
    LAUNCH

Literals are ``true``, ``false``, ``null``, integers, or double-quoted
strings. ``SKIP`` replaces the hooked body with a no-op. ``EXTERNAL`` marks
a hook on a framework or library method that is absent from the app index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PlanParseError, UnsupportedLiteralType
from .names import to_descriptor
from .smali import MethodRef

SKIP_BODY = "skip-body"

EXTRA_TYPES = ("string", "int", "boolean")

_INT_RE = re.compile(r"^-?\d+$")
_STRING_RE = re.compile(r'^"(?:[^"\\]|\\.)*"$')


def check_literal(token: str) -> str:
    """Validate a forced-return literal token; returns it unchanged."""
    if token in ("true", "false", "null") or _INT_RE.match(token) or _STRING_RE.match(token):
        return token
    raise UnsupportedLiteralType(f"unsupported literal {token!r}")


@dataclass(frozen=True)
class Hook:
    method: MethodRef
    forced_return: str  # literal token, or SKIP_BODY
    external: bool = False


@dataclass(frozen=True)
class IntentSpec:
    target: str
    action: str | None = None
    extras: tuple[tuple[str, str, str], ...] = ()  # (type, key, value)


@dataclass(frozen=True)
class InstrumentationPlan:
    hooks: tuple[Hook, ...] = ()
    intent_spec: IntentSpec | None = None
    launch_directive: bool = False


def parse_plan(text: str) -> InstrumentationPlan:
    """Parse plan lines; raises PlanParseError with the offending line."""
    hooks: list[Hook] = []
    intent_target: str | None = None
    action: str | None = None
    extras: list[tuple[str, str, str]] = []
    seen_keys: set[str] = set()
    launch = False

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        verb, _, rest = line.partition(" ")
        verb = verb.upper()
        if verb == "HOOK":
            hooks.append(_parse_hook(rest, raw))
        elif verb == "INTENT":
            if not rest.strip():
                raise PlanParseError("INTENT needs a target class", raw)
            if intent_target is not None:
                raise PlanParseError("only one INTENT per plan", raw)
            intent_target = to_descriptor(rest.strip())
        elif verb == "ACTION":
            if intent_target is None:
                raise PlanParseError("ACTION before INTENT", raw)
            action = rest.strip()
        elif verb == "EXTRA":
            if intent_target is None:
                raise PlanParseError("EXTRA before INTENT", raw)
            parts = rest.split(" ", 2)
            if len(parts) != 3:
                raise PlanParseError("EXTRA needs <type> <key> <value>", raw)
            etype, key, value = parts
            if etype not in EXTRA_TYPES:
                raise PlanParseError(f"extra type must be one of {EXTRA_TYPES}", raw)
            if key in seen_keys:
                raise PlanParseError(f"duplicate extra key {key!r}", raw)
            seen_keys.add(key)
            _check_extra_value(etype, value, raw)
            extras.append((etype, key, value))
        elif verb == "LAUNCH":
            launch = True
        else:
            raise PlanParseError("unknown plan verb", raw)

    intent = None
    if intent_target is not None:
        intent = IntentSpec(target=intent_target, action=action, extras=tuple(extras))
    return InstrumentationPlan(hooks=tuple(hooks), intent_spec=intent, launch_directive=launch)


def _parse_hook(rest: str, raw: str) -> Hook:
    tokens = rest.split()
    if not tokens:
        raise PlanParseError("HOOK needs a method reference", raw)
    try:
        method = MethodRef.parse(tokens[0])
    except Exception:
        raise PlanParseError("HOOK method must look like Lpkg/Cls;->name(...)R", raw) from None
    tokens = tokens[1:]
    external = False
    if tokens and tokens[-1].upper() == "EXTERNAL":
        external = True
        tokens = tokens[:-1]
    if len(tokens) == 1 and tokens[0].upper() == "SKIP":
        return Hook(method=method, forced_return=SKIP_BODY, external=external)
    if len(tokens) == 2 and tokens[0].upper() == "RETURN":
        try:
            return Hook(method=method, forced_return=check_literal(tokens[1]), external=external)
        except UnsupportedLiteralType as exc:
            raise PlanParseError(str(exc), raw) from None
    raise PlanParseError("HOOK needs RETURN <literal> or SKIP", raw)


def _check_extra_value(etype: str, value: str, raw: str) -> None:
    if etype == "int" and not _INT_RE.match(value):
        raise PlanParseError("int extra needs an integer value", raw)
    if etype == "boolean" and value not in ("true", "false"):
        raise PlanParseError("boolean extra needs true or false", raw)


def dump_plan(plan: InstrumentationPlan) -> str:
    """Canonical plan text; parse_plan(dump_plan(p)) == p."""
    lines = []
    for hook in plan.hooks:
        verb = "SKIP" if hook.forced_return == SKIP_BODY else f"RETURN {hook.forced_return}"
        suffix = " EXTERNAL" if hook.external else ""
        lines.append(f"HOOK {hook.method} {verb}{suffix}")
    if plan.intent_spec is not None:
        lines.append(f"INTENT {plan.intent_spec.target}")
        if plan.intent_spec.action:
            lines.append(f"ACTION {plan.intent_spec.action}")
        for etype, key, value in plan.intent_spec.extras:
            lines.append(f"EXTRA {etype} {key} {value}")
    if plan.launch_directive:
        lines.append("LAUNCH")
    return "\n".join(lines)
