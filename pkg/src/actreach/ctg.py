"""Component transition graph construction.

Finds ``startActivity`` / ``startActivityForResult`` call sites and resolves
their intent targets with a simplified intra-procedural backward scan over
the two idioms that dominate real smali: the two-argument
``Intent(Context, Class)`` constructor fed by ``const-class``, and
``setClassName`` / ``setClass`` fed by a literal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .index import CodeIndex
from .names import to_descriptor
from .smali import Instruction, Kind, MethodRef, SmaliMethod

LAUNCH_APIS = ("startActivity", "startActivityForResult")

INTENT_CTOR_CLASS = "Landroid/content/Intent;-><init>(Landroid/content/Context;Ljava/lang/Class;)V"


@dataclass(frozen=True)
class LaunchSite:
    caller: MethodRef
    line_no: int
    api: str
    resolved_target: str | None = None
    resolution: str = "Unresolved"  # ConstClass | SetClassName | Unresolved


@dataclass(frozen=True)
class Ctg:
    edges: tuple  # (source_activity, source_method: MethodRef, target_activity)
    unresolved_sites: tuple

    def sources(self, target: str) -> list[str]:
        target = to_descriptor(target)
        found: dict[str, None] = {}
        for src, _method, dst in self.edges:
            if dst == target:
                found.setdefault(src)
        return sorted(found)

    def get_launching_activities_and_methods(self, target: str) -> list[tuple[str, MethodRef]]:
        target = to_descriptor(target)
        pairs = {(src, method) for src, method, dst in self.edges if dst == target}
        return sorted(pairs)


def find_launch_sites(index: CodeIndex) -> list[LaunchSite]:
    """One site per invoke whose callee name is a launch API, any overload."""
    sites = []
    for method in index.methods():
        for ins in method.instructions:
            if ins.kind is not Kind.INVOKE:
                continue
            callee: MethodRef = ins.operands["method"]
            name = callee.signature.split("(", 1)[0]
            if name in LAUNCH_APIS:
                sites.append(LaunchSite(caller=method.ref, line_no=ins.line_no, api=name))
    return sites


def _intent_register(ins: Instruction) -> str | None:
    """Register holding the Intent argument of a launch invoke.

    Instance launch APIs receive the receiver first, so the Intent is the
    second register in the brace list.
    """
    regs = ins.operands["registers"]
    if len(regs) >= 2:
        return regs[1]
    return None


def resolve_intent_target(index: CodeIndex, site: LaunchSite) -> LaunchSite:
    """Fill the site's resolution by scanning backward through the caller.

    Unresolved is a valid outcome (parameter-passed intents, helper-built
    intents, implicit intents).
    """
    method = _find_method(index, site.caller)
    if method is None:
        return site
    body = method.instructions
    pos = next((i for i, ins in enumerate(body) if ins.line_no == site.line_no), None)
    if pos is None:
        return site
    intent_reg = _intent_register(body[pos])
    if intent_reg is None:
        return site

    for i in range(pos - 1, -1, -1):
        ins = body[i]
        if ins.kind is not Kind.INVOKE:
            continue
        callee: MethodRef = ins.operands["method"]
        regs = ins.operands["registers"]
        if not regs or regs[0] != intent_reg:
            continue
        if str(callee) == INTENT_CTOR_CLASS and len(regs) == 3:
            target = _trace_const_class(body, i, regs[2])
            if target is not None:
                return replace(site, resolved_target=target, resolution="ConstClass")
            return site
        callee_name = callee.signature.split("(", 1)[0]
        if callee_name in ("setClassName", "setClass") and len(regs) >= 2:
            target = _trace_class_argument(body, i, regs[-1])
            if target is not None:
                return replace(site, resolved_target=target, resolution="SetClassName")
            return site
    return site


def _trace_const_class(body: tuple, upto: int, register: str) -> str | None:
    for i in range(upto - 1, -1, -1):
        ins = body[i]
        if ins.kind is Kind.CONST and ins.operands.get("register") == register and "class" in ins.operands:
            return ins.operands["class"]
    return None


def _trace_class_argument(body: tuple, upto: int, register: str) -> str | None:
    for i in range(upto - 1, -1, -1):
        ins = body[i]
        if ins.kind is not Kind.CONST or ins.operands.get("register") != register:
            continue
        if "class" in ins.operands:
            return ins.operands["class"]
        if "string" in ins.operands:
            return to_descriptor(ins.operands["string"])
    return None


def _find_method(index: CodeIndex, ref: MethodRef) -> SmaliMethod | None:
    cls = index.classes.get(ref.owner)
    if cls is None:
        return None
    for method in cls.methods:
        if method.signature == ref.signature:
            return method
    return None


def nearest_declared_activity(index: CodeIndex, owner: str, declared: set[str]) -> str | None:
    """Walk the superclass chain from `owner` until a declared activity.

    Launch behavior is often defined in an abstract parent; the edge should
    originate at the nearest concrete declared activity on the chain.
    """
    seen = set()
    current: str | None = owner
    while current and current not in seen:
        if current in declared:
            return current
        seen.add(current)
        cls = index.classes.get(current)
        current = cls.super_name if cls is not None else None
    return None


def build_ctg(declared_activities: list[str], index: CodeIndex, sites: list[LaunchSite] | None = None) -> Ctg:
    """One edge per resolved site whose target is a declared activity.

    Sites that resolve to no declared target, or that sit in classes with no
    declared-activity ancestor, are kept in unresolved_sites so every site is
    accounted for exactly once.
    """
    declared = {to_descriptor(a) for a in declared_activities}
    if sites is None:
        sites = [resolve_intent_target(index, s) for s in find_launch_sites(index)]
    edges: dict[tuple[str, MethodRef, str], None] = {}
    unresolved: list[LaunchSite] = []
    for site in sites:
        target = site.resolved_target
        if target is None or target not in declared:
            unresolved.append(site)
            continue
        source = nearest_declared_activity(index, site.caller.owner, declared)
        if source is None:
            unresolved.append(site)
            continue
        edges.setdefault((source, site.caller, target))
    return Ctg(edges=tuple(sorted(edges)), unresolved_sites=tuple(unresolved))


def dump_ctg(ctg: Ctg) -> str:
    """Line-oriented export: edge rows, then an UNRESOLVED section."""
    lines = []
    for src, method, dst in ctg.edges:
        lines.append(f"{src}\t{method}\t{dst}")
    for site in ctg.unresolved_sites:
        target = site.resolved_target or "-"
        lines.append(f"UNRESOLVED\t{site.caller}\t{site.line_no}\t{site.api}\t{site.resolution}\t{target}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_ctg(text: str) -> Ctg:
    edges = []
    unresolved = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if parts[0] == "UNRESOLVED":
            _, caller, line_no, api, resolution, target = parts
            unresolved.append(
                LaunchSite(
                    caller=MethodRef.parse(caller),
                    line_no=int(line_no),
                    api=api,
                    resolved_target=None if target == "-" else target,
                    resolution=resolution,
                )
            )
        else:
            src, method, dst = parts
            edges.append((src, MethodRef.parse(method), dst))
    return Ctg(edges=tuple(edges), unresolved_sites=tuple(unresolved))
