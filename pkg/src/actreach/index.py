"""Whole-program index over parsed smali classes.

Answers the method-body, callee, and caller queries backing the tool server.
Immutable after construction; safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DuplicateClass
from .names import to_descriptor
from .smali import Instruction, Kind, MethodRef, SmaliClass, SmaliMethod


@dataclass(frozen=True)
class CodeIndex:
    classes: dict[str, SmaliClass]
    callees: dict[MethodRef, tuple[MethodRef, ...]]
    callers: dict[MethodRef, tuple[MethodRef, ...]]
    launch_sites: tuple = field(default=())

    def check_class_exists(self, name: str) -> bool:
        return to_descriptor(name) in self.classes

    def get_methods_inside_class(self, name: str) -> list[str] | None:
        """Source-order signatures, or None when the class is unknown.

        Absence is data, not failure: agents probe speculatively.
        """
        cls = self.classes.get(to_descriptor(name))
        if cls is None:
            return None
        return [m.signature for m in cls.methods]

    def get_method_body(self, class_name: str, method_sig: str) -> str | None:
        """Byte-faithful text between .method and .end method inclusive.

        A bare method name (no parameter list) matches every overload; their
        bodies are returned joined by a blank line.
        """
        matches = self._resolve(class_name, method_sig)
        if not matches:
            return None
        return "\n\n".join(m.text() for m in matches)

    def get_methods_invoked(self, class_name: str, method_sig: str) -> list[MethodRef] | None:
        """Callees of a method, deduplicated in first-occurrence order."""
        matches = self._resolve(class_name, method_sig)
        if not matches:
            return None
        seen: dict[MethodRef, None] = {}
        for m in matches:
            for callee in self.callees.get(m.ref, ()):
                seen.setdefault(callee)
        return list(seen)

    def get_caller_methods(self, class_name: str, method_sig: str) -> list[MethodRef]:
        """In-index methods whose body invokes the target; sorted by owner
        then signature. Empty for never-called or out-of-index targets."""
        owner = to_descriptor(class_name)
        found: set[MethodRef] = set()
        if "(" in method_sig:
            found.update(self.callers.get(MethodRef(owner, method_sig), ()))
        else:
            for ref, ups in self.callers.items():
                if ref.owner == owner and ref.signature.split("(", 1)[0] == method_sig:
                    found.update(ups)
        return sorted(found)

    def methods(self) -> list[SmaliMethod]:
        out = []
        for name in self.classes:
            out.extend(self.classes[name].methods)
        return out

    def method_refs(self) -> frozenset[MethodRef]:
        return frozenset(m.ref for m in self.methods())

    def _resolve(self, class_name: str, method_sig: str) -> list[SmaliMethod]:
        cls = self.classes.get(to_descriptor(class_name))
        if cls is None:
            return []
        if "(" in method_sig:
            return [m for m in cls.methods if m.signature == method_sig]
        return [m for m in cls.methods if m.name == method_sig]


def iter_invokes(method: SmaliMethod) -> list[Instruction]:
    return [ins for ins in method.instructions if ins.kind is Kind.INVOKE]


def build_code_index(classes: list[SmaliClass]) -> CodeIndex:
    """Build callee and caller maps from every Invoke instruction.

    Callee lists keep every invocation in order of appearance; caller sets
    are the exact inverse restricted to in-index targets. Input order does
    not matter: classes are indexed sorted by descriptor.
    """
    by_name: dict[str, SmaliClass] = {}
    for cls in sorted(classes, key=lambda c: c.name):
        if cls.name in by_name:
            raise DuplicateClass(cls.name)
        by_name[cls.name] = cls

    in_index: set[MethodRef] = set()
    for cls in by_name.values():
        for method in cls.methods:
            in_index.add(method.ref)

    callees: dict[MethodRef, tuple[MethodRef, ...]] = {}
    caller_sets: dict[MethodRef, set[MethodRef]] = {}
    for cls in by_name.values():
        for method in cls.methods:
            outgoing = tuple(ins.operands["method"] for ins in iter_invokes(method))
            callees[method.ref] = outgoing
            for target in outgoing:
                if target in in_index:
                    caller_sets.setdefault(target, set()).add(method.ref)

    callers = {ref: tuple(sorted(ups)) for ref, ups in sorted(caller_sets.items())}
    return CodeIndex(classes=by_name, callees=callees, callers=callers)
