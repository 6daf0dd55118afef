"""Line-level smali (Dalvik assembly) parser.

Parses one apktool-emitted ``.smali`` file into a structured class model.
Only the instruction families needed for call-edge extraction and intent
resolution are decoded; every other line is retained verbatim with kind
``OTHER`` so re-emission is byte-faithful.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import ParseError
from .names import to_descriptor


class Kind(enum.Enum):
    INVOKE = "Invoke"
    MOVE_RESULT = "MoveResult"
    CONST = "Const"
    BRANCH = "Branch"
    RETURN = "Return"
    NEW_INSTANCE = "NewInstance"
    LABEL = "Label"
    OTHER = "Other"


@dataclass(frozen=True, order=True)
class MethodRef:
    """Reference to a method that may or may not be defined in the index."""

    owner: str
    signature: str

    def __str__(self) -> str:
        return f"{self.owner}->{self.signature}"

    @classmethod
    def parse(cls, text: str) -> "MethodRef":
        owner, sep, sig = text.partition("->")
        if not sep or not owner or not sig:
            raise ParseError(f"not a method reference: {text!r}")
        return cls(to_descriptor(owner), sig)


@dataclass(frozen=True)
class Instruction:
    line_no: int
    kind: Kind
    operands: dict
    raw_text: str


@dataclass(frozen=True)
class SmaliMethod:
    owner: str
    signature: str
    access_flags: frozenset[str]
    instructions: tuple[Instruction, ...]
    raw_header: str
    raw_footer: str

    @property
    def name(self) -> str:
        return self.signature.split("(", 1)[0]

    @property
    def ref(self) -> MethodRef:
        return MethodRef(self.owner, self.signature)

    def text(self) -> str:
        """Byte-faithful body between .method and .end method inclusive."""
        lines = [self.raw_header]
        lines.extend(ins.raw_text for ins in self.instructions)
        lines.append(self.raw_footer)
        return "\n".join(lines)


@dataclass(frozen=True)
class SmaliClass:
    name: str
    super_name: str
    source_file: str | None
    access_flags: frozenset[str]
    methods: tuple[SmaliMethod, ...]
    # Interleaving of raw non-method lines (str) and method slots (int index
    # into `methods`), preserving original file order for emission.
    layout: tuple = field(default=(), repr=False)


_CLASS_DIRECTIVE_RE = re.compile(r"^\.class\s+(.*)$")
_SUPER_RE = re.compile(r"^\.super\s+(L[\w$/]+;)\s*$")
_SOURCE_RE = re.compile(r'^\.source\s+"(.*)"\s*$')
_METHOD_RE = re.compile(r"^\.method\s+(?:((?:[\w-]+\s+)*)\s*)?([^\s(]+)\((.*?)\)(\S+)\s*$")
_END_METHOD_RE = re.compile(r"^\.end method\s*$")

# invoke-polymorphic and invoke-custom carry trailing proto / call-site
# clauses; they stay unmodeled (OTHER) rather than risk a mangled ref.
_INVOKE_RE = re.compile(
    r"^(invoke-(?:virtual|super|direct|static|interface)(?:/range)?)\s+"
    r"\{(.*?)\},\s*(\S+?)->([^\s(]+)\((.*?)\)(\S+)$"
)
_MOVE_RESULT_RE = re.compile(r"^(move-result(?:-wide|-object)?)\s+([vp]\d+)$")
_CONST_STRING_RE = re.compile(r'^(const-string(?:/jumbo)?)\s+([vp]\d+),\s*"(.*)"$')
_CONST_CLASS_RE = re.compile(r"^(const-class)\s+([vp]\d+),\s*(\[*L[\w$/]+;)$")
_NEW_INSTANCE_RE = re.compile(r"^(new-instance)\s+([vp]\d+),\s*(\[*L[\w$/]+;)$")
_IF_RE = re.compile(r"^(if-(?:eq|ne|lt|ge|gt|le)z?)\s+([vp]\d+)(?:,\s*([vp]\d+))?,\s*(:\w+)$")
_GOTO_RE = re.compile(r"^(goto(?:/16|/32)?)\s+(:\w+)$")
_RETURN_RE = re.compile(r"^(return(?:-void|-object|-wide)?)(?:\s+([vp]\d+))?$")
_LABEL_RE = re.compile(r"^(:\w+)$")
_RANGE_RE = re.compile(r"^([vp])(\d+)\s*\.\.\s*[vp](\d+)$")


def _split_registers(text: str) -> tuple[str, ...]:
    text = text.strip()
    if not text:
        return ()
    m = _RANGE_RE.match(text)
    if m:
        prefix, lo, hi = m.group(1), int(m.group(2)), int(m.group(3))
        return tuple(f"{prefix}{i}" for i in range(lo, hi + 1))
    return tuple(part.strip() for part in text.split(","))


def classify_line(raw: str, line_no: int) -> Instruction:
    """Classify one method-body line. Never raises; unknown lines are OTHER."""
    stripped = raw.strip()
    m = _INVOKE_RE.match(stripped)
    if m:
        opcode, regs, owner, name, params, ret = m.groups()
        ref = MethodRef(owner, f"{name}({params}){ret}")
        return Instruction(
            line_no,
            Kind.INVOKE,
            {"opcode": opcode, "registers": _split_registers(regs), "method": ref},
            raw,
        )
    m = _MOVE_RESULT_RE.match(stripped)
    if m:
        return Instruction(line_no, Kind.MOVE_RESULT, {"opcode": m.group(1), "register": m.group(2)}, raw)
    m = _CONST_STRING_RE.match(stripped)
    if m:
        return Instruction(
            line_no,
            Kind.CONST,
            {"opcode": m.group(1), "register": m.group(2), "string": m.group(3)},
            raw,
        )
    m = _CONST_CLASS_RE.match(stripped)
    if m:
        return Instruction(
            line_no,
            Kind.CONST,
            {"opcode": m.group(1), "register": m.group(2), "class": m.group(3)},
            raw,
        )
    m = _NEW_INSTANCE_RE.match(stripped)
    if m:
        return Instruction(
            line_no,
            Kind.NEW_INSTANCE,
            {"opcode": m.group(1), "register": m.group(2), "class": m.group(3)},
            raw,
        )
    m = _IF_RE.match(stripped)
    if m:
        regs = tuple(r for r in (m.group(2), m.group(3)) if r)
        return Instruction(
            line_no, Kind.BRANCH, {"opcode": m.group(1), "registers": regs, "label": m.group(4)}, raw
        )
    m = _GOTO_RE.match(stripped)
    if m:
        return Instruction(line_no, Kind.BRANCH, {"opcode": m.group(1), "registers": (), "label": m.group(2)}, raw)
    m = _RETURN_RE.match(stripped)
    if m:
        regs = (m.group(2),) if m.group(2) else ()
        return Instruction(line_no, Kind.RETURN, {"opcode": m.group(1), "registers": regs}, raw)
    m = _LABEL_RE.match(stripped)
    if m:
        return Instruction(line_no, Kind.LABEL, {"label": m.group(1)}, raw)
    return Instruction(line_no, Kind.OTHER, {}, raw)


def parse_smali_file(text: str) -> SmaliClass:
    """Parse one complete smali class file (apktool output dialect).

    Unrecognized instruction lines become kind OTHER with raw text preserved,
    never dropped. Raises ParseError (with line number) only for malformed or
    unbalanced ``.class`` / ``.method`` / ``.end method`` directives.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    class_name: str | None = None
    super_name: str | None = None
    source_file: str | None = None
    class_flags: frozenset[str] = frozenset()
    methods: list[SmaliMethod] = []
    layout: list = []

    in_method = False
    m_header = ""
    m_header_no = 0
    m_flags: frozenset[str] = frozenset()
    m_sig = ""
    m_body: list[Instruction] = []
    seen_sigs: set[str] = set()

    for line_no, raw in enumerate(lines, start=1):
        stripped = raw.strip()

        if stripped.startswith(".method"):
            if in_method:
                raise ParseError("nested .method directive", line_no)
            if class_name is None:
                raise ParseError(".method before .class directive", line_no)
            m = _METHOD_RE.match(stripped)
            if not m:
                raise ParseError(f"malformed .method directive: {stripped!r}", line_no)
            flags_text, name, params, ret = m.groups()
            in_method = True
            m_header = raw
            m_header_no = line_no
            m_flags = frozenset((flags_text or "").split())
            m_sig = f"{name}({params}){ret}"
            m_body = []
            continue

        if stripped.startswith(".end method"):
            if not _END_METHOD_RE.match(stripped):
                raise ParseError(f"malformed .end method directive: {stripped!r}", line_no)
            if not in_method:
                raise ParseError(".end method without open .method", line_no)
            if m_sig in seen_sigs:
                raise ParseError(f"duplicate method signature {m_sig!r}", m_header_no)
            seen_sigs.add(m_sig)
            method = SmaliMethod(
                owner=class_name,  # type: ignore[arg-type]
                signature=m_sig,
                access_flags=m_flags,
                instructions=tuple(m_body),
                raw_header=m_header,
                raw_footer=raw,
            )
            _check_branch_labels(method)
            layout.append(len(methods))
            methods.append(method)
            in_method = False
            continue

        if in_method:
            m_body.append(classify_line(raw, line_no))
            continue

        if stripped.startswith(".class"):
            if class_name is not None:
                raise ParseError("duplicate .class directive", line_no)
            m = _CLASS_DIRECTIVE_RE.match(stripped)
            if not m:
                raise ParseError(f"malformed .class directive: {stripped!r}", line_no)
            tokens = m.group(1).split()
            if not tokens or not re.match(r"^L[\w$/]+;$", tokens[-1]):
                raise ParseError(f"malformed .class directive: {stripped!r}", line_no)
            class_name = tokens[-1]
            class_flags = frozenset(tokens[:-1])
            layout.append(raw)
            continue

        if stripped.startswith(".super"):
            m = _SUPER_RE.match(stripped)
            if not m:
                raise ParseError(f"malformed .super directive: {stripped!r}", line_no)
            super_name = m.group(1)
            layout.append(raw)
            continue

        if stripped.startswith(".source"):
            m = _SOURCE_RE.match(stripped)
            if m:
                source_file = m.group(1)
            layout.append(raw)
            continue

        # Fields, annotations, comments, blank lines: retained, not modeled.
        layout.append(raw)

    if in_method:
        raise ParseError("unterminated .method block", m_header_no)
    if class_name is None:
        raise ParseError("missing .class directive")

    return SmaliClass(
        name=class_name,
        super_name=super_name or "Ljava/lang/Object;",
        source_file=source_file,
        access_flags=class_flags,
        methods=tuple(methods),
        layout=tuple(layout),
    )


def _check_branch_labels(method: SmaliMethod) -> None:
    defined = {ins.operands["label"] for ins in method.instructions if ins.kind is Kind.LABEL}
    for ins in method.instructions:
        if ins.kind is Kind.BRANCH and ins.operands["label"] not in defined:
            raise ParseError(
                f"branch target {ins.operands['label']} not defined in {method.owner}->{method.signature}",
                ins.line_no,
            )


def emit(cls: SmaliClass) -> str:
    """Re-emit a parsed class; preserves every raw line in original order."""
    lines = []
    for entry in cls.layout:
        if isinstance(entry, int):
            lines.append(cls.methods[entry].text())
        else:
            lines.append(entry)
    return "\n".join(lines) + "\n"
