"""Class-name normalization between Java dotted form and Dalvik descriptors.

Agents and exploration logs use dotted names (``com.foo.Bar``); smali and the
manifest-derived index use descriptors (``Lcom/foo/Bar;``). Every query
boundary accepts both.
"""

from __future__ import annotations

import re

_DESCRIPTOR_RE = re.compile(r"^L[\w$/]+;$")


def is_descriptor(name: str) -> bool:
    return bool(_DESCRIPTOR_RE.match(name))


def to_descriptor(name: str) -> str:
    """Normalize a class name to descriptor form. Idempotent."""
    name = name.strip()
    if is_descriptor(name):
        return name
    return "L" + name.replace(".", "/") + ";"


def to_dotted(name: str) -> str:
    """Normalize a class name to Java dotted form. Idempotent."""
    name = name.strip()
    if is_descriptor(name):
        return name[1:-1].replace("/", ".")
    return name


def simple_name(name: str) -> str:
    """Unqualified class name, e.g. ``Lcom/foo/Bar;`` -> ``Bar``."""
    dotted = to_dotted(name)
    return dotted.rsplit(".", 1)[-1]
