"""Decompiled-app ingestion: manifest parsing plus smali tree indexing.

Expects the apktool output layout: a plain-XML ``AndroidManifest.xml`` next
to one or more ``smali*`` directories. The manifest is the source of truth
for the declared activity set; smali presence is advisory.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .ctg import Ctg, build_ctg, find_launch_sites, resolve_intent_target
from .errors import EmptySmaliTree, ManifestParseError, MissingManifest
from .index import CodeIndex, build_code_index
from .names import to_descriptor
from .smali import parse_smali_file

logger = logging.getLogger(__name__)

ANDROID_NS = "http://schemas.android.com/apk/res/android"

ACTION_MAIN = "android.intent.action.MAIN"
CATEGORY_LAUNCHER = "android.intent.category.LAUNCHER"


@dataclass(frozen=True)
class ActivityPresence:
    exists: bool
    missing_smali: bool = False


@dataclass(frozen=True)
class AppPackage:
    package_name: str
    declared_activities: tuple[str, ...]
    main_activities: tuple[str, ...]
    index: CodeIndex
    ctg: Ctg

    def check_activity_exists(self, name: str) -> ActivityPresence:
        descriptor = to_descriptor(name)
        if descriptor not in self.declared_activities:
            return ActivityPresence(exists=False)
        return ActivityPresence(exists=True, missing_smali=not self.index.check_class_exists(descriptor))

    def get_activities(self) -> list[str]:
        return list(self.declared_activities)


def _attr(elem: ET.Element, name: str) -> str | None:
    value = elem.get(f"{{{ANDROID_NS}}}{name}")
    if value is None:
        value = elem.get(f"android:{name}")
    return value


def _expand_name(package_name: str, name: str) -> str:
    if name.startswith("."):
        return package_name + name
    if "." not in name:
        return f"{package_name}.{name}"
    return name


def _has_main_launcher(activity: ET.Element) -> bool:
    for intent_filter in activity.iter("intent-filter"):
        actions = {_attr(a, "name") for a in intent_filter.iter("action")}
        categories = {_attr(c, "name") for c in intent_filter.iter("category")}
        if ACTION_MAIN in actions and CATEGORY_LAUNCHER in categories:
            return True
    return False


def parse_manifest(text: str) -> tuple[str, list[str], list[str]]:
    """Extract (package_name, declared activities, main activities).

    Activity-alias entries contribute their target, deduplicated.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ManifestParseError(f"manifest is not well-formed XML: {exc}") from exc
    if root.tag != "manifest":
        raise ManifestParseError(f"manifest: unexpected root element <{root.tag}>")
    package_name = root.get("package")
    if not package_name:
        raise ManifestParseError("manifest: missing package attribute")

    application = root.find("application")
    declared: dict[str, None] = {}
    mains: dict[str, None] = {}
    if application is not None:
        for elem in application:
            if elem.tag == "activity":
                name = _attr(elem, "name")
                if not name:
                    raise ManifestParseError("manifest/application/activity: missing android:name")
                descriptor = to_descriptor(_expand_name(package_name, name))
                declared.setdefault(descriptor)
                if _has_main_launcher(elem):
                    mains.setdefault(descriptor)
            elif elem.tag == "activity-alias":
                target = _attr(elem, "targetActivity")
                if not target:
                    raise ManifestParseError("manifest/application/activity-alias: missing android:targetActivity")
                descriptor = to_descriptor(_expand_name(package_name, target))
                declared.setdefault(descriptor)
                if _has_main_launcher(elem):
                    mains.setdefault(descriptor)
    return package_name, list(declared), list(mains)


def _read_manifest(path: Path) -> str:
    data = path.read_bytes()
    head = data[:64]
    if b"\x00" in head or (head[:4] in (b"\x03\x00\x08\x00", b"\x02\x00\x0c\x00")):
        raise ManifestParseError(
            "AndroidManifest.xml is AAPT-compiled binary XML; decode the APK with apktool first"
        )
    return data.decode("utf-8")


def ingest_package(root: str | Path) -> AppPackage:
    """Parse manifest and smali tree; build the index and transition graph."""
    root = Path(root)
    manifest_path = root / "AndroidManifest.xml"
    if not manifest_path.is_file():
        raise MissingManifest(f"no AndroidManifest.xml under {root}")
    package_name, declared, mains = parse_manifest(_read_manifest(manifest_path))

    smali_dirs = sorted(p for p in root.iterdir() if p.is_dir() and p.name.startswith("smali"))
    if not smali_dirs:
        raise EmptySmaliTree(f"no smali* directory under {root}")
    classes = []
    for smali_dir in smali_dirs:
        for path in sorted(smali_dir.rglob("*.smali")):
            classes.append(parse_smali_file(path.read_text(encoding="utf-8")))
    if not classes:
        raise EmptySmaliTree(f"smali directories under {root} contain no .smali files")

    index = build_code_index(classes)
    sites = [resolve_intent_target(index, s) for s in find_launch_sites(index)]
    index = CodeIndex(
        classes=index.classes,
        callees=index.callees,
        callers=index.callers,
        launch_sites=tuple(sites),
    )
    ctg = build_ctg(declared, index, sites)
    for descriptor in declared:
        if not index.check_class_exists(descriptor):
            logger.warning("declared activity %s has no smali class", descriptor)
    return AppPackage(
        package_name=package_name,
        declared_activities=tuple(declared),
        main_activities=tuple(mains),
        index=index,
        ctg=ctg,
    )
