from __future__ import annotations

import json
from pathlib import Path

import pytest

from actreach.package import AppPackage, ingest_package

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES = TESTS_DIR / "fixtures"
SMALI_FIXTURES = FIXTURES / "smali"
PKG_BASIC = FIXTURES / "pkg_basic"
DEMO_DIR = TESTS_DIR.parent / "demo"


@pytest.fixture(scope="session")
def smali_fixture_paths() -> list[Path]:
    return sorted(SMALI_FIXTURES.glob("*.smali"))


@pytest.fixture(scope="session")
def basic_pkg() -> AppPackage:
    return ingest_package(PKG_BASIC)


@pytest.fixture(scope="session")
def demo_pkg() -> AppPackage:
    return ingest_package(DEMO_DIR / "app")


def load_kind_annotations(fixture_path: Path) -> dict[int, str]:
    """Hand-written line->kind table committed beside a smali fixture."""
    table = {}
    annotation_path = fixture_path.parent / (fixture_path.stem + ".kinds.tsv")
    if not annotation_path.is_file():
        return table
    for raw in annotation_path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        line_no, kind = line.split("\t")
        table[int(line_no)] = kind
    return table


def write_demo_config(tmp_path: Path, seed: int = 7, out_name: str = "out") -> Path:
    """Config pointing at the bundled demo inputs with outputs under tmp."""
    out_dir = tmp_path / out_name
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {
        "package_root": str(DEMO_DIR / "app"),
        "output_dir": str(out_dir),
        "exploration_log": str(out_dir / "baseline.log"),
        "model": {"kind": "replay", "replay_path": str(DEMO_DIR / "replay.json")},
        "device": {"kind": "simulated", "scenario": str(DEMO_DIR / "scenario.tsv")},
        "max_iterations": 5,
        "tool_call_budget": 40,
        "result_size_cap": 65536,
        "rng_seed": seed,
        "explore": {"budget": 300, "cancel_prob": 0.0},
    }
    path = tmp_path / f"config-{out_name}.json"
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path
