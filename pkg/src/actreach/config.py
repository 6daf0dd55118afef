"""Pipeline configuration: one JSON file, flag overrides at the CLI.

Secrets never live in the file; the model section names an environment
variable and the key is read from there at client construction time.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

MODEL_KINDS = ("replay", "http")
DEVICE_KINDS = ("simulated", "external")


@dataclass(frozen=True)
class PipelineConfig:
    package_root: Path
    output_dir: Path
    exploration_log: Path | None
    model_kind: str
    replay_path: Path | None
    endpoint: str | None
    model_id: str | None
    api_key_env: str | None
    device_kind: str
    scenario_path: Path | None
    device_command: str | None
    max_iterations: int = 5
    tool_call_budget: int = 40
    result_size_cap: int = 64 * 1024
    rng_seed: int = 0
    explore_budget: int = 200
    cancel_prob: float = 0.0

    def api_key(self) -> str:
        if not self.api_key_env:
            return ""
        return os.environ.get(self.api_key_env, "")


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")

    base = path.parent

    def resolve(value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else (base / p)

    for key in ("package_root", "output_dir"):
        if key not in data:
            raise ConfigError(f"config missing required key {key!r}")

    model = data.get("model", {})
    if not isinstance(model, dict) or model.get("kind") not in MODEL_KINDS:
        raise ConfigError(f"config model.kind must be one of {MODEL_KINDS}")
    model_kind = model["kind"]
    if model_kind == "replay" and not model.get("replay_path"):
        raise ConfigError("replay model needs model.replay_path")
    if model_kind == "http" and not (model.get("endpoint") and model.get("model_id")):
        raise ConfigError("http model needs model.endpoint and model.model_id")

    device = data.get("device", {})
    if not isinstance(device, dict) or device.get("kind") not in DEVICE_KINDS:
        raise ConfigError(f"config device.kind must be one of {DEVICE_KINDS}")
    device_kind = device["kind"]
    if device_kind == "simulated" and not device.get("scenario"):
        raise ConfigError("simulated device needs device.scenario")
    if device_kind == "external" and not device.get("command"):
        raise ConfigError("external device needs device.command")

    max_iterations = int(data.get("max_iterations", 5))
    if not 1 <= max_iterations <= 5:
        raise ConfigError("max_iterations must be within [1, 5]")
    tool_call_budget = int(data.get("tool_call_budget", 40))
    if tool_call_budget < 1:
        raise ConfigError("tool_call_budget must be >= 1")

    explore = data.get("explore", {})
    cancel_prob = float(explore.get("cancel_prob", 0.0))
    if not 0.0 <= cancel_prob <= 1.0:
        raise ConfigError("explore.cancel_prob must be within [0, 1]")

    return PipelineConfig(
        package_root=resolve(data["package_root"]),
        output_dir=resolve(data["output_dir"]),
        exploration_log=resolve(data.get("exploration_log")),
        model_kind=model_kind,
        replay_path=resolve(model.get("replay_path")),
        endpoint=model.get("endpoint"),
        model_id=model.get("model_id"),
        api_key_env=model.get("api_key_env"),
        device_kind=device_kind,
        scenario_path=resolve(device.get("scenario")),
        device_command=device.get("command"),
        max_iterations=max_iterations,
        tool_call_budget=tool_call_budget,
        result_size_cap=int(data.get("result_size_cap", 64 * 1024)),
        rng_seed=int(data.get("rng_seed", 0)),
        explore_budget=int(explore.get("budget", 200)),
        cancel_prob=cancel_prob,
    )
