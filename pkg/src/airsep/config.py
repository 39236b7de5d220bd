"""Flat key-value run configuration covering every tunable constant.

File format: one `section.key = value` per line; `#` comments. Unknown keys
are rejected, so typos fail loudly. Environment overrides: AIRSEP_WORKERS,
AIRSEP_OUT.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .agent import SacdConfig
from .evaluation import EvalConfig
from .harness import HarnessConfig
from .mdp import RewardConfig
from .network import NetworkConfig
from .scenario import ScenarioConfig


class ConfigError(ValueError):
    pass


@dataclass
class TrainSection:
    iterations: int = 2000
    mode: str = "sync"  # sync | async
    learner_steps: int = 10_000  # async mode budget
    seed: int = 0


@dataclass
class RunConfig:
    reward: RewardConfig = field(default_factory=RewardConfig)
    agent: SacdConfig = field(default_factory=SacdConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    train: TrainSection = field(default_factory=TrainSection)
    p_comm: float = 1.0
    p_equip: float = 1.0


# Aliases let the file use the conventional symbol names for the use-case
# constants (chi, delta, ...) while the dataclasses keep readable field names.
_ALIASES = {
    "reward.lambda": ("reward", "lam"),
    "agent.gamma": ("agent", "gamma"),
    "agent.learning_rate": ("agent", "lr"),
}

_TOP_LEVEL = ("p_comm", "p_equip")


def _coerce(current, text: str):
    if current is None:
        return int(text)
    if isinstance(current, bool):
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"expected boolean, got {text!r}")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if isinstance(current, tuple):
        items = [t for t in text.replace(",", " ").split() if t]
        elem = type(current[0]) if current else float
        return tuple(elem(t) for t in items)
    return text


def apply_setting(cfg: RunConfig, key: str, value: str):
    if key in _TOP_LEVEL:
        setattr(cfg, key, float(value))
        return
    if key in _ALIASES:
        section_name, attr = _ALIASES[key]
    else:
        if "." not in key:
            raise ConfigError(f"expected section.key, got {key!r}")
        section_name, attr = key.split(".", 1)
    section = getattr(cfg, section_name, None)
    if section is None:
        raise ConfigError(f"unknown config section {section_name!r}")
    if attr not in {f.name for f in fields(section)}:
        raise ConfigError(f"unknown config key {key!r}")
    setattr(section, attr, _coerce(getattr(section, attr), value))


def load_config(path=None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            apply_setting(cfg, key, value)
    workers_env = os.environ.get("AIRSEP_WORKERS")
    if workers_env:
        cfg.harness.workers = int(workers_env)
    return cfg


def default_config_text() -> str:
    """A commented config file with every default spelled out."""
    cfg = RunConfig()
    lines = ["# airsep run configuration (defaults)"]
    for section_name in ("reward", "agent", "harness", "network", "scenario",
                         "eval", "train"):
        section = getattr(cfg, section_name)
        lines.append("")
        for f in fields(section):
            value = getattr(section, f.name)
            if isinstance(value, tuple):
                value = " ".join(str(v) for v in value)
            key = f"{section_name}.{f.name}"
            if (section_name, f.name) == ("reward", "lam"):
                key = "reward.lambda"
            lines.append(f"{key} = {value}")
    lines.append("")
    for key in _TOP_LEVEL:
        lines.append(f"{key} = {getattr(cfg, key)}")
    return "\n".join(lines) + "\n"
