"""Risk-ratio evaluation against a paired unequipped baseline, plus sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import EncoderNet, SacdAgent
from .rollout import EpisodeRunner, Policy
from .scenario import ScenarioConfig, generate_scenario, unequipped_copy

ACTION_NAMES = ("slow", "hold_speed", "fast", "descend", "hold_alt", "climb")


class EvaluationError(RuntimeError):
    pass


def risk_ratio(p_logic: float, p_baseline: float):
    """P(NMAC) with the logic over P(NMAC) without it; None if the baseline
    had no NMACs (the ratio is then not applicable)."""
    if p_logic < 0:
        raise ValueError("p_logic must be >= 0")
    if p_baseline <= 0:
        return None
    return p_logic / p_baseline


def action_distribution(action_counts) -> np.ndarray:
    """Empirical action frequencies in canonical action order."""
    counts = np.asarray(action_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EvaluationError("no logged actions")
    return counts / total


@dataclass
class EvalConfig:
    episodes: int = 20
    duration: float = 900.0
    fleet_size: int = 10
    p_comm: float = 1.0
    p_equip: float = 1.0
    surveillance: str = "perfect"
    seed: int = 0
    decision_period: int = 4
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)


@dataclass
class EvalReport:
    descriptor: str
    episodes: int
    flights_logic: int
    flights_baseline: int
    nmac_logic: int
    nmac_baseline: int
    p_nmac_logic: float
    p_nmac_baseline: float
    risk_ratio: float | None
    action_distribution: np.ndarray
    mean_flight_duration_s: float
    wall_seconds: float
    transitions_per_sec: float


def _run_arm(scenario, policy, cfg: EvalConfig, seed):
    runner = EpisodeRunner(scenario, surveillance=cfg.surveillance, seed=seed,
                           decision_period=cfg.decision_period)
    while not runner.done():
        runner.decision_epoch(policy, mode="greedy")
    return runner.stats


def evaluate(actor: EncoderNet, network, cfg: EvalConfig,
             descriptor: str = "eval") -> EvalReport:
    """Greedy policy vs. the identical scenarios with all aircraft unequipped."""
    import time as _time

    policy = Policy(actor)
    start = _time.monotonic()
    flights_l = flights_b = nmac_l = nmac_b = 0
    counts = np.zeros(6, np.int64)
    durations: list[float] = []
    steps = 0
    for ep in range(cfg.episodes):
        seed = cfg.seed + ep
        scenario = generate_scenario(network, cfg.fleet_size, cfg.duration,
                                     cfg.p_comm, cfg.p_equip, seed, cfg.scenario)
        stats_l = _run_arm(scenario, policy, cfg, seed)
        stats_b = _run_arm(unequipped_copy(scenario), None, cfg, seed)
        flights_l += stats_l.arrivals
        flights_b += stats_b.arrivals
        nmac_l += stats_l.nmac_events
        nmac_b += stats_b.nmac_events
        counts += stats_l.action_counts
        durations.extend(stats_l.flight_durations)
        steps += int(stats_l.action_counts.sum())
    if flights_l == 0 or flights_b == 0:
        raise EvaluationError("zero completed flights in an evaluation arm")
    wall = _time.monotonic() - start
    p_l = nmac_l / flights_l
    p_b = nmac_b / flights_b
    dist = (counts / counts.sum()) if counts.sum() > 0 else np.full(6, 1 / 6)
    return EvalReport(
        descriptor=descriptor, episodes=cfg.episodes,
        flights_logic=flights_l, flights_baseline=flights_b,
        nmac_logic=nmac_l, nmac_baseline=nmac_b,
        p_nmac_logic=p_l, p_nmac_baseline=p_b,
        risk_ratio=risk_ratio(p_l, p_b),
        action_distribution=dist,
        mean_flight_duration_s=float(np.mean(durations)) if durations else 0.0,
        wall_seconds=wall,
        transitions_per_sec=steps / wall if wall > 0 else 0.0)


SWEEP_AXES = ("fleet_size", "p_comm", "p_equip", "surveillance")


def sweep(actor: EncoderNet, network, axis: str, values, cfg: EvalConfig):
    """One evaluate run per axis value; seeds shared across values so the
    comparisons are paired."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; one of {SWEEP_AXES}")
    if not values:
        raise ValueError("sweep needs at least one value")
    reports = []
    for value in values:
        case = EvalConfig(**{**cfg.__dict__, axis: type(getattr(cfg, axis))(value)})
        reports.append(evaluate(actor, network, case,
                                descriptor=f"{axis}={value}"))
    return reports


# --- results table (machine-readable, consumed by `report`) ------------------

RESULTS_HEADER = ("# airsep-results v1\n"
                  "# value arm flights nmacs p_nmac risk_ratio "
                  + " ".join(f"p_{n}" for n in ACTION_NAMES) + "\n")


def _fmt_ratio(r):
    return "na" if r is None else f"{r:.6f}"


def write_results(reports: list[EvalReport], path):
    with open(path, "w") as fh:
        fh.write(RESULTS_HEADER)
        for rep in reports:
            dist = " ".join(f"{p:.6f}" for p in rep.action_distribution)
            fh.write(f"{rep.descriptor} logic {rep.flights_logic} {rep.nmac_logic} "
                     f"{rep.p_nmac_logic:.6f} {_fmt_ratio(rep.risk_ratio)} {dist}\n")
            base_dist = " ".join("0.000000" for _ in range(6))
            fh.write(f"{rep.descriptor} baseline {rep.flights_baseline} "
                     f"{rep.nmac_baseline} {rep.p_nmac_baseline:.6f} na {base_dist}\n")


def read_results(path):
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# airsep-results"):
        raise EvaluationError(f"not a results file: {path}")
    for line in lines:
        if line.startswith("#") or not line.strip():
            continue
        parts = line.split()
        rows.append({
            "value": parts[0], "arm": parts[1], "flights": int(parts[2]),
            "nmacs": int(parts[3]), "p_nmac": float(parts[4]),
            "risk_ratio": None if parts[5] == "na" else float(parts[5]),
            "action_distribution": [float(x) for x in parts[6:12]],
        })
    return rows


def render_report(rows) -> str:
    """Human-readable summary of a results table."""
    lines = [f"{'case':>24} {'arm':>9} {'flights':>8} {'nmacs':>6} "
             f"{'P(NMAC)':>9} {'risk':>8}  action distribution"]
    for row in rows:
        ratio = "n/a" if row["risk_ratio"] is None else f"{row['risk_ratio']:.3f}"
        dist = " ".join(f"{p:.2f}" for p in row["action_distribution"])
        lines.append(f"{row['value']:>24} {row['arm']:>9} {row['flights']:>8} "
                     f"{row['nmacs']:>6} {row['p_nmac']:>9.4f} {ratio:>8}  {dist}")
    return "\n".join(lines)


def load_actor(checkpoint_stem) -> EncoderNet:
    agent = SacdAgent.load(Path(checkpoint_stem))
    return agent.actor
