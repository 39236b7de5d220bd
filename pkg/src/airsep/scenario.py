"""Demand-driven scenario generation and the scenario file format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import (NETWORK_HEADER, CorridorNetwork, network_lines,
                      parse_network_lines)

SCENARIO_HEADER = "#airsep-scenario v1"

AIRCRAFT_TYPES = ("ec135", "aam")

# Initial-lane distribution skewed toward lower lanes (lower altitudes see
# more demand, which also concentrates the baseline conflicts).
LANE_WEIGHTS = (0.35, 0.25, 0.20, 0.12, 0.08)


class ScenarioError(ValueError):
    pass


@dataclass
class Demand:
    t_dep: float
    origin: str
    dest: str
    actype: str
    comm: bool
    equip: bool
    lane_alt: float   # feet, one of the network lanes
    alt_offset: float  # feet, uniform(-100, 100) initialization noise
    cruise_kt: float


@dataclass
class Scenario:
    network: CorridorNetwork
    duration: float  # seconds
    fleet_size: int
    demands: list[Demand] = field(default_factory=list)
    seed: int = 0


@dataclass
class ScenarioConfig:
    fleet_size: int = 10
    duration: float = 900.0
    p_comm: float = 1.0
    p_equip: float = 1.0
    alt_noise_ft: float = 100.0
    cruise_range_kt: tuple[float, float] = (20.0, 60.0)
    demand_rate_per_ac: float = 1.0 / 180.0  # departures per second per fleet slot


def generate_scenario(network: CorridorNetwork, fleet_size: int, duration: float,
                      p_comm: float, p_equip: float, seed: int,
                      config: ScenarioConfig | None = None) -> Scenario:
    """Poisson demand between distinct vertiport pairs; deterministic per seed."""
    if fleet_size < 1:
        raise ScenarioError("fleet_size must be >= 1")
    if not (0.0 <= p_comm <= 1.0 and 0.0 <= p_equip <= 1.0):
        raise ScenarioError("p_comm/p_equip must be probabilities")
    cfg = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    vids = sorted(network.vertiports)
    reachable = {v: network.routable_destinations(v) for v in vids}
    origins = [v for v in vids if reachable[v]]
    if not origins:
        raise ScenarioError("network has no routable vertiport pair")
    lanes = network.lanes
    lane_w = np.array(LANE_WEIGHTS[:len(lanes)], dtype=float)
    lane_w /= lane_w.sum()
    rate = cfg.demand_rate_per_ac * fleet_size

    demands: list[Demand] = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rate)
        if t >= duration:
            break
        origin = origins[rng.integers(len(origins))]
        dests = reachable[origin]
        dest = dests[rng.integers(len(dests))]
        lane = lanes[rng.choice(len(lanes), p=lane_w)]
        demands.append(Demand(
            t_dep=round(t, 3),
            origin=origin,
            dest=dest,
            actype=AIRCRAFT_TYPES[rng.integers(len(AIRCRAFT_TYPES))],
            comm=bool(rng.random() < p_comm),
            equip=bool(rng.random() < p_equip),
            lane_alt=float(lane),
            alt_offset=float(rng.uniform(-cfg.alt_noise_ft, cfg.alt_noise_ft)),
            cruise_kt=float(rng.uniform(*cfg.cruise_range_kt)),
        ))
    return Scenario(network=network, duration=duration, fleet_size=fleet_size,
                    demands=demands, seed=seed)


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as fh:
        fh.write(SCENARIO_HEADER + "\n")
        fh.write(f"meta duration {scenario.duration:g} fleet {scenario.fleet_size} "
                 f"seed {scenario.seed}\n")
        fh.write("\n".join(network_lines(scenario.network)) + "\n")
        for d in scenario.demands:
            fh.write(f"demand {d.t_dep:.3f} {d.origin} {d.dest} {d.actype} "
                     f"{int(d.comm)} {int(d.equip)} {d.lane_alt:g} "
                     f"{d.alt_offset:.3f} {d.cruise_kt:.3f}\n")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] not in (SCENARIO_HEADER,):
        raise ScenarioError(f"not a scenario file: {path}")
    duration = 900.0
    fleet = 1
    seed = 0
    net_lines = []
    demands = []
    for line in lines[1:]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "meta":
            kv = dict(zip(parts[1::2], parts[2::2]))
            duration = float(kv.get("duration", duration))
            fleet = int(kv.get("fleet", fleet))
            seed = int(kv.get("seed", seed))
        elif parts[0] == "demand":
            demands.append(Demand(
                t_dep=float(parts[1]), origin=parts[2], dest=parts[3],
                actype=parts[4], comm=bool(int(parts[5])), equip=bool(int(parts[6])),
                lane_alt=float(parts[7]), alt_offset=float(parts[8]),
                cruise_kt=float(parts[9])))
        else:
            net_lines.append(line)
    network = parse_network_lines(net_lines)
    return Scenario(network=network, duration=duration, fleet_size=fleet,
                    demands=demands, seed=seed)


def unequipped_copy(scenario: Scenario) -> Scenario:
    """The paired-baseline arm: identical demands with every aircraft unequipped."""
    demands = [Demand(**{**d.__dict__, "equip": False}) for d in scenario.demands]
    return Scenario(network=scenario.network, duration=scenario.duration,
                    fleet_size=scenario.fleet_size, demands=demands,
                    seed=scenario.seed)
