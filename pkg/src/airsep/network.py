"""Synthetic corridor networks: vertiports, straight corridors, stacked lanes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

DEFAULT_LANES_FT = (400.0, 700.0, 1000.0, 1300.0, 1600.0)


class NetworkConfigError(ValueError):
    pass


@dataclass
class Vertiport:
    id: str
    x: float  # meters
    y: float  # meters
    parking: int = 4


@dataclass
class CorridorNetwork:
    vertiports: dict[str, Vertiport]
    segments: list[tuple[str, str]]  # bidirectional straight corridors
    lanes: tuple[float, ...] = DEFAULT_LANES_FT

    def __post_init__(self):
        lanes = tuple(self.lanes)
        if any(b <= a for a, b in zip(lanes, lanes[1:])):
            raise NetworkConfigError("lane altitudes must be strictly increasing")
        for a, b in self.segments:
            if a not in self.vertiports or b not in self.vertiports:
                raise NetworkConfigError(f"segment ({a}, {b}) endpoint is not a vertiport")
        for vp in self.vertiports.values():
            if vp.parking < 1:
                raise NetworkConfigError("parking spots must be >= 1")
        self.lanes = lanes

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        for vp in self.vertiports.values():
            g.add_node(vp.id)
        for a, b in self.segments:
            va, vb = self.vertiports[a], self.vertiports[b]
            g.add_edge(a, b, weight=math.hypot(va.x - vb.x, va.y - vb.y))
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.graph())

    def route(self, origin: str, dest: str) -> list[tuple[float, float]]:
        """Shortest-path waypoint polyline between two vertiports."""
        path = nx.shortest_path(self.graph(), origin, dest, weight="weight")
        return [(self.vertiports[v].x, self.vertiports[v].y) for v in path]

    def routable_destinations(self, origin: str) -> list[str]:
        """Vertiports reachable from origin along corridors (excluding itself)."""
        g = self.graph()
        return sorted(v for v in nx.node_connected_component(g, origin)
                      if v != origin)


@dataclass
class NetworkConfig:
    n_vertiports: int = 4
    extent_m: float = 10000.0
    topology: str = "grid"  # grid | ring-radial
    parking: int = 4
    lanes: tuple[float, ...] = DEFAULT_LANES_FT
    position_jitter: float = 0.05  # fraction of grid pitch


def generate_network(config: NetworkConfig, seed: int) -> CorridorNetwork:
    """Deterministic synthetic network for a given (config, seed)."""
    n = config.n_vertiports
    if n < 2:
        raise NetworkConfigError("need at least 2 vertiports")
    if config.topology not in ("grid", "ring-radial"):
        raise NetworkConfigError(f"unknown topology {config.topology!r}")
    rng = np.random.default_rng(seed)
    vertiports: dict[str, Vertiport] = {}
    segments: list[tuple[str, str]] = []

    if config.topology == "grid":
        cols = int(math.ceil(math.sqrt(n)))
        rows = int(math.ceil(n / cols))
        pitch = config.extent_m / max(cols, rows, 1)
        jitter = config.position_jitter * pitch
        coords = {}
        for i in range(n):
            r, c = divmod(i, cols)
            vid = f"V{i}"
            x = c * pitch + rng.uniform(-jitter, jitter)
            y = r * pitch + rng.uniform(-jitter, jitter)
            vertiports[vid] = Vertiport(vid, x, y, config.parking)
            coords[(r, c)] = vid
        for (r, c), vid in coords.items():
            if (r, c + 1) in coords:
                segments.append((vid, coords[(r, c + 1)]))
            if (r + 1, c) in coords:
                segments.append((vid, coords[(r + 1, c)]))
        # A lone trailing vertiport on a partial row still needs a link.
        g = nx.Graph(segments)
        g.add_nodes_from(vertiports)
        if n >= 2 and not nx.is_connected(g):
            comps = [sorted(comp) for comp in nx.connected_components(g)]
            for comp in comps[1:]:
                segments.append((comps[0][0], comp[0]))
    else:  # ring-radial: hub at center, the rest on a ring with spokes
        hub = Vertiport("HUB", 0.0, 0.0, config.parking)
        vertiports[hub.id] = hub
        radius = config.extent_m / 2.0
        ring_ids = []
        for i in range(n - 1):
            theta = 2.0 * math.pi * i / (n - 1)
            rr = radius * (1.0 + rng.uniform(-config.position_jitter,
                                             config.position_jitter))
            vid = f"R{i}"
            vertiports[vid] = Vertiport(
                vid, rr * math.cos(theta), rr * math.sin(theta), config.parking)
            ring_ids.append(vid)
        for i, vid in enumerate(ring_ids):
            segments.append((vid, hub.id))
            if len(ring_ids) > 2:
                segments.append((vid, ring_ids[(i + 1) % len(ring_ids)]))
        if len(ring_ids) == 2:
            segments.append((ring_ids[0], ring_ids[1]))

    return CorridorNetwork(vertiports, segments, tuple(config.lanes))


def crossing_network(arm_m: float = 3000.0, parking: int = 4,
                     lanes=DEFAULT_LANES_FT) -> CorridorNetwork:
    """Two perpendicular corridors crossing at a shared midpoint junction.

    Four vertiports (N, S, E, W) with routes N-S and E-W through the center;
    the desk-scale training scenario uses this layout.
    """
    half = arm_m / 2.0
    vps = {
        "N": Vertiport("N", 0.0, half, parking),
        "S": Vertiport("S", 0.0, -half, parking),
        "E": Vertiport("E", half, 0.0, parking),
        "W": Vertiport("W", -half, 0.0, parking),
    }
    # The corridors cross mid-air at the origin; there is no vertiport there,
    # so all traffic is N<->S or E<->W.
    segments = [("N", "S"), ("E", "W")]
    return CorridorNetwork(vps, segments, tuple(lanes))


# --- text serialization ------------------------------------------------------

NETWORK_HEADER = "#airsep-network v1"


def network_lines(net: CorridorNetwork) -> list[str]:
    lines = ["lanes " + " ".join(f"{a:g}" for a in net.lanes)]
    for vid in sorted(net.vertiports):
        vp = net.vertiports[vid]
        lines.append(f"vertiport {vp.id} {vp.x:.6f} {vp.y:.6f} {vp.parking}")
    for a, b in net.segments:
        lines.append(f"segment {a} {b}")
    return lines


def save_network(net: CorridorNetwork, path):
    with open(path, "w") as fh:
        fh.write(NETWORK_HEADER + "\n")
        fh.write("\n".join(network_lines(net)) + "\n")


def parse_network_lines(lines) -> CorridorNetwork:
    lanes = DEFAULT_LANES_FT
    vertiports: dict[str, Vertiport] = {}
    segments: list[tuple[str, str]] = []
    for line in lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "lanes":
            lanes = tuple(float(x) for x in parts[1:])
        elif parts[0] == "vertiport":
            vertiports[parts[1]] = Vertiport(parts[1], float(parts[2]),
                                             float(parts[3]), int(parts[4]))
        elif parts[0] == "segment":
            segments.append((parts[1], parts[2]))
        else:
            raise NetworkConfigError(f"unknown network record {parts[0]!r}")
    return CorridorNetwork(vertiports, segments, lanes)


def load_network(path) -> CorridorNetwork:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != NETWORK_HEADER:
        raise NetworkConfigError(f"not a network file: {path}")
    return parse_network_lines(lines[1:])
