"""Point-mass multi-aircraft world: dynamics, parking, surveillance, NMAC.

Units: horizontal position in meters, altitude in feet, horizontal speed in
knots, vertical speed in feet/minute, acceleration in knots/second. Heading is
the standard math angle (radians from +x/east, counterclockwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario

KT_TO_MPS = 1852.0 / 3600.0          # 1 knot in m/s (= 1.68781 ft/s)
FT_TO_M = 0.3048
NMAC_HORIZONTAL_FT = 500.0
NMAC_VERTICAL_FT = 100.0
NMAC_HORIZONTAL_M = NMAC_HORIZONTAL_FT * FT_TO_M  # 152.4 m
SENSING_RANGE_M = 1000.0             # d_max: 3280 ft ~= 1000 m
ADSB_SIGMA_XY_M = 11.1               # 0.0001 deg lat/lon at mid-latitudes
ADSB_SIGMA_ALT_FT = 100.0
TURNAROUND_S = 90.0                  # parked time before the spot frees up

PHASE_ENROUTE = "enroute"
PHASE_LANDED = "landed"


class SimulationError(RuntimeError):
    pass


@dataclass
class Envelope:
    v_min_kt: float = 5.0
    v_max_kt: float = 65.0
    alt_min_ft: float = 400.0
    alt_max_ft: float = 1600.0
    accel_max_kt_s: float = 2.0
    climb_max_fpm: float = 500.0


# Two performance presets; the paper's aircraft models are stand-ins here,
# differing only in maneuver limits.
ENVELOPES = {
    "ec135": Envelope(accel_max_kt_s=2.0, climb_max_fpm=500.0),
    "aam": Envelope(accel_max_kt_s=1.5, climb_max_fpm=400.0),
}


@dataclass
class Aircraft:
    id: str
    route: list[tuple[float, float]]
    wpt_idx: int
    x: float
    y: float
    z: float
    heading: float
    v_kt: float
    vz_fpm: float = 0.0
    accel_kt_s: float = 0.0
    prev_action: int = 1  # maintain-speed
    envelope: Envelope = field(default_factory=Envelope)
    equipped: bool = True
    comm: bool = True
    phase: str = PHASE_ENROUTE
    target_alt: float | None = None
    cruise_kt: float = 40.0
    origin: str = ""
    dest: str = ""
    landed_at: float = 0.0

    def remaining_waypoints(self) -> list[tuple[float, float]]:
        return self.route[self.wpt_idx:]


@dataclass
class NmacEvent:
    time: float
    ownship: str
    intruder: str
    horizontal_ft: float
    vertical_ft: float


@dataclass
class OwnKinematics:
    id: str
    x: float
    y: float
    z: float
    heading: float
    v_kt: float
    vz_fpm: float
    accel_kt_s: float
    prev_action: int
    waypoints: list[tuple[float, float]]


@dataclass
class IntruderKinematics:
    id: str
    x: float
    y: float
    z: float
    heading: float
    v_kt: float
    vz_fpm: float
    accel_kt_s: float
    prev_action: int
    waypoints: list[tuple[float, float]]


@dataclass
class RawObservation:
    ownship: OwnKinematics
    intruders: list[IntruderKinematics]
    clock: float
    duration: float


class WorldState:
    """One simulated airspace; owned by exactly one thread."""

    def __init__(self, scenario: Scenario, seed: int = 0):
        self.scenario = scenario
        self.network = scenario.network
        self.clock = 0.0
        self.aircraft: dict[str, Aircraft] = {}
        self.pending = sorted(scenario.demands, key=lambda d: d.t_dep)
        self.event_log: list[dict] = []
        self.active_nmac: set[tuple[str, str]] = set()
        self.obs_rng = np.random.default_rng(seed)
        self.departures = 0
        self.arrivals = 0
        self.cancelled = 0
        self._flight_seq = 0
        # Parking: reservations made at departure, converted to occupancy at
        # arrival, released after turnaround.
        self.reserved = {vid: 0 for vid in self.network.vertiports}
        self.occupied = {vid: 0 for vid in self.network.vertiports}

    # -- bookkeeping ----------------------------------------------------------

    @property
    def airborne(self) -> int:
        return sum(1 for ac in self.aircraft.values() if ac.phase == PHASE_ENROUTE)

    def enroute(self) -> list[Aircraft]:
        return [ac for ac in self.aircraft.values() if ac.phase == PHASE_ENROUTE]

    def log(self, kind: str, **fields):
        self.event_log.append({"t": round(self.clock, 6), "kind": kind, **fields})

    def done(self) -> bool:
        return self.clock >= self.scenario.duration

    # -- launch / land --------------------------------------------------------

    def _try_launch(self):
        still_pending = []
        airborne = self.airborne
        for i, demand in enumerate(self.pending):
            if demand.t_dep > self.clock:
                # pending is sorted by departure time: nothing later is due
                still_pending.extend(self.pending[i:])
                break
            dest_cap = self.network.vertiports[demand.dest].parking
            dest_busy = self.reserved[demand.dest] + self.occupied[demand.dest]
            if airborne >= self.scenario.fleet_size or dest_busy >= dest_cap:
                still_pending.append(demand)  # retry next tick
                continue
            route = self.network.route(demand.origin, demand.dest)
            env = ENVELOPES.get(demand.actype, Envelope())
            x0, y0 = route[0]
            if len(route) < 2:
                raise SimulationError("route must have at least 2 waypoints")
            heading = math.atan2(route[1][1] - y0, route[1][0] - x0)
            ac = Aircraft(
                id=f"AC{self._flight_seq}",
                route=route, wpt_idx=1, x=x0, y=y0,
                z=min(max(demand.lane_alt + demand.alt_offset, env.alt_min_ft),
                      env.alt_max_ft),
                heading=heading,
                v_kt=min(max(demand.cruise_kt, env.v_min_kt), env.v_max_kt),
                envelope=env, equipped=demand.equip, comm=demand.comm,
                cruise_kt=demand.cruise_kt, origin=demand.origin, dest=demand.dest)
            self._flight_seq += 1
            self.aircraft[ac.id] = ac
            airborne += 1
            self.reserved[demand.dest] += 1
            self.departures += 1
            self.log("departure", ac=ac.id, origin=demand.origin, dest=demand.dest)
        self.pending = still_pending

    def _land(self, ac: Aircraft):
        ac.phase = PHASE_LANDED
        ac.landed_at = self.clock
        ac.v_kt = 0.0
        ac.vz_fpm = 0.0
        self.reserved[ac.dest] -= 1
        self.occupied[ac.dest] += 1
        self.arrivals += 1
        self.log("arrival", ac=ac.id, dest=ac.dest)

    def _release_parked(self):
        for ac_id in [a.id for a in self.aircraft.values()
                      if a.phase == PHASE_LANDED
                      and self.clock - a.landed_at >= TURNAROUND_S]:
            ac = self.aircraft.pop(ac_id)
            self.occupied[ac.dest] -= 1

    def finalize(self):
        """Cancel demands that never launched; call once at scenario end."""
        self.cancelled += len(self.pending)
        for demand in self.pending:
            self.log("cancelled", origin=demand.origin, dest=demand.dest)
        self.pending = []

    # -- dynamics -------------------------------------------------------------

    def step(self, commands: dict[str, tuple[float, float]], dt: float = 1.0):
        """Advance one physics tick; returns the events raised this tick.

        commands maps aircraft id to (horizontal acceleration kt/s, vertical
        speed ft/min). Aircraft without a command hold their current speed
        and altitude rate.
        """
        if dt <= 0:
            raise SimulationError("dt must be > 0")
        for ac_id in commands:
            if ac_id not in self.aircraft:
                raise SimulationError(f"command for unknown aircraft {ac_id!r}")
        events_before = len(self.event_log)
        self._try_launch()

        for ac in self.enroute():
            cmd = commands.get(ac.id)
            if cmd is not None:
                ac.accel_kt_s, ac.vz_fpm = cmd
            env = ac.envelope
            ac.v_kt = min(max(ac.v_kt + ac.accel_kt_s * dt, env.v_min_kt),
                          env.v_max_kt)
            dz = ac.vz_fpm * dt / 60.0
            if ac.target_alt is not None:
                # Stop vertical motion exactly at the latched lane, even
                # mid-decision-interval.
                remaining = ac.target_alt - ac.z
                if dz * remaining <= 0 or abs(dz) >= abs(remaining):
                    ac.z = ac.target_alt
                    ac.vz_fpm = 0.0
                    ac.target_alt = None
                    dz = 0.0
            ac.z = min(max(ac.z + dz, env.alt_min_ft), env.alt_max_ft)

            dist = ac.v_kt * KT_TO_MPS * dt  # meters
            while dist > 0 and ac.wpt_idx < len(ac.route):
                wx, wy = ac.route[ac.wpt_idx]
                to_wpt = math.hypot(wx - ac.x, wy - ac.y)
                if to_wpt > 1e-9:
                    ac.heading = math.atan2(wy - ac.y, wx - ac.x)
                if dist < to_wpt:
                    ac.x += dist * math.cos(ac.heading)
                    ac.y += dist * math.sin(ac.heading)
                    dist = 0.0
                else:
                    # Snap to the waypoint and turn instantly onto the next leg.
                    ac.x, ac.y = wx, wy
                    dist -= to_wpt
                    ac.wpt_idx += 1
            if ac.wpt_idx >= len(ac.route):
                self._land(ac)

        self._release_parked()
        self.clock += dt
        self.detect_nmac()
        return self.event_log[events_before:]

    # -- NMAC detection -------------------------------------------------------

    def detect_nmac(self) -> list[NmacEvent]:
        """Grid-hashed pairwise separation check with per-interval dedup."""
        enroute = self.enroute()
        cell = NMAC_HORIZONTAL_M
        grid: dict[tuple[int, int], list[Aircraft]] = {}
        for ac in enroute:
            key = (int(math.floor(ac.x / cell)), int(math.floor(ac.y / cell)))
            grid.setdefault(key, []).append(ac)
        violating: set[tuple[str, str]] = set()
        events: list[NmacEvent] = []
        for (cx, cy), bucket in grid.items():
            neighbors = []
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    neighbors.extend(grid.get((cx + dx, cy + dy), ()))
            for a in bucket:
                for b in neighbors:
                    if b.id <= a.id:
                        continue
                    horiz_m = math.hypot(a.x - b.x, a.y - b.y)
                    vert_ft = abs(a.z - b.z)
                    if horiz_m / FT_TO_M < NMAC_HORIZONTAL_FT and \
                            vert_ft < NMAC_VERTICAL_FT:
                        pair = (a.id, b.id)
                        if pair in violating:
                            continue
                        violating.add(pair)
                        if pair not in self.active_nmac:
                            ev = NmacEvent(self.clock, a.id, b.id,
                                           horiz_m / FT_TO_M, vert_ft)
                            events.append(ev)
                            self.log("nmac", ownship=a.id, intruder=b.id,
                                     horizontal_ft=round(ev.horizontal_ft, 3),
                                     vertical_ft=round(ev.vertical_ft, 3))
        self.active_nmac = violating
        return events

    # -- surveillance ---------------------------------------------------------

    def closest_intruder(self, ownship_id: str):
        """True straight-line distance (m) and signed dz (ft) to the nearest
        enroute intruder; None when alone."""
        own = self.aircraft[ownship_id]
        best = None
        for other in self.enroute():
            if other.id == ownship_id:
                continue
            d = math.sqrt((own.x - other.x) ** 2 + (own.y - other.y) ** 2 +
                          ((own.z - other.z) * FT_TO_M) ** 2)
            if best is None or d < best[0]:
                best = (d, other.z - own.z)
        return best

    def observe(self, ownship_id: str, surveillance: str = "perfect") -> RawObservation:
        """Ownship-exact observation; intruders within sensing range, filtered
        by the ownship's communication flag and optionally ADS-B perturbed."""
        if surveillance not in ("perfect", "adsb"):
            raise SimulationError(f"unknown surveillance mode {surveillance!r}")
        own = self.aircraft[ownship_id]
        if own.phase != PHASE_ENROUTE:
            raise SimulationError("observe requires an enroute ownship")
        ownk = OwnKinematics(own.id, own.x, own.y, own.z, own.heading, own.v_kt,
                             own.vz_fpm, own.accel_kt_s, own.prev_action,
                             own.remaining_waypoints())
        intruders: list[IntruderKinematics] = []
        if own.comm:
            for other in sorted(self.enroute(), key=lambda a: a.id):
                if other.id == ownship_id:
                    continue
                d = math.sqrt((own.x - other.x) ** 2 + (own.y - other.y) ** 2 +
                              ((own.z - other.z) * FT_TO_M) ** 2)
                if d > SENSING_RANGE_M:
                    continue
                x, y, z = other.x, other.y, other.z
                if surveillance == "adsb":
                    x += self.obs_rng.normal(0.0, ADSB_SIGMA_XY_M)
                    y += self.obs_rng.normal(0.0, ADSB_SIGMA_XY_M)
                    z += self.obs_rng.normal(0.0, ADSB_SIGMA_ALT_FT)
                intruders.append(IntruderKinematics(
                    other.id, x, y, z, other.heading, other.v_kt, other.vz_fpm,
                    other.accel_kt_s, other.prev_action,
                    other.remaining_waypoints()))
        return RawObservation(ownship=ownk, intruders=intruders,
                              clock=self.clock, duration=self.scenario.duration)


def brute_force_nmac_pairs(aircraft: list[Aircraft]) -> set[tuple[str, str]]:
    """All-pairs oracle for the grid-hashed detector (tests only)."""
    pairs = set()
    for i, a in enumerate(aircraft):
        for b in aircraft[i + 1:]:
            horiz_ft = math.hypot(a.x - b.x, a.y - b.y) / FT_TO_M
            if horiz_ft < NMAC_HORIZONTAL_FT and abs(a.z - b.z) < NMAC_VERTICAL_FT:
                pairs.add((min(a.id, b.id), max(a.id, b.id)))
    return pairs


def event_log_lines(world: WorldState) -> list[str]:
    """Line-delimited event log for the evaluation module."""
    lines = []
    for rec in world.event_log:
        fields = " ".join(f"{k}={v}" for k, v in rec.items() if k not in ("t", "kind"))
        lines.append(f"{rec['t']:.3f} {rec['kind']} {fields}".rstrip())
    return lines
