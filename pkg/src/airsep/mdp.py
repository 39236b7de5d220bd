"""Observation vectors, discrete action semantics, and the reward function."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .world import (FT_TO_M, NMAC_HORIZONTAL_M, NMAC_VERTICAL_FT,
                    SENSING_RANGE_M, Aircraft, RawObservation)

N_ACTIONS = 6
N_WPT = 5

# Action order: (slow down, hold speed, speed up, descend, hold altitude, climb)
A_SLOW, A_HOLD_SPEED, A_FAST, A_DESCEND, A_HOLD_ALT, A_CLIMB = range(6)

OWNSHIP_DIM = 9 + N_ACTIONS + 2 * N_WPT    # 25
INTRUDER_DIM = 10 + N_ACTIONS + 2 * N_WPT  # 26


@dataclass
class RewardConfig:
    """Separation-reward constants; distances in meters (see d_max note).

    With delta = 1e-4 per meter the proximity penalty -chi + delta * d reaches
    exactly 0 at d_max = 1000 m, making the piecewise function continuous.
    """

    chi: float = 0.1
    delta: float = 0.0001
    epsilon: float = 0.001
    lam: float = 0.01
    omega: float = 0.001
    d_nmac_horizontal_m: float = NMAC_HORIZONTAL_M  # 500 ft
    d_nmac_vertical_ft: float = NMAC_VERTICAL_FT    # 100 ft
    d_max_m: float = 1000.0                         # 3280 ft


@dataclass
class NormConfig:
    """Feature scales; recorded alongside checkpoints."""

    distance_m: float = 1000.0
    speed_kt: float = 65.0
    vertical_fpm: float = 500.0
    accel_kt_s: float = 2.0
    altitude_ft: float = 1600.0


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def _one_hot(idx: int, n: int = N_ACTIONS) -> list[float]:
    v = [0.0] * n
    v[idx] = 1.0
    return v


def _padded_waypoints(waypoints, n=N_WPT):
    """Repeat the final waypoint when fewer than n remain."""
    if not waypoints:
        raise ValueError("need at least one waypoint")
    wpts = list(waypoints[:n])
    while len(wpts) < n:
        wpts.append(wpts[-1])
    return wpts


def build_ownship_state(obs: RawObservation, norm: NormConfig | None = None) -> np.ndarray:
    """25-dim ownship vector: kinematics, normalized clock, one-hot previous
    action, and 5 relative upcoming-waypoint offsets."""
    norm = norm or NormConfig()
    own = obs.ownship
    gs_east = own.v_kt * math.cos(own.heading)
    gs_north = own.v_kt * math.sin(own.heading)
    t_norm = obs.clock / obs.duration if obs.duration > 0 else 0.0
    features = [
        wrap_angle(own.heading) / math.pi,
        own.z / norm.altitude_ft,
        own.accel_kt_s / norm.accel_kt_s,
        0.0,  # vertical acceleration: identically zero in this dynamics model
        own.v_kt / norm.speed_kt,
        own.vz_fpm / norm.vertical_fpm,
        gs_east / norm.speed_kt,
        gs_north / norm.speed_kt,
        min(max(t_norm, 0.0), 1.0),
    ]
    features.extend(_one_hot(own.prev_action))
    for wx, wy in _padded_waypoints(own.waypoints):
        features.append((wx - own.x) / norm.distance_m)
        features.append((wy - own.y) / norm.distance_m)
    return np.array(features, dtype=np.float64)


def build_intruder_states(obs: RawObservation, norm: NormConfig | None = None) -> list[np.ndarray]:
    """One 26-dim vector per visible intruder, relative to the ownship."""
    norm = norm or NormConfig()
    own = obs.ownship
    out = []
    for intr in obs.intruders:
        dx = intr.x - own.x
        dy = intr.y - own.y
        dz_ft = intr.z - own.z
        d_o = math.sqrt(dx * dx + dy * dy + (dz_ft * FT_TO_M) ** 2)
        bearing = wrap_angle(math.atan2(dy, dx) - own.heading) if d_o > 1e-9 else 0.0
        gs_east = intr.v_kt * math.cos(intr.heading)
        gs_north = intr.v_kt * math.sin(intr.heading)
        features = [
            wrap_angle(intr.heading - own.heading) / math.pi,
            dz_ft / norm.altitude_ft,
            intr.accel_kt_s / norm.accel_kt_s,
            0.0,
            intr.v_kt / norm.speed_kt,
            intr.vz_fpm / norm.vertical_fpm,
            gs_east / norm.speed_kt,
            gs_north / norm.speed_kt,
            bearing / math.pi,
            d_o / norm.distance_m,
        ]
        features.extend(_one_hot(intr.prev_action))
        for wx, wy in _padded_waypoints(intr.waypoints):
            features.append((wx - own.x) / norm.distance_m)
            features.append((wy - own.y) / norm.distance_m)
        out.append(np.array(features, dtype=np.float64))
    return out


def apply_action(aircraft: Aircraft, action: int, lanes) -> tuple[float, float]:
    """Map an action index to a (accel kt/s, vertical speed ft/min) command.

    Climb/descend latch the adjacent lane on the aircraft; the simulator stops
    vertical motion on reaching it. Speed and hold-altitude actions cancel any
    latched lane. Maneuvers beyond the envelope or lane stack have no effect.
    """
    if not 0 <= action < N_ACTIONS:
        raise ValueError(f"invalid action index {action}")
    env = aircraft.envelope
    aircraft.prev_action = action
    if action in (A_SLOW, A_HOLD_SPEED, A_FAST):
        aircraft.target_alt = None
        accel = {A_SLOW: -env.accel_max_kt_s, A_HOLD_SPEED: 0.0,
                 A_FAST: env.accel_max_kt_s}[action]
        return accel, 0.0
    if action == A_HOLD_ALT:
        aircraft.target_alt = None
        return 0.0, 0.0
    tol = 1.0  # ft: treat the aircraft as "on" a lane within this band
    if action == A_CLIMB:
        above = [lane for lane in lanes
                 if lane > aircraft.z + tol and lane <= env.alt_max_ft]
        if not above:
            aircraft.target_alt = None
            return 0.0, 0.0
        aircraft.target_alt = min(above)
        return 0.0, env.climb_max_fpm
    below = [lane for lane in lanes
             if lane < aircraft.z - tol and lane >= env.alt_min_ft]
    if not below:
        aircraft.target_alt = None
        return 0.0, 0.0
    aircraft.target_alt = max(below)
    return 0.0, -env.climb_max_fpm


def reward(closest_distance_m: float | None, relative_altitude_ft: float,
           action: int, config: RewardConfig | None = None) -> float:
    """Separation + maneuver-penalty reward for one decision step.

    closest_distance_m is the straight-line distance to the nearest intruder
    (None when no intruder exists).
    """
    cfg = config or RewardConfig()
    if closest_distance_m is None:
        proximity = 0.0
    elif closest_distance_m < cfg.d_nmac_horizontal_m and \
            abs(relative_altitude_ft) < cfg.d_nmac_vertical_ft:
        proximity = -1.0
    elif cfg.d_nmac_horizontal_m <= closest_distance_m < cfg.d_max_m:
        proximity = -cfg.chi + cfg.delta * closest_distance_m
    else:
        proximity = 0.0
    if action in (A_HOLD_SPEED, A_HOLD_ALT):
        penalty = 0.0
    elif action in (A_SLOW, A_FAST):
        penalty = -cfg.epsilon
    else:
        penalty = -cfg.lam
    return proximity + penalty - cfg.omega


def observation_vectors(obs: RawObservation, norm: NormConfig | None = None):
    """(ownship vector, list of intruder vectors) for the agent."""
    return build_ownship_state(obs, norm), build_intruder_states(obs, norm)
