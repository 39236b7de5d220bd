"""Decision-epoch rollout of a policy (or no policy) over one scenario.

Each equipped enroute aircraft is an agent sharing the same policy. One
decision epoch is `decision_period` physics ticks; the reward for an action
uses the minimum intruder distance observed over its interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agent import EncoderNet, pack_observations
from .mdp import (INTRUDER_DIM, OWNSHIP_DIM, NormConfig, RewardConfig,
                  apply_action, observation_vectors, reward)
from .nn import softmax
from .scenario import Scenario
from .world import PHASE_ENROUTE, WorldState


class Policy:
    """Read-only actor snapshot usable by rollout workers."""

    def __init__(self, actor: EncoderNet):
        self.actor = actor
        self.s_dim = actor.s_dim
        self.h_dim = actor.h_dim

    def act_batch(self, obs_list, mode="sample", rng=None):
        """obs_list: list of (s, H) pairs; returns an int action per entry."""
        if not obs_list:
            return []
        s, h, mask = pack_observations(obs_list, self.s_dim, self.h_dim,
                                       dtype=self.actor.net.dtype)
        logits, _ = self.actor.forward(s, h, mask)
        probs = softmax(logits, axis=-1)
        if mode == "greedy":
            return [int(i) for i in np.argmax(probs, axis=1)]
        rng = rng if rng is not None else np.random.default_rng()
        out = []
        for p in probs:
            out.append(int(rng.choice(len(p), p=p / p.sum())))
        return out

    def load_params(self, params):
        self.actor.load_from(params)


@dataclass
class PendingStep:
    s: np.ndarray
    intruders: list
    action: int
    min_distance_m: float | None = None
    dz_at_min_ft: float = 0.0


@dataclass
class EpisodeStats:
    departures: int = 0
    arrivals: int = 0
    cancelled: int = 0
    nmac_events: int = 0
    flight_durations: list = field(default_factory=list)
    action_counts: np.ndarray = field(default_factory=lambda: np.zeros(6, np.int64))


class EpisodeRunner:
    """Steps one WorldState in decision epochs, assembling transitions."""

    def __init__(self, scenario: Scenario, surveillance: str = "perfect",
                 seed: int = 0, decision_period: int = 4, dt: float = 1.0,
                 reward_config: RewardConfig | None = None,
                 norm: NormConfig | None = None):
        self.world = WorldState(scenario, seed=seed)
        self.surveillance = surveillance
        self.decision_period = decision_period
        self.dt = dt
        self.reward_config = reward_config or RewardConfig()
        self.norm = norm or NormConfig()
        self.pending: dict[str, PendingStep] = {}
        self.stats = EpisodeStats()
        self._dep_times: dict[str, float] = {}

    def done(self) -> bool:
        return self.world.done()

    def _controlled(self):
        return [ac for ac in self.world.enroute() if ac.equipped]

    def _observe_vectors(self, ac_id):
        obs = self.world.observe(ac_id, self.surveillance)
        return observation_vectors(obs, self.norm)

    def _track_distances(self):
        for ac_id, pend in self.pending.items():
            ac = self.world.aircraft.get(ac_id)
            if ac is None or ac.phase != PHASE_ENROUTE:
                continue
            closest = self.world.closest_intruder(ac_id)
            if closest is None:
                continue
            d, dz = closest
            if pend.min_distance_m is None or d < pend.min_distance_m:
                pend.min_distance_m = d
                pend.dz_at_min_ft = dz

    def _finish(self, ac_id, next_obs, done):
        pend = self.pending.pop(ac_id)
        r = reward(pend.min_distance_m, pend.dz_at_min_ft, pend.action,
                   self.reward_config)
        if next_obs is None:
            s2 = np.zeros(OWNSHIP_DIM)
            H2 = []
        else:
            s2, H2 = next_obs
        return (np.asarray(pend.s, np.float32),
                np.asarray(pend.intruders, np.float32).reshape(-1, INTRUDER_DIM),
                pend.action, float(r),
                np.asarray(s2, np.float32),
                np.asarray(H2, np.float32).reshape(-1, INTRUDER_DIM),
                float(done))

    def decision_epoch(self, policy: Policy | None = None, mode: str = "sample",
                       rng=None):
        """One decision interval; returns the transitions completed in it."""
        transitions = []
        controlled = self._controlled()
        obs_by_id = {ac.id: self._observe_vectors(ac.id) for ac in controlled}

        # Close out the previous interval for aircraft still flying.
        for ac_id in list(self.pending):
            if ac_id in obs_by_id:
                transitions.append(self._finish(ac_id, obs_by_id[ac_id], 0.0))
            elif ac_id not in self.world.aircraft or \
                    self.world.aircraft[ac_id].phase != PHASE_ENROUTE:
                transitions.append(self._finish(ac_id, None, 1.0))

        commands = {}
        if policy is not None and controlled:
            ids = [ac.id for ac in controlled]
            actions = policy.act_batch([obs_by_id[i] for i in ids], mode, rng)
            lanes = self.world.network.lanes
            for ac, action in zip(controlled, actions):
                commands[ac.id] = apply_action(ac, action, lanes)
                s, H = obs_by_id[ac.id]
                self.pending[ac.id] = PendingStep(s=s, intruders=H, action=action)
                self.stats.action_counts[action] += 1

        for _ in range(self.decision_period):
            if self.world.done():
                break
            live = {i: c for i, c in commands.items()
                    if i in self.world.aircraft}
            events = self.world.step(live, self.dt)
            self._track_distances()
            for ev in events:
                if ev["kind"] == "nmac":
                    self.stats.nmac_events += 1
                elif ev["kind"] == "departure":
                    self.stats.departures += 1
                    self._dep_times[ev["ac"]] = ev["t"]
                elif ev["kind"] == "arrival":
                    self.stats.arrivals += 1
                    dep = self._dep_times.get(ev["ac"])
                    if dep is not None:
                        self.stats.flight_durations.append(ev["t"] - dep)

        # Flush terminal transitions for aircraft that landed this interval.
        for ac_id in list(self.pending):
            ac = self.world.aircraft.get(ac_id)
            if ac is None or ac.phase != PHASE_ENROUTE:
                transitions.append(self._finish(ac_id, None, 1.0))

        if self.world.done():
            self.world.finalize()
            self.stats.cancelled = self.world.cancelled
            self.pending.clear()  # truncated, not terminal: dropped
        return transitions

    def run(self, policy: Policy | None = None, mode: str = "sample", rng=None):
        """Run the episode to completion; returns all transitions."""
        out = []
        while not self.done():
            out.extend(self.decision_epoch(policy, mode, rng))
        return out
