"""Asynchronous centralized-learning / decentralized-execution training.

Rollout workers step independent worlds and push per-agent transitions into a
shared replay buffer; the learner trains concurrently and periodically
publishes immutable actor snapshots back to the workers. A synchronous
single-process mode exists for reproducibility experiments and as the
throughput baseline.

One "iteration" is 64 environment (agent) steps.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import queue as queue_mod
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import SacdAgent, SacdConfig
from .mdp import INTRUDER_DIM, OWNSHIP_DIM
from .replay import BufferNotReady, ReplayBuffer
from .rollout import EpisodeRunner, Policy
from .scenario import Scenario, ScenarioConfig, generate_scenario

STEPS_PER_ITERATION = 64


@dataclass
class HarnessConfig:
    workers: int = 4
    buffer_capacity: int = 100_000
    warmup: int = 5_000
    batch_size: int = 512
    snapshot_every: int = 50          # learner steps between snapshot publications
    learner_steps_per_iteration: int = 4  # sync mode only
    surveillance: str = "perfect"
    decision_period: int = 4
    dt: float = 1.0
    seed: int = 0


@dataclass
class IterationCounter:
    env_steps: int = 0
    learner_steps: int = 0

    @property
    def transitions(self) -> int:
        return self.env_steps

    @property
    def iterations(self) -> int:
        return self.env_steps // STEPS_PER_ITERATION


class ScenarioStream:
    """Deterministic per-worker stream of training scenarios."""

    def __init__(self, network, scenario_config: ScenarioConfig, p_comm=1.0,
                 p_equip=1.0, base_seed=0):
        self.network = network
        self.config = scenario_config
        self.p_comm = p_comm
        self.p_equip = p_equip
        self.base_seed = base_seed
        self.count = 0

    def next(self) -> Scenario:
        seed = self.base_seed + self.count
        self.count += 1
        return generate_scenario(self.network, self.config.fleet_size,
                                 self.config.duration, self.p_comm,
                                 self.p_equip, seed, self.config)


def _metrics_line(record: dict) -> str:
    return " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in record.items())


class MetricsWriter:
    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._fh = open(self.path, "a") if self.path else None

    def write(self, record: dict):
        if self._fh:
            self._fh.write(_metrics_line(record) + "\n")
            self._fh.flush()

    def close(self):
        if self._fh:
            self._fh.close()


class SyncHarness:
    """Single-process lockstep trainer: deterministic given the seeds."""

    def __init__(self, agent: SacdAgent, stream: ScenarioStream,
                 config: HarnessConfig):
        self.agent = agent
        self.stream = stream
        self.config = config
        self.buffer = ReplayBuffer(config.buffer_capacity, OWNSHIP_DIM,
                                   INTRUDER_DIM)
        self.counter = IterationCounter()
        self.sample_rng = np.random.default_rng(config.seed + 101)
        self.action_rng = np.random.default_rng(config.seed + 202)
        self.policy = Policy(agent.actor)
        self._runner = None
        self._episode_seed = 0
        self._learn_anchor = None

    def _next_runner(self) -> EpisodeRunner:
        scenario = self.stream.next()
        self._episode_seed += 1
        return EpisodeRunner(scenario, surveillance=self.config.surveillance,
                             seed=self.config.seed + self._episode_seed,
                             decision_period=self.config.decision_period,
                             dt=self.config.dt)

    def run(self, iterations: int, metrics: MetricsWriter | None = None):
        metrics = metrics or MetricsWriter(None)
        if self._runner is None:
            self._runner = self._next_runner()
        # Re-anchor learner pacing per run() call so callers may change
        # learner_steps_per_iteration between phases.
        self._learn_anchor = None
        target = self.counter.env_steps + iterations * STEPS_PER_ITERATION
        while self.counter.env_steps < target:
            if self._runner.done():
                self._runner = self._next_runner()
            transitions = self._runner.decision_epoch(
                self.policy, mode="sample", rng=self.action_rng)
            if transitions:
                self.buffer.push(transitions)
                self.counter.env_steps += len(transitions)
            if len(self.buffer) >= max(self.config.warmup,
                                       self.config.batch_size):
                # Pace the learner so that learner_steps_per_iteration holds
                # over env-step progress since learning became eligible, no
                # matter how many transitions each decision epoch yields.
                if self._learn_anchor is None:
                    self._learn_anchor = (self.counter.env_steps,
                                          self.counter.learner_steps)
                anchor_env, anchor_learn = self._learn_anchor
                due = anchor_learn + ((self.counter.env_steps - anchor_env)
                                      * self.config.learner_steps_per_iteration
                                      // STEPS_PER_ITERATION)
                while self.counter.learner_steps < due:
                    batch = self.buffer.sample(self.config.batch_size,
                                               self.sample_rng)
                    info = self.agent.update(batch)
                    self.counter.learner_steps += 1
                    if self.counter.learner_steps % 50 == 0:
                        metrics.write({"step": self.counter.learner_steps,
                                       "env_steps": self.counter.env_steps,
                                       "buffer": len(self.buffer), **info})
        return self.counter

    # -- checkpointing --------------------------------------------------------

    def checkpoint(self, stem):
        stem = Path(stem)
        self.agent.save(stem)
        state = {
            "env_steps": self.counter.env_steps,
            "learner_steps": self.counter.learner_steps,
            "episode_seed": self._episode_seed,
            "stream_count": self.stream.count,
            "sample_rng": self.sample_rng.bit_generator.state,
            "action_rng": self.action_rng.bit_generator.state,
        }
        with open(stem.with_suffix(".harness.json"), "w") as fh:
            json.dump(state, fh)

    def restore(self, stem):
        stem = Path(stem)
        self.agent = SacdAgent.load(stem)
        self.policy = Policy(self.agent.actor)
        path = stem.with_suffix(".harness.json")
        if not path.exists():
            raise FileNotFoundError(f"missing harness state {path}")
        with open(path) as fh:
            state = json.load(fh)
        self.counter = IterationCounter(env_steps=state["env_steps"],
                                        learner_steps=state["learner_steps"])
        self._episode_seed = state["episode_seed"]
        self.stream.count = state["stream_count"]
        self.sample_rng.bit_generator.state = state["sample_rng"]
        self.action_rng.bit_generator.state = state["action_rng"]
        self._runner = None


# --- asynchronous mode -------------------------------------------------------


def actor_loop(worker_id, agent_config: SacdConfig, network, scenario_config,
               p_comm, p_equip, harness_config: HarnessConfig, conn, out_queue,
               stop_event):
    """Rollout worker process: stale-tolerant policy execution.

    Pulls the newest actor snapshot (non-blocking), steps its own world one
    decision interval per loop, and ships one transition per agent per
    decision step, tagged with a per-worker sequence number.
    """
    actor = SacdAgent(agent_config, seed=worker_id).actor
    policy = Policy(actor)
    rng = np.random.default_rng(10_000 + worker_id)
    stream = ScenarioStream(network, scenario_config, p_comm, p_equip,
                            base_seed=harness_config.seed + 1000 * (worker_id + 1))
    runner = None
    seq = 0
    while not stop_event.is_set():
        while conn.poll():
            msg = conn.recv()
            if msg[0] == "params":
                policy.load_params(msg[1])
            elif msg[0] == "stall":
                time.sleep(msg[1])
        try:
            if runner is None or runner.done():
                runner = EpisodeRunner(
                    stream.next(), surveillance=harness_config.surveillance,
                    seed=harness_config.seed + seq,
                    decision_period=harness_config.decision_period,
                    dt=harness_config.dt)
            transitions = runner.decision_epoch(policy, mode="sample", rng=rng)
        except Exception as exc:  # restart the episode, report the incident
            out_queue.put(("incident", worker_id, repr(exc)))
            runner = None
            continue
        if transitions:
            out_queue.put(("transitions", worker_id, seq, transitions))
            seq += 1
    conn.close()


class AsyncHarness:
    """Multi-process workers feeding a single in-process learner."""

    def __init__(self, agent: SacdAgent, network, scenario_config: ScenarioConfig,
                 config: HarnessConfig, p_comm=1.0, p_equip=1.0):
        self.agent = agent
        self.network = network
        self.scenario_config = scenario_config
        self.config = config
        self.p_comm = p_comm
        self.p_equip = p_equip
        self.buffer = ReplayBuffer(config.buffer_capacity, OWNSHIP_DIM,
                                   INTRUDER_DIM)
        self.counter = IterationCounter()
        self.sample_rng = np.random.default_rng(config.seed + 101)
        self.snapshot_version = 0
        self.incidents: list = []
        self.learner_step_times: list[float] = []
        self.push_log: dict[int, int] = {}  # worker id -> next expected seq
        self._workers: list[mp.Process] = []
        self._conns = []
        self._queue = None
        self._stop = None
        self._collector = None

    def start(self):
        ctx = mp.get_context("spawn")
        self._queue = ctx.Queue(maxsize=1024)
        self._stop = ctx.Event()
        for wid in range(self.config.workers):
            parent_conn, child_conn = ctx.Pipe()
            proc = ctx.Process(
                target=actor_loop,
                args=(wid, self.agent.config, self.network, self.scenario_config,
                      self.p_comm, self.p_equip, self.config, child_conn,
                      self._queue, self._stop),
                daemon=True)
            proc.start()
            self._workers.append(proc)
            self._conns.append(parent_conn)
        self.publish_snapshot()
        self._collector = threading.Thread(target=self._collect, daemon=True)
        self._collector.start()

    def _collect(self):
        while not self._stop.is_set():
            try:
                msg = self._queue.get(timeout=0.2)
            except queue_mod.Empty:
                continue
            if msg[0] == "incident":
                self.incidents.append(msg)
                continue
            _, wid, seq, transitions = msg
            expected = self.push_log.get(wid, 0)
            if seq != expected:
                self.incidents.append(("seq-gap", wid, expected, seq))
            self.push_log[wid] = seq + 1
            self.buffer.push(transitions)
            self.counter.env_steps += len(transitions)

    def publish_snapshot(self):
        self.snapshot_version += 1
        params = [p.copy() for p in self.agent.actor.params()]
        for conn in self._conns:
            conn.send(("params", params))

    def stall_worker(self, worker_id: int, seconds: float):
        """Test hook: make one worker sleep, exercising the asynchrony contract."""
        self._conns[worker_id].send(("stall", seconds))

    def learner_loop(self, learner_steps: int, metrics: MetricsWriter | None = None,
                     warmup_timeout: float = 300.0):
        """Run the learner for a fixed number of steps; never blocks on the
        actors once the buffer passes warm-up."""
        metrics = metrics or MetricsWriter(None)
        deadline = time.monotonic() + warmup_timeout
        warm = max(self.config.warmup, self.config.batch_size)
        while len(self.buffer) < warm:
            if time.monotonic() > deadline:
                raise TimeoutError("replay warm-up did not complete")
            time.sleep(0.05)
        for _ in range(learner_steps):
            try:
                batch = self.buffer.sample(self.config.batch_size, self.sample_rng)
            except BufferNotReady:
                time.sleep(0.01)
                continue
            info = self.agent.update(batch)
            self.counter.learner_steps += 1
            self.learner_step_times.append(time.monotonic())
            if self.counter.learner_steps % self.config.snapshot_every == 0:
                self.publish_snapshot()
            if self.counter.learner_steps % 50 == 0:
                metrics.write({"step": self.counter.learner_steps,
                               "env_steps": self.counter.env_steps,
                               "buffer": len(self.buffer),
                               "snapshot": self.snapshot_version, **info})

    def stop(self):
        if self._stop is not None:
            self._stop.set()
        if self._collector is not None:
            self._collector.join(timeout=5.0)
        for proc in self._workers:
            proc.join(timeout=5.0)
            if proc.is_alive():
                proc.terminate()
        self._workers = []

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
        return False
