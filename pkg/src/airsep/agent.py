"""Discrete soft actor-critic with attention state preprocessing.

Five networks (actor, twin critics, twin targets), each owning an independent
attention encoder followed by a dense trunk. The temperature is learned by
gradient on log(alpha); the entropy target is annealed downward whenever the
windowed entropy trace flattens out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .attention import AttentionParams, encode_batch, encode_batch_backward
from .nn import AdamState, DenseNet, adam_step, softmax

N_ACTIONS = 6


@dataclass
class TransitionBatch:
    """Padded arrays for one sampled batch of transitions."""

    s: np.ndarray       # (B, s_dim)
    h: np.ndarray       # (B, M, h_dim), zero padded
    mask: np.ndarray    # (B, M) bool
    a: np.ndarray       # (B,) int
    r: np.ndarray       # (B,)
    s2: np.ndarray      # (B, s_dim)
    h2: np.ndarray      # (B, M2, h_dim)
    mask2: np.ndarray   # (B, M2) bool
    done: np.ndarray    # (B,) float 0/1

    def __len__(self):
        return self.s.shape[0]


def pack_observations(obs_list, s_dim, h_dim, dtype=np.float32):
    """Pad a list of (s, H) observations into (s, h, mask) batch arrays."""
    batch = len(obs_list)
    max_m = max((len(H) for _, H in obs_list), default=0)
    max_m = max(max_m, 1)
    s = np.zeros((batch, s_dim), dtype=dtype)
    h = np.zeros((batch, max_m, h_dim), dtype=dtype)
    mask = np.zeros((batch, max_m), dtype=bool)
    for i, (si, Hi) in enumerate(obs_list):
        s[i] = si
        for j, hij in enumerate(Hi):
            h[i, j] = hij
            mask[i, j] = True
    return s, h, mask


class EncoderNet:
    """Attention encoder + dense trunk + linear head, with manual backward."""

    def __init__(self, s_dim, h_dim, out_dim, hidden=(256, 256), k_dim=None,
                 dtype=np.float32, rng=None):
        rng = rng if rng is not None else np.random.default_rng()
        self.encoder = AttentionParams(s_dim, h_dim, k_dim=k_dim, dtype=dtype, rng=rng)
        sizes = [s_dim + self.encoder.k_dim, *hidden, out_dim]
        acts = ["relu"] * len(hidden) + ["identity"]
        self.net = DenseNet(sizes, acts, dtype=dtype, rng=rng)
        self.s_dim = s_dim
        self.h_dim = h_dim
        self.out_dim = out_dim

    def params(self):
        return self.encoder.params() + self.net.params()

    def forward(self, s, h, mask):
        concat, enc_cache = encode_batch(s, h, mask, self.encoder)
        out, net_cache = nn.forward(self.net, concat)
        return out, (enc_cache, net_cache)

    def backward(self, cache, dout):
        enc_cache, net_cache = cache
        net_grads, dconcat = nn.backward(self.net, net_cache, dout)
        dw1, dw2, _, _ = encode_batch_backward(self.encoder, enc_cache, dconcat)
        return [dw1, dw2] + net_grads

    def copy(self):
        other = object.__new__(EncoderNet)
        other.encoder = self.encoder.copy()
        other.net = self.net.copy()
        other.s_dim = self.s_dim
        other.h_dim = self.h_dim
        other.out_dim = self.out_dim
        return other

    def astype(self, dtype):
        other = object.__new__(EncoderNet)
        other.encoder = self.encoder.astype(dtype)
        other.net = self.net.astype(dtype)
        other.s_dim = self.s_dim
        other.h_dim = self.h_dim
        other.out_dim = self.out_dim
        return other

    def load_from(self, params):
        for dst, src in zip(self.params(), params):
            np.copyto(dst, np.asarray(src, dtype=dst.dtype))


@dataclass
class EntropyAnnealer:
    """Lowers the entropy-target coefficient when the entropy trace flattens.

    Every `interval` learner steps, compute the std dev of the windowed mean
    policy entropies; below `threshold`, decay the coefficient toward `floor`.
    """

    threshold: float = 0.07
    coeff: float = 0.98
    decay: float = 0.9
    floor: float = 0.1
    interval: int = 100
    window: list = field(default_factory=list)
    steps: int = 0

    def observe(self, batch_entropy: float) -> bool:
        """Record one per-batch mean entropy; returns True if coeff decayed."""
        self.steps += 1
        self.window.append(float(batch_entropy))
        if len(self.window) > self.interval:
            self.window.pop(0)
        if self.steps % self.interval != 0 or len(self.window) < self.interval:
            return False
        if float(np.std(self.window)) < self.threshold:
            self.coeff = max(self.floor, self.coeff * self.decay)
            return True
        return False

    def target_entropy(self, n_actions: int) -> float:
        return self.coeff * float(np.log(n_actions))


@dataclass
class SacdConfig:
    s_dim: int = 25
    h_dim: int = 26
    k_dim: int | None = None
    hidden: tuple = (256, 256)
    n_actions: int = N_ACTIONS
    gamma: float = 0.99
    lr: float = 5e-5
    tau: float = 0.005
    alpha_init: float = 1.0
    learn_alpha: bool = True
    entropy_threshold: float = 0.07
    entropy_coeff: float = 0.98
    entropy_decay: float = 0.9
    entropy_floor: float = 0.1
    entropy_interval: int = 100
    dtype: str = "float32"


class SacdAgent:
    """Twin-critic discrete SAC over attention-encoded observations."""

    def __init__(self, config: SacdConfig, seed=0):
        self.config = config
        self.rng = np.random.default_rng(seed)
        dtype = np.dtype(config.dtype)
        args = dict(s_dim=config.s_dim, h_dim=config.h_dim, out_dim=config.n_actions,
                    hidden=tuple(config.hidden), k_dim=config.k_dim, dtype=dtype)
        self.actor = EncoderNet(rng=self.rng, **args)
        self.q1 = EncoderNet(rng=self.rng, **args)
        self.q2 = EncoderNet(rng=self.rng, **args)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([np.log(max(config.alpha_init, 1e-300))],
                                  dtype=np.float64)
        self.opt_actor = AdamState.for_params(self.actor.params(), lr=config.lr)
        self.opt_q1 = AdamState.for_params(self.q1.params(), lr=config.lr)
        self.opt_q2 = AdamState.for_params(self.q2.params(), lr=config.lr)
        self.opt_alpha = AdamState.for_params([self.log_alpha], lr=config.lr)
        self.annealer = EntropyAnnealer(
            threshold=config.entropy_threshold, coeff=config.entropy_coeff,
            decay=config.entropy_decay, floor=config.entropy_floor,
            interval=config.entropy_interval)
        self.learner_steps = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    @property
    def target_entropy(self) -> float:
        return self.annealer.target_entropy(self.config.n_actions)

    # -- policy ---------------------------------------------------------------

    def policy(self, s, h, mask):
        logits, _ = self.actor.forward(s, h, mask)
        return softmax(logits, axis=-1)

    def act(self, s, H, mode="sample", rng=None):
        """Single-observation action selection; H is a list of intruder vectors."""
        s_b, h_b, mask_b = pack_observations([(s, H)], self.config.s_dim,
                                             self.config.h_dim,
                                             dtype=self.actor.net.dtype)
        probs = self.policy(s_b, h_b, mask_b)[0]
        if mode == "greedy":
            return int(np.argmax(probs))
        rng = rng if rng is not None else self.rng
        return int(rng.choice(len(probs), p=probs / probs.sum()))

    # -- learner updates ------------------------------------------------------

    def q_targets(self, batch: TransitionBatch):
        logits, _ = self.actor.forward(batch.s2, batch.h2, batch.mask2)
        pi = softmax(logits, axis=-1)
        log_pi = np.log(np.clip(pi, 1e-12, None))
        qt1, _ = self.q1_target.forward(batch.s2, batch.h2, batch.mask2)
        qt2, _ = self.q2_target.forward(batch.s2, batch.h2, batch.mask2)
        q_min = np.minimum(qt1, qt2)
        v = (pi * (q_min - self.alpha * log_pi)).sum(axis=1)
        return batch.r + self.config.gamma * (1.0 - batch.done) * v

    def critic_update(self, batch: TransitionBatch):
        y = self.q_targets(batch)
        losses = []
        b = len(batch)
        idx = np.arange(b)
        for net, opt in ((self.q1, self.opt_q1), (self.q2, self.opt_q2)):
            q, cache = net.forward(batch.s, batch.h, batch.mask)
            diff = q[idx, batch.a] - y
            loss = float(np.mean(diff ** 2))
            if not np.isfinite(loss):
                raise FloatingPointError("non-finite critic loss")
            dq = np.zeros_like(q)
            dq[idx, batch.a] = 2.0 * diff.astype(q.dtype) / b
            grads = net.backward(cache, dq)
            adam_step(net.params(), grads, opt)
            losses.append(loss)
        return tuple(losses)

    def actor_update(self, batch: TransitionBatch):
        """Minimize E_s[sum_a pi(a|s) (alpha log pi - min Q)]; returns (loss, entropy)."""
        q1, _ = self.q1.forward(batch.s, batch.h, batch.mask)
        q2, _ = self.q2.forward(batch.s, batch.h, batch.mask)
        q_min = np.minimum(q1, q2)
        logits, cache = self.actor.forward(batch.s, batch.h, batch.mask)
        pi = softmax(logits, axis=-1)
        log_pi = np.log(np.clip(pi, 1e-12, None))
        g = self.alpha * log_pi - q_min
        loss = float(np.mean((pi * g).sum(axis=1)))
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite actor loss")
        b = len(batch)
        # d/dlogits of sum_a pi_a g_a, with q detached: pi_j (g_j - sum_a pi_a g_a)
        inner = (pi * g).sum(axis=1, keepdims=True)
        dlogits = (pi * (g - inner)).astype(logits.dtype) / b
        grads = self.actor.backward(cache, dlogits)
        adam_step(self.actor.params(), grads, self.opt_actor)
        entropy = float(np.mean(-(pi * log_pi).sum(axis=1)))
        return loss, entropy

    def alpha_update(self, batch: TransitionBatch):
        """Gradient step on log(alpha) pulling policy entropy toward the target."""
        logits, _ = self.actor.forward(batch.s, batch.h, batch.mask)
        pi = softmax(logits, axis=-1)
        log_pi = np.log(np.clip(pi, 1e-12, None))
        entropy = float(np.mean(-(pi * log_pi).sum(axis=1)))
        target = self.target_entropy
        # L(log a) = exp(log a) * (H - target); dL/dlog a = alpha * (H - target)
        loss = self.alpha * (entropy - target)
        grad = np.array([self.alpha * (entropy - target)])
        adam_step([self.log_alpha], [grad], self.opt_alpha)
        return float(loss)

    def target_sync(self, tau=None):
        tau = self.config.tau if tau is None else tau
        if not 0.0 <= tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        for target, online in ((self.q1_target, self.q1), (self.q2_target, self.q2)):
            for pt, po in zip(target.params(), online.params()):
                pt *= (1.0 - tau)
                pt += tau * po

    def update(self, batch: TransitionBatch):
        """One full learner step: critics, actor, alpha, annealer, target sync."""
        l1, l2 = self.critic_update(batch)
        actor_loss, entropy = self.actor_update(batch)
        alpha_loss = 0.0
        if self.config.learn_alpha:
            alpha_loss = self.alpha_update(batch)
        self.annealer.observe(entropy)
        self.target_sync()
        self.learner_steps += 1
        return {
            "q1_loss": l1, "q2_loss": l2, "actor_loss": actor_loss,
            "alpha_loss": alpha_loss, "alpha": self.alpha,
            "entropy": entropy, "target_entropy": self.target_entropy,
        }

    # -- snapshots / checkpoints ---------------------------------------------

    def actor_snapshot(self):
        return [p.copy() for p in self.actor.params()]

    def named_params(self):
        out = []
        for name, net in (("actor", self.actor), ("q1", self.q1), ("q2", self.q2),
                          ("q1_target", self.q1_target), ("q2_target", self.q2_target)):
            for i, p in enumerate(net.params()):
                out.append((f"{name}.{i}", p))
        out.append(("log_alpha", self.log_alpha))
        for name, opt in (("actor", self.opt_actor), ("q1", self.opt_q1),
                          ("q2", self.opt_q2), ("alpha", self.opt_alpha)):
            for i, m in enumerate(opt.m):
                out.append((f"opt.{name}.m.{i}", m))
            for i, v in enumerate(opt.v):
                out.append((f"opt.{name}.v.{i}", v))
        return out

    def save(self, stem):
        extra = {
            "config": {**self.config.__dict__, "hidden": list(self.config.hidden)},
            "learner_steps": self.learner_steps,
            "opt_steps": {"actor": self.opt_actor.step, "q1": self.opt_q1.step,
                          "q2": self.opt_q2.step, "alpha": self.opt_alpha.step},
            "annealer": {"threshold": self.annealer.threshold,
                         "coeff": self.annealer.coeff,
                         "decay": self.annealer.decay,
                         "floor": self.annealer.floor,
                         "interval": self.annealer.interval,
                         "window": self.annealer.window,
                         "steps": self.annealer.steps},
            "rng_state": self.rng.bit_generator.state,
        }
        nn.save_params(stem, self.named_params(), extra=extra)

    @classmethod
    def load(cls, stem):
        named, manifest = nn.load_params(stem)
        extra = manifest["extra"]
        cfg_dict = dict(extra["config"])
        cfg_dict["hidden"] = tuple(cfg_dict["hidden"])
        agent = cls(SacdConfig(**cfg_dict))
        for (name, dst) in agent.named_params():
            if name not in named:
                raise nn.CheckpointError(f"checkpoint missing parameter {name}")
            np.copyto(dst, named[name].astype(dst.dtype))
        agent.learner_steps = extra["learner_steps"]
        agent.opt_actor.step = extra["opt_steps"]["actor"]
        agent.opt_q1.step = extra["opt_steps"]["q1"]
        agent.opt_q2.step = extra["opt_steps"]["q2"]
        agent.opt_alpha.step = extra["opt_steps"]["alpha"]
        ann = extra["annealer"]
        agent.annealer = EntropyAnnealer(
            threshold=ann["threshold"], coeff=ann["coeff"], decay=ann["decay"],
            floor=ann["floor"], interval=ann["interval"],
            window=list(ann["window"]), steps=ann["steps"])
        agent.rng.bit_generator.state = extra["rng_state"]
        return agent
