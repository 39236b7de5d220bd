"""Uniform FIFO replay over variable-length-intruder transitions."""

from __future__ import annotations

import threading

import numpy as np

from .agent import TransitionBatch


class BufferNotReady(RuntimeError):
    """Sampling was requested before the buffer held a full batch."""


class ReplayBuffer:
    """Thread-safe ring buffer; multi-producer push, uniform sampling.

    A transition is (s, H, a, r, s2, H2, done) with H/H2 arrays of shape
    (n_intruders, h_dim), possibly empty.
    """

    def __init__(self, capacity: int, s_dim: int, h_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.s_dim = s_dim
        self.h_dim = h_dim
        self._data: list = [None] * capacity
        self._cursor = 0
        self._size = 0
        self._total_pushed = 0
        self._lock = threading.Lock()

    def __len__(self):
        with self._lock:
            return self._size

    @property
    def total_pushed(self) -> int:
        with self._lock:
            return self._total_pushed

    def push(self, transitions):
        """Append transitions with FIFO eviction."""
        with self._lock:
            for tr in transitions:
                self._data[self._cursor] = tr
                self._cursor = (self._cursor + 1) % self.capacity
                self._size = min(self._size + 1, self.capacity)
                self._total_pushed += 1

    def contents(self):
        with self._lock:
            return [t for t in self._data[:self._size]]

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform with replacement; raises BufferNotReady while under-filled."""
        with self._lock:
            size = self._size
            if size < batch_size:
                raise BufferNotReady(f"buffer holds {size} < batch {batch_size}")
            idx = rng.integers(0, size, size=batch_size)
            picked = [self._data[i] for i in idx]
        return self._collate(picked)

    def _collate(self, picked) -> TransitionBatch:
        b = len(picked)
        m1 = max(max((len(t[1]) for t in picked), default=0), 1)
        m2 = max(max((len(t[5]) for t in picked), default=0), 1)
        s = np.zeros((b, self.s_dim), np.float32)
        h = np.zeros((b, m1, self.h_dim), np.float32)
        mask = np.zeros((b, m1), bool)
        a = np.zeros(b, np.int64)
        r = np.zeros(b, np.float32)
        s2 = np.zeros((b, self.s_dim), np.float32)
        h2 = np.zeros((b, m2, self.h_dim), np.float32)
        mask2 = np.zeros((b, m2), bool)
        done = np.zeros(b, np.float32)
        for i, (si, Hi, ai, ri, s2i, H2i, di) in enumerate(picked):
            s[i] = si
            for j, hv in enumerate(Hi):
                h[i, j] = hv
                mask[i, j] = True
            a[i] = ai
            r[i] = ri
            s2[i] = s2i
            for j, hv in enumerate(H2i):
                h2[i, j] = hv
                mask2[i, j] = True
            done[i] = di
        return TransitionBatch(s, h, mask, a, r, s2, h2, mask2, done)
