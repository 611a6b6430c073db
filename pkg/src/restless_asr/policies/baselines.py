"""Comparator policies: DSEE, RCA, the best-arm oracle and uniform random."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..markov import ArmSpec, ConfigurationError
from ._common import Hook, PolicyBase

__all__ = ["DseePolicy", "RcaPolicy", "OraclePolicy", "RandomPolicy", "dsee_rate"]


def dsee_rate(big_l: float, delta: float, scale: float = 1.0) -> float:
    """Per-arm exploration rate ``scale * 4L / delta`` shared by all arms."""
    if not delta > 0:
        raise ConfigurationError("DSEE needs delta > 0")
    return scale * 4.0 * big_l / delta


class DseePolicy(PolicyBase):
    """Deterministic sequencing of exploration and exploitation.

    At an epoch boundary at slot ``t`` the policy explores while the total
    exploration slot count is at most ``rate * N * ln t``.  Exploration epoch
    ``n`` (0-based) plays arms ``0..N-1`` in turn for ``4**n`` slots each;
    exploitation epoch ``n_I`` plays the best exploration-mean arm for
    ``2 * 4**(n_I - 1)`` slots.
    """

    name = "dsee"

    def __init__(self, arms: Sequence[ArmSpec], rate: float, hook: Optional[Hook] = None):
        super().__init__(arms, hook)
        if not rate > 0:
            raise ConfigurationError("DSEE exploration rate must be positive")
        self.rate = rate
        self.exploration_slots = 0
        self.n_explore = 0
        self.n_exploit = 0
        self.counts = [0] * self.n_arms
        self.sums = [0.0] * self.n_arms
        self.exploring = False
        self.in_epoch = False
        self.current = 0
        self.remaining = 0
        self.block = 0

    @property
    def sample_means(self) -> list[float]:
        return [s / c if c else math.nan for s, c in zip(self.sums, self.counts)]

    def _choose(self) -> int:
        if not self.in_epoch:
            self.in_epoch = True
            if self.exploration_slots <= self.rate * self.n_arms * math.log(self.t):
                self.exploring = True
                self.block = 4**self.n_explore
                self.current, self.remaining = 0, self.block
            else:
                self.exploring = False
                self.n_exploit += 1
                best, best_mean = 0, -math.inf
                for i in range(self.n_arms):
                    m = self.sums[i] / self.counts[i]
                    if m > best_mean:
                        best, best_mean = i, m
                self.current, self.remaining = best, 2 * 4 ** (self.n_exploit - 1)
        return self.current

    def _absorb(self, arm: int, state: int, reward: float) -> tuple[str, str, int]:
        self.remaining -= 1
        if self.exploring:
            epoch = self.n_explore
            self.counts[arm] += 1
            self.sums[arm] += reward
            self.exploration_slots += 1
            if self.remaining == 0:
                if arm + 1 < self.n_arms:
                    self.current, self.remaining = arm + 1, self.block
                else:
                    self.n_explore += 1
                    self.in_epoch = False
            return "explore", "explore", epoch
        if self.remaining == 0:
            self.in_epoch = False
        return "exploit", "exploit", self.n_exploit


_BOUNDARY, _SB1, _SB2 = range(3)


class RcaPolicy(PolicyBase):
    """Regenerative cycle algorithm with a UCB index.

    At a block boundary the arm maximising
    ``mean_i + sqrt(L * ln t / T_i)`` is chosen (unsampled arms first, lowest
    index on ties).  The block plays the arm until its anchor state (the first
    state ever observed on it) appears (SB1), then records samples from that
    anchor observation until the anchor appears again; the closing anchor
    slot is played but not recorded.  Statistics only change when a block
    completes.
    """

    name = "rca"

    def __init__(self, arms: Sequence[ArmSpec], big_l: float, hook: Optional[Hook] = None):
        super().__init__(arms, hook)
        if not big_l > 0:
            raise ConfigurationError("L must be positive")
        self.big_l = big_l
        self.counts = [0] * self.n_arms
        self.sums = [0.0] * self.n_arms
        self.cycles = [0] * self.n_arms
        self.anchor = [-1] * self.n_arms
        self.phase = _BOUNDARY
        self.current = 0
        self._cyc_count = 0
        self._cyc_sum = 0.0

    def index(self, i: int, t: int) -> float:
        if self.counts[i] == 0:
            return math.inf
        return self.sums[i] / self.counts[i] + math.sqrt(self.big_l * math.log(t) / self.counts[i])

    def _choose(self) -> int:
        if self.phase == _BOUNDARY:
            best, best_idx = 0, -math.inf
            for i in range(self.n_arms):
                v = self.index(i, self.t)
                if v > best_idx:
                    best, best_idx = i, v
            self.current = best
            self.phase = _SB1
            self._cyc_count, self._cyc_sum = 0, 0.0
        return self.current

    def _absorb(self, arm: int, state: int, reward: float) -> tuple[str, str, int]:
        epoch = self.cycles[arm]
        if self.anchor[arm] < 0:
            self.anchor[arm] = state
        if self.phase == _SB1:
            if state == self.anchor[arm]:
                self.phase = _SB2
                self._cyc_count, self._cyc_sum = 1, reward
            return "sb1", "explore", epoch
        if state == self.anchor[arm]:
            self.counts[arm] += self._cyc_count
            self.sums[arm] += self._cyc_sum
            self.cycles[arm] += 1
            self.phase = _BOUNDARY
            return "close", "explore", epoch
        self._cyc_count += 1
        self._cyc_sum += reward
        return "sb2", "explore", epoch


class OraclePolicy(PolicyBase):
    """Always plays the arm with the largest stationary mean."""

    name = "oracle"

    def __init__(self, arms: Sequence[ArmSpec], best_arm: int, hook: Optional[Hook] = None):
        super().__init__(arms, hook)
        self.best_arm = best_arm

    def _choose(self) -> int:
        return self.best_arm

    def _absorb(self, arm, state, reward):
        return "play", "exploit", 0


class RandomPolicy(PolicyBase):
    """Uniform arm choice, ``floor(u * N)`` from its own generator."""

    name = "random"

    def __init__(self, arms: Sequence[ArmSpec], rng: np.random.Generator, hook: Optional[Hook] = None):
        super().__init__(arms, hook)
        self.rng = rng

    def _choose(self) -> int:
        return int(self.rng.random() * self.n_arms)

    def _absorb(self, arm, state, reward):
        return "play", "explore", 0
