"""Adaptive Sequencing Rules policy.

Time is split into epochs.  An exploration epoch of arm ``i`` first plays
``i`` until its reward state equals the last state stored from the previous
exploration epoch (SB1, discarded), then plays ``4**n`` more slots (SB2)
whose samples feed the arm's estimates.  An exploitation epoch plays the arm
with the best overall sample mean for ``2 * 4**(n_I - 1)`` slots.  At each
epoch boundary an arm is explored if its SB2 sample count is below its
estimated exploration rate times ``ln t``; otherwise the player exploits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from ..markov import ArmSpec, ConfigurationError, InstanceStats
from ._common import Hook, PolicyBase

__all__ = [
    "Mode",
    "TIE_BREAKS",
    "AsrConfig",
    "AsrArmState",
    "Explore",
    "EXPLOIT",
    "d_hat",
    "exploration_thresholds",
    "select_epoch",
    "AsrPolicy",
]


class Mode(str, Enum):
    THEORETICAL = "theoretical"
    PRACTICAL = "practical"


# How to choose among several arms that satisfy the exploration condition:
# "index": lowest index; "fewest": fewest SB2 samples; "deficit": smallest
# |V_i| / threshold_i.  Remaining ties go to the lowest index.
TIE_BREAKS = ("index", "fewest", "deficit")


@dataclass(frozen=True)
class AsrConfig:
    """Tuning of the selection rule.

    ``big_i`` is only used in theoretical mode, where the exploration
    threshold is ``max(D_hat, 2 / big_i) * ln t``.  ``tie_break`` is one of
    :data:`TIE_BREAKS`.
    """

    mode: Mode
    big_l: float
    epsilon: float = 0.0
    delta: float = 0.0
    big_i: float = 0.0
    tie_break: str = "deficit"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.tie_break not in TIE_BREAKS:
            raise ConfigurationError(f"tie_break must be one of {TIE_BREAKS}")
        if not self.big_l > 0:
            raise ConfigurationError("L must be positive")
        if self.mode is Mode.THEORETICAL:
            if not (self.epsilon > 0 and self.delta > 0 and self.big_i > 0):
                raise ConfigurationError("theoretical mode needs epsilon > 0 and delta > 0")

    @classmethod
    def practical(cls, stats: InstanceStats, big_l: Optional[float] = None, tie_break: str = "deficit") -> "AsrConfig":
        return cls(Mode.PRACTICAL, big_l=stats.big_l if big_l is None else big_l, tie_break=tie_break)

    @classmethod
    def theoretical(
        cls, stats: InstanceStats, big_l: Optional[float] = None, tie_break: str = "deficit"
    ) -> "AsrConfig":
        return cls(
            Mode.THEORETICAL,
            big_l=stats.big_l if big_l is None else big_l,
            epsilon=stats.epsilon,
            delta=stats.delta,
            big_i=stats.big_i,
            tie_break=tie_break,
        )


@dataclass
class AsrArmState:
    v_count: int = 0
    w_count: int = 0
    v_sum: float = 0.0
    vw_sum: float = 0.0
    gamma_last: int = -1
    n_explore: int = 0

    @property
    def s_tilde(self) -> float:
        return self.v_sum / self.v_count

    @property
    def s_bar(self) -> float:
        return self.vw_sum / (self.v_count + self.w_count)


@dataclass(frozen=True)
class Explore:
    arm: int


EXPLOIT = "exploit"


def d_hat(cfg: AsrConfig, s_tilde: Sequence[float], i: int) -> float:
    """Estimated exploration rate of arm ``i`` (may be ``inf``).

    Theoretical: ``4L / max(delta, (max_j s_j - s_i)**2 - epsilon)``.
    Practical: ``4L / g**2`` where ``g`` is the distance from ``s_i`` to the
    best *other* arm's mean, so an unrivalled leader is explored at the rate
    needed to separate it from the runner-up; exact ties give ``inf``.
    """
    si = s_tilde[i]
    if cfg.mode is Mode.THEORETICAL:
        best = s_tilde[0]
        for s in s_tilde:
            if s > best:
                best = s
        g = best - si
        return 4.0 * cfg.big_l / max(cfg.delta, g * g - cfg.epsilon)
    other = -math.inf
    for j, s in enumerate(s_tilde):
        if j != i and s > other:
            other = s
    g = other - si if other >= si else si - other
    if g == 0.0:
        return math.inf
    return 4.0 * cfg.big_l / (g * g)


def exploration_thresholds(cfg: AsrConfig, arms: Sequence[AsrArmState], t: int) -> list[float]:
    """Right-hand side of the exploration condition for every arm at slot ``t``."""
    log_t = math.log(t)
    if log_t == 0.0:
        return [0.0] * len(arms)
    s_tilde = [a.v_sum / a.v_count for a in arms]
    floor = 2.0 / cfg.big_i if cfg.mode is Mode.THEORETICAL else 0.0
    out = []
    for i in range(len(arms)):
        rate = d_hat(cfg, s_tilde, i)
        if floor > rate:
            rate = floor
        out.append(rate * log_t)
    return out


def select_epoch(cfg: AsrConfig, arms: Sequence[AsrArmState], t: int):
    """``Explore(i)`` if some arm's SB2 count is within its threshold at slot
    ``t`` (choice among qualifying arms per ``cfg.tie_break``), else
    ``EXPLOIT``.  Never explores at ``t = 1``."""
    if t == 1:
        return EXPLOIT
    chosen, best_score = -1, math.inf
    for i, (a, thr) in enumerate(zip(arms, exploration_thresholds(cfg, arms, t))):
        if a.v_count <= thr:
            if cfg.tie_break == "index":
                return Explore(i)
            score = float(a.v_count) if cfg.tie_break == "fewest" else a.v_count / thr
            if chosen < 0 or score < best_score:
                chosen, best_score = i, score
    return EXPLOIT if chosen < 0 else Explore(chosen)


_BOUNDARY, _INIT, _SB1, _SB2, _EXPLOIT = range(5)


class AsrPolicy(PolicyBase):
    """Per-slot ASR state machine.

    The initialisation pass (one slot per arm) is exploration epoch 0 with an
    SB2 of length 1 and no SB1; the ``k``-th later exploration epoch of an
    arm has SB2 length ``4**k``.
    """

    name = "asr"

    def __init__(self, arms: Sequence[ArmSpec], cfg: AsrConfig, hook: Optional[Hook] = None):
        super().__init__(arms, hook)
        self.cfg = cfg
        self.arms = [AsrArmState() for _ in range(self.n_arms)]
        self.n_exploit = 0
        self.phase = _INIT
        self.current = 0
        self.remaining = 0

    @property
    def init_done(self) -> bool:
        return self.phase != _INIT

    @property
    def phase_name(self) -> str:
        return ("boundary", "init", "sb1", "sb2", "exploit")[self.phase]

    def _choose(self) -> int:
        if self.phase == _BOUNDARY:
            choice = select_epoch(self.cfg, self.arms, self.t)
            if choice == EXPLOIT:
                self.n_exploit += 1
                best, best_mean = 0, -math.inf
                for i, a in enumerate(self.arms):
                    m = a.vw_sum / (a.v_count + a.w_count)
                    if m > best_mean:
                        best, best_mean = i, m
                self.phase, self.current = _EXPLOIT, best
                self.remaining = 2 * 4 ** (self.n_exploit - 1)
            else:
                self.phase, self.current = _SB1, choice.arm
        return self.current

    def _absorb(self, arm: int, state: int, reward: float) -> tuple[str, str, int]:
        a = self.arms[arm]
        phase = self.phase
        if phase == _INIT:
            a.v_count += 1
            a.v_sum += reward
            a.vw_sum += reward
            a.gamma_last = state
            a.n_explore = 1
            if arm + 1 == self.n_arms:
                self.phase = _BOUNDARY
            else:
                self.current = arm + 1
            return "init", "explore", 0
        if phase == _SB1:
            if state == a.gamma_last:
                self.phase = _SB2
                self.remaining = 4**a.n_explore
            return "sb1", "explore", a.n_explore
        if phase == _SB2:
            epoch = a.n_explore
            a.v_count += 1
            a.v_sum += reward
            a.vw_sum += reward
            self.remaining -= 1
            if self.remaining == 0:
                a.gamma_last = state
                a.n_explore += 1
                self.phase = _BOUNDARY
            return "sb2", "explore", epoch
        a.w_count += 1
        a.vw_sum += reward
        self.remaining -= 1
        if self.remaining == 0:
            self.phase = _BOUNDARY
        return "exploit", "exploit", self.n_exploit
