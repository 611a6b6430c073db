"""Finite-state Markov reward chains and the statistics derived from them.

Every arm of the bandit is a reversible, irreducible, aperiodic chain whose
states *are* reward values.  This module validates such chains, samples from
them and computes the per-arm (:class:`ChainStats`) and cross-arm
(:class:`InstanceStats`) constants used by the policies and the regret bound.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "ArmSpec",
    "ChainStats",
    "InstanceStats",
    "ChainError",
    "ValidationError",
    "StructureError",
    "ReversibilityError",
    "ConfigurationError",
    "two_state_arm",
    "stationary_distribution",
    "spectral_gap",
    "mean_hitting_times",
    "sample_next",
    "chain_stats",
    "instance_stats",
    "load_arms",
    "dump_arms",
]

STOCHASTIC_TOL = 1e-12
BALANCE_TOL = 1e-10


class ChainError(ValueError):
    """Base class for invalid chain or instance input."""


class ValidationError(ChainError):
    """Malformed transition matrix or reward vector."""


class StructureError(ChainError):
    """Chain is reducible or periodic."""


class ReversibilityError(ChainError):
    """Chain violates detailed balance."""


class ConfigurationError(ChainError):
    """Invalid tuning parameters (epsilon, delta, arm count...)."""


@dataclass(frozen=True, eq=False)
class ArmSpec:
    """One arm: reward value of each state plus the transition matrix.

    Construction validates the matrix (row-stochastic, irreducible, aperiodic,
    reversible)
    and the rewards (strictly positive, pairwise distinct so that an observed
    reward identifies the state).
    """

    rewards: np.ndarray
    transition: np.ndarray

    def __post_init__(self) -> None:
        rewards = np.array(self.rewards, dtype=float).reshape(-1)
        P = np.array(self.transition, dtype=float)
        n = rewards.size
        if n == 0:
            raise ValidationError("arm has no states")
        if P.ndim != 2 or P.shape != (n, n):
            raise ValidationError(
                f"transition matrix shape {P.shape} does not match {n} reward states"
            )
        if not np.all(np.isfinite(P)):
            raise ValidationError("transition matrix has non-finite entries")
        bad = np.argwhere((P < 0.0) | (P > 1.0))
        if bad.size:
            r, c = bad[0]
            raise ValidationError(f"entry ({r}, {c}) = {P[r, c]!r} outside [0, 1]")
        sums = P.sum(axis=1)
        for row, s in enumerate(sums):
            if abs(s - 1.0) > STOCHASTIC_TOL:
                raise ValidationError(f"row {row} sums to {s!r}, not 1")
        if np.any(rewards <= 0.0) or not np.all(np.isfinite(rewards)):
            raise ValidationError("rewards must be finite and strictly positive")
        if np.unique(rewards).size != n:
            raise ValidationError("rewards must be distinct (a reward identifies its state)")
        check_structure(P)
        res = _balance_residual(P, stationary_distribution(P))
        if res > BALANCE_TOL:
            raise ReversibilityError(f"chain is not reversible (detailed-balance residual {res:.3e})")
        rewards.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transition", P)

    @property
    def n_states(self) -> int:
        return self.rewards.size

    def to_dict(self) -> dict:
        return {"rewards": self.rewards.tolist(), "transition": self.transition.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmSpec":
        try:
            return cls(d["rewards"], d["transition"])
        except KeyError as exc:
            raise ValidationError(f"arm missing key {exc}") from None


def two_state_arm(p01: float, p10: float, r0: float = 0.1, r1: float = 1.0) -> ArmSpec:
    """Gilbert-Elliot arm: state 0 pays ``r0``, state 1 pays ``r1``."""
    return ArmSpec([r0, r1], [[1.0 - p01, p01], [p10, 1.0 - p10]])


def _reachable(adj: list[list[int]], start: int) -> list[int]:
    """BFS levels from ``start``; -1 for unreachable nodes."""
    level = [-1] * len(adj)
    level[start] = 0
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    return level


def check_structure(P: np.ndarray) -> None:
    """Raise :class:`StructureError` unless the support graph of ``P`` is
    strongly connected with period 1."""
    n = P.shape[0]
    fwd = [list(np.flatnonzero(P[i] > 0)) for i in range(n)]
    bwd = [list(np.flatnonzero(P[:, i] > 0)) for i in range(n)]
    level = _reachable(fwd, 0)
    if min(level) < 0 or min(_reachable(bwd, 0)) < 0:
        raise StructureError("chain is not irreducible")
    # period = gcd over edges u->v of level[u] + 1 - level[v]
    period = reduce(math.gcd, (level[u] + 1 - level[v] for u in range(n) for v in fwd[u]), 0)
    if period != 1:
        raise StructureError(f"chain is periodic with period {period}")


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1`` for an irreducible chain.

    The last balance equation is replaced by the normalisation, and the
    resulting system is solved by LU with partial pivoting.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.ndim != 2 or P.shape[1] != n:
        raise ValidationError("transition matrix must be square")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > STOCHASTIC_TOL) or np.any(P < 0):
        raise ValidationError("transition matrix is not row-stochastic")
    check_structure(P)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _balance_residual(P: np.ndarray, pi: np.ndarray) -> float:
    flow = pi[:, None] * P
    return float(np.max(np.abs(flow - flow.T)))


def spectral_gap(P: np.ndarray, pi: np.ndarray) -> tuple[float, float]:
    """Second-largest eigenvalue of a reversible ``P`` and ``1 - lambda2``.

    Uses the symmetric similarity transform ``D^1/2 P D^-1/2`` with
    ``D = diag(pi)``, valid because detailed balance holds.
    """
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if P.shape[0] == 1:
        return 0.0, 1.0
    res = _balance_residual(P, pi)
    if res > BALANCE_TOL:
        raise ReversibilityError(f"detailed balance violated (residual {res:.3e})")
    root = np.sqrt(pi)
    sym = root[:, None] * P / root[None, :]
    sym = 0.5 * (sym + sym.T)
    eig = np.linalg.eigvalsh(sym)  # ascending
    lam2 = float(eig[-2])
    return lam2, 1.0 - lam2


def mean_hitting_times(P: np.ndarray) -> np.ndarray:
    """Matrix ``M[x, y]`` of expected steps to first reach ``y`` from ``x``.

    For each target ``y`` solves ``(I - P_{-y,-y}) m = 1``; diagonal is 0.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    M = np.zeros((n, n))
    for y in range(n):
        keep = np.array([z for z in range(n) if z != y], dtype=int)
        if keep.size == 0:
            continue
        A = np.eye(keep.size) - P[np.ix_(keep, keep)]
        try:
            M[keep, y] = np.linalg.solve(A, np.ones(keep.size))
        except np.linalg.LinAlgError as exc:  # pragma: no cover - irreducible P
            raise RuntimeError(f"hitting-time system for state {y} is singular") from exc
    return M


def sample_next(P: np.ndarray, state: int, rng: np.random.Generator) -> int:
    """Draw the successor of ``state`` (inverse-CDF on one uniform)."""
    n = P.shape[0]
    if not 0 <= state < n:
        raise IndexError(f"state {state} out of range for {n}-state chain")
    cdf = np.cumsum(P[state])
    cdf[-1] = 1.0
    return int(np.searchsorted(cdf, rng.random(), side="right"))


@dataclass(frozen=True, eq=False)
class ChainStats:
    pi: np.ndarray
    mu: float
    lambda2: float
    gap: float
    hitting: np.ndarray
    max_hit: float
    reward_sum: float
    a_p: float


def chain_stats(arm: ArmSpec) -> ChainStats:
    """All per-arm derived quantities.  A single-state arm gets ``gap = 1``."""
    P = arm.transition
    pi = stationary_distribution(P)
    lam2, gap = spectral_gap(P, pi)
    hitting = mean_hitting_times(P)
    off = hitting[~np.eye(arm.n_states, dtype=bool)]
    reward_sum = float(arm.rewards.sum())
    return ChainStats(
        pi=pi,
        mu=float(np.dot(arm.rewards, pi)),
        lambda2=lam2,
        gap=gap,
        hitting=hitting,
        max_hit=float(off.max()) if off.size else 0.0,
        reward_sum=reward_sum,
        a_p=reward_sum / float(pi.min()),
    )


@dataclass(frozen=True, eq=False)
class InstanceStats:
    """Cross-arm constants of the model.

    ``big_l`` sizes the concentration radii; ``big_i`` is the minimal rate
    function used by the theoretical selection rule (zero when epsilon is 0).
    ``order`` lists arm indices by decreasing mean (ties by index).
    """

    n_arms: int
    r_max: float
    s_max: float
    cap_s_max: int
    pi_min: float
    pi_hat_max: float
    lambda_max: float
    gap_min: float
    a_max: float
    big_l: float
    big_i: float
    epsilon: float
    delta: float
    means: np.ndarray
    order: np.ndarray
    arm_stats: tuple[ChainStats, ...] = field(repr=False)

    @property
    def mu_sorted(self) -> np.ndarray:
        return self.means[self.order]

    @property
    def best_arm(self) -> int:
        return int(self.order[0])

    @property
    def best_gap_sq(self) -> float:
        m = self.mu_sorted
        return float((m[0] - m[1]) ** 2)


def concentration_l(r_max: float, gap_min: float) -> float:
    return 30.0 * r_max**2 / ((3.0 - 2.0 * math.sqrt(2.0)) * gap_min)


def rate_i(epsilon: float, gap_min: float, r_max: float, cap_s_max: int, pi_hat_max: float) -> float:
    num = epsilon**2 * gap_min
    den = 192.0 * (r_max + 2.0) ** 2 * cap_s_max**2 * r_max**2 * pi_hat_max**2
    return num / den


def instance_stats(arms: Sequence[ArmSpec], epsilon: float = 0.0, delta: float = 0.0) -> InstanceStats:
    if len(arms) < 2:
        raise ConfigurationError("need at least 2 arms")
    if epsilon < 0 or delta < 0:
        raise ConfigurationError("epsilon and delta must be non-negative")
    stats = tuple(chain_stats(a) for a in arms)
    means = np.array([s.mu for s in stats])
    order = np.argsort(-means, kind="stable")
    top = means[order]
    if delta > 0 and not delta < (top[0] - top[1]) ** 2:
        raise ConfigurationError(
            f"delta={delta!r} must be below the squared top gap {(top[0] - top[1]) ** 2!r}"
        )
    r_max = max(s.reward_sum for s in stats)
    cap_s_max = max(a.n_states for a in arms)
    pi_hat_max = max(float(np.max(np.maximum(s.pi, 1.0 - s.pi))) for s in stats)
    lambda_max = max(s.lambda2 for s in stats)
    gap_min = 1.0 - lambda_max
    return InstanceStats(
        n_arms=len(arms),
        r_max=r_max,
        s_max=max(float(a.rewards.max()) for a in arms),
        cap_s_max=cap_s_max,
        pi_min=min(float(s.pi.min()) for s in stats),
        pi_hat_max=pi_hat_max,
        lambda_max=lambda_max,
        gap_min=gap_min,
        a_max=max(s.a_p for s in stats),
        big_l=concentration_l(r_max, gap_min),
        big_i=rate_i(epsilon, gap_min, r_max, cap_s_max, pi_hat_max),
        epsilon=float(epsilon),
        delta=float(delta),
        means=means,
        order=order,
        arm_stats=stats,
    )


def load_arms(source: str | Path | list) -> list[ArmSpec]:
    """Read arms from JSON: a list of arm objects, or ``{"arms": [...]}``."""
    data = source
    if not isinstance(source, list):
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON in {source}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("arms")
    if not isinstance(data, list) or not data:
        raise ValidationError("expected a non-empty list of arms")
    arms = []
    for k, d in enumerate(data):
        try:
            arms.append(ArmSpec.from_dict(d))
        except ChainError as exc:
            raise type(exc)(f"arm {k}: {exc}") from None
    return arms


def dump_arms(arms: Sequence[ArmSpec]) -> list[dict]:
    return [a.to_dict() for a in arms]
