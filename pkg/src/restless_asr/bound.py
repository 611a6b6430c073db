"""Finite-sample regret bound of the ASR policy.

``bound(t) = C1 log4(t) + C2 ln(t) + B log4(ln t) + offset`` where
``B = N A_max + sum_{i>=2} gap_i M^{sigma(i)}_max`` and ``gap_i`` is the
mean gap between the best arm and the ``i``-th best.  ``offset`` stands in
for the unspecified constant term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .markov import ConfigurationError, InstanceStats

__all__ = ["BoundConstants", "k_set", "bound_constants", "regret_bound", "bound_curve"]

LN4 = math.log(4.0)


@dataclass(frozen=True)
class BoundConstants:
    """Constants of the bound.

    Index conventions: ``k_set`` holds 1-based positions in the
    decreasing-mean order (2 is the second-best arm).  ``d_bar[j]`` belongs to
    position ``j + 2``; ``d_bar_max`` maps positions in ``k_set`` to their
    values.
    """

    c1: float
    c2: float
    k_set: frozenset[int]
    log_log_coeff: float
    d_bar: np.ndarray
    d_bar_max: dict[int, float]

    @property
    def log_rate(self) -> float:
        """Limit of ``bound(t) / ln t``."""
        return self.c1 / LN4 + self.c2


def k_set(mu_sorted: np.ndarray, epsilon: float) -> frozenset[int]:
    top = mu_sorted[0] - mu_sorted[1]
    return frozenset(
        i + 1
        for i in range(1, len(mu_sorted))
        if (mu_sorted[0] - mu_sorted[i]) ** 2 - 2.0 * epsilon > top**2
    )


def bound_constants(stats: InstanceStats) -> BoundConstants:
    eps, delta = stats.epsilon, stats.delta
    if not eps > 0:
        raise ConfigurationError("the bound needs epsilon > 0")
    if not delta > 0:
        raise ConfigurationError("the bound needs delta > 0")
    order = stats.order
    mu = stats.means[order]
    cs = [stats.arm_stats[k] for k in order]
    sizes = [cs_k.pi.size for cs_k in cs]
    L, I = stats.big_l, stats.big_i
    sqrt_l = math.sqrt(L)

    def chain_term(pos: int) -> float:
        # position pos (0-based) in sorted order
        s = cs[pos]
        return 1.0 / math.log(2.0) + math.sqrt(2.0) * s.gap * sqrt_l / (10.0 * s.reward_sum) * sizes[pos]

    ks = k_set(mu, eps)
    c1_sum = 0.0
    c2_sum = 0.0
    d_bar = []
    d_bar_max = {}
    loglog = stats.n_arms * stats.a_max
    root2e = math.sqrt(2.0 * eps)
    for pos in range(1, stats.n_arms):
        gap = mu[0] - mu[pos]
        c1_sum += gap / stats.pi_min * (chain_term(0) + chain_term(pos))
        loglog += gap * cs[pos].max_hit
        d_bar.append(4.0 * L / gap**2 if gap > 0 else math.inf)
        if pos + 1 in ks:
            d_bar_max[pos + 1] = 4.0 * L / (gap**2 - 2.0 * eps)
            c2_sum += max(gap * 2.0 / I, 4.0 * L / (gap + root2e) + 4.0 * L * root2e / (gap**2 - 2.0 * eps))
        else:
            c2_sum += gap * max(2.0 / I, 4.0 * L / delta)
    return BoundConstants(
        c1=stats.a_max + 3.0 * c1_sum,
        c2=4.0 * c2_sum,
        k_set=ks,
        log_log_coeff=loglog,
        d_bar=np.array(d_bar),
        d_bar_max=d_bar_max,
    )


def regret_bound(t: float, bc: BoundConstants, offset: float = 0.0) -> float:
    if t < 3:
        raise ValueError(f"bound defined for t >= 3, got {t}")
    lt = math.log(t)
    return bc.c1 * lt / LN4 + bc.c2 * lt + bc.log_log_coeff * math.log(lt) / LN4 + offset


def bound_curve(checkpoints, bc: BoundConstants, offset: float = 0.0) -> np.ndarray:
    """Bound at each checkpoint; ``nan`` where ``t < 3``."""
    return np.array([regret_bound(t, bc, offset) if t >= 3 else math.nan for t in checkpoints])
