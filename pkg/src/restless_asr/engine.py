"""Restless environment loop, pseudo-regret and Monte-Carlo aggregation.

In restless mode every arm advances one step per slot whether played or not,
so each arm's sample path is independent of the policy and is drawn up front
(time-major uniforms, so a longer horizon extends a shorter one).  In rested
mode arm ``i`` advances only when played and its ``k``-th play reveals
``path[i, k]``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .markov import ArmSpec, ConfigurationError, InstanceStats, instance_stats, stationary_distribution
from .policies import (
    TIE_BREAKS,
    AsrConfig,
    AsrPolicy,
    DseePolicy,
    Hook,
    Mode,
    OraclePolicy,
    PolicyBase,
    RandomPolicy,
    RcaPolicy,
    SlotEvent,
    dsee_rate,
)

__all__ = [
    "Dynamics",
    "PolicySpec",
    "make_policy_spec",
    "build_policy",
    "splitmix64",
    "derive_seed",
    "sample_paths",
    "Trajectory",
    "run_episode",
    "pseudo_regret",
    "realized_regret",
    "RegretCurve",
    "aggregate",
    "default_checkpoints",
    "simulate_runs",
    "monte_carlo",
]

log = logging.getLogger(__name__)

POLICY_NAMES = ("asr", "dsee", "rca", "oracle", "random")
_MASK64 = (1 << 64) - 1
_CHUNK = 1 << 16
DSEE_DELTA_FRACTION = 0.99



class Dynamics(str, Enum):
    RESTLESS = "restless"
    RESTED = "rested"


@dataclass(frozen=True)
class PolicySpec:
    """Fully resolved, serialisable description of one policy."""

    name: str
    best_arm: int
    asr: Optional[AsrConfig] = None
    dsee_rate: Optional[float] = None
    rca_l: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "best_arm": self.best_arm}
        if self.asr is not None:
            d["asr"] = {
                "mode": self.asr.mode.value,
                "big_l": self.asr.big_l,
                "epsilon": self.asr.epsilon,
                "delta": self.asr.delta,
                "big_i": self.asr.big_i,
            }
        if self.dsee_rate is not None:
            d["dsee_rate"] = self.dsee_rate
        if self.rca_l is not None:
            d["rca_l"] = self.rca_l
        return d


def make_policy_spec(
    name: str,
    stats: InstanceStats,
    *,
    mode: str = "practical",
    big_l: Optional[float] = None,
    explore_scale: float = 1.0,
    dsee_fixed_rate: Optional[float] = None,
    tie_break: str = "deficit",
) -> PolicySpec:
    """Resolve a policy name into a :class:`PolicySpec`.

    ``big_l`` overrides the concentration constant shared by ASR, DSEE and
    RCA (default: the value computed from the true chains).  ``explore_scale``
    multiplies the baselines' exploration constants.  ``dsee_fixed_rate``
    replaces DSEE's ``4L/delta`` per-arm rate outright.  When ``stats.delta``
    is 0, DSEE uses ``DSEE_DELTA_FRACTION`` times the squared gap between the
    two best true means.
    """
    L = stats.big_l if big_l is None else float(big_l)
    best = stats.best_arm
    if name == "asr":
        if Mode(mode) is Mode.PRACTICAL:
            cfg = AsrConfig.practical(stats, L, tie_break)
        else:
            cfg = AsrConfig.theoretical(stats, L, tie_break)
        return PolicySpec(name, best, asr=cfg)
    if name == "dsee":
        if dsee_fixed_rate is not None:
            rate = explore_scale * float(dsee_fixed_rate)
        else:
            delta = stats.delta if stats.delta > 0 else DSEE_DELTA_FRACTION * stats.best_gap_sq
            rate = dsee_rate(L, delta, explore_scale)
        return PolicySpec(name, best, dsee_rate=rate)
    if name == "rca":
        return PolicySpec(name, best, rca_l=explore_scale * L)
    if name in ("oracle", "random"):
        return PolicySpec(name, best)
    raise ConfigurationError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")


def build_policy(
    spec: PolicySpec,
    arms: Sequence[ArmSpec],
    rng: Optional[np.random.Generator] = None,
    hook: Optional[Hook] = None,
) -> PolicyBase:
    if spec.name == "asr":
        return AsrPolicy(arms, spec.asr, hook)
    if spec.name == "dsee":
        return DseePolicy(arms, spec.dsee_rate, hook)
    if spec.name == "rca":
        return RcaPolicy(arms, spec.rca_l, hook)
    if spec.name == "oracle":
        return OraclePolicy(arms, spec.best_arm, hook)
    if spec.name == "random":
        if rng is None:
            raise ValueError("random policy needs a generator")
        return RandomPolicy(arms, rng, hook)
    raise ConfigurationError(f"unknown policy {spec.name!r}")


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 output function on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed: ``splitmix64(splitmix64(master) XOR run_index)``."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ (run_index & _MASK64))


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    env, pol = np.random.SeedSequence(seed & _MASK64).spawn(2)
    return np.random.Generator(np.random.PCG64(env)), np.random.Generator(np.random.PCG64(pol))


def _cdf_tables(arms: Sequence[ArmSpec], stats: Optional[InstanceStats]):
    n = len(arms)
    smax = max(a.n_states for a in arms)
    cum = np.ones((n, smax, smax))
    cum0 = np.ones((n, smax))
    for i, a in enumerate(arms):
        k = a.n_states
        c = np.cumsum(a.transition, axis=1)
        c[:, -1] = 1.0
        cum[i, :k, :k] = c
        pi = stats.arm_stats[i].pi if stats is not None else stationary_distribution(a.transition)
        c0 = np.cumsum(pi)
        c0[-1] = 1.0
        cum0[i, :k] = c0
    return cum, cum0


def _advance_python(cum, u, state, out, t0):
    idx = np.arange(u.shape[1])
    for r in range(u.shape[0]):
        state[:] = np.sum(u[r][:, None] >= cum[idx, state], axis=1)
        out[:, t0 + r] = state


def sample_paths(
    arms: Sequence[ArmSpec],
    horizon: int,
    rng: np.random.Generator,
    stats: Optional[InstanceStats] = None,
    backend: Optional[str] = None,
) -> np.ndarray:
    """``(N, horizon)`` int32 array of state indices, initial column drawn
    from each arm's stationary distribution."""
    backend = _backend.resolve(backend)
    cum, cum0 = _cdf_tables(arms, stats)
    n = len(arms)
    out = np.empty((n, horizon), dtype=np.intc)
    u0 = rng.random(n)
    state = np.sum(u0[:, None] >= cum0, axis=1).astype(np.intc)
    out[:, 0] = state
    advance = _backend.compiled.advance_paths if backend == "compiled" else _advance_python
    t = 1
    while t < horizon:
        c = min(_CHUNK, horizon - t)
        advance(cum, rng.random((c, n)), state, out, t)
        t += c
    return out


@dataclass
class Trajectory:
    actions: np.ndarray
    states: np.ndarray
    rewards: np.ndarray
    epoch_log: list[SlotEvent] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.actions.size


def _rewards_table(arms: Sequence[ArmSpec]) -> np.ndarray:
    smax = max(a.n_states for a in arms)
    tab = np.zeros((len(arms), smax))
    for i, a in enumerate(arms):
        tab[i, : a.n_states] = a.rewards
    return tab


def _states_for(actions: np.ndarray, path: np.ndarray, rested: bool) -> np.ndarray:
    if not rested:
        return path[actions, np.arange(actions.size)].astype(np.intc)
    states = np.empty(actions.size, dtype=np.intc)
    for i in range(path.shape[0]):
        where = np.flatnonzero(actions == i)
        states[where] = path[i, : where.size]
    return states


def run_episode(
    arms: Sequence[ArmSpec],
    spec: PolicySpec,
    horizon: int,
    seed: int,
    *,
    dynamics: Dynamics | str = Dynamics.RESTLESS,
    stats: Optional[InstanceStats] = None,
    backend: Optional[str] = None,
    hook: Optional[Hook] = None,
    record: bool = False,
) -> Trajectory:
    """Play one episode.

    Instrumentation (``hook`` or ``record``) runs the per-slot Python state
    machines regardless of ``backend``; the compiled kernels carry no hooks.
    """
    n = len(arms)
    if horizon < n:
        raise ConfigurationError(f"horizon {horizon} shorter than the {n} arms")
    backend = _backend.resolve(backend)
    rested = Dynamics(dynamics) is Dynamics.RESTED
    env_rng, pol_rng = _streams(seed)
    path = sample_paths(arms, horizon, env_rng, stats, backend)
    table = _rewards_table(arms)
    log_events: list[SlotEvent] = []
    if record:
        user_hook = hook

        def hook(ev: SlotEvent, _log=log_events.append, _user=user_hook) -> None:
            _log(ev)
            if _user is not None:
                _user(ev)

    if hook is None and backend == "compiled" and spec.name in ("asr", "dsee", "rca"):
        actions = np.empty(horizon, dtype=np.intc)
        states = np.empty(horizon, dtype=np.intc)
        k = _backend.compiled
        if spec.name == "asr":
            c = spec.asr
            k.asr_episode(path, table, horizon, rested, c.mode is Mode.PRACTICAL,
                          c.big_l, c.epsilon, c.delta, c.big_i, TIE_BREAKS.index(c.tie_break), actions, states)
        elif spec.name == "dsee":
            k.dsee_episode(path, table, horizon, rested, spec.dsee_rate, actions, states)
        else:
            k.rca_episode(path, table, horizon, rested, spec.rca_l, actions, states)
    elif hook is None and spec.name == "oracle":
        actions = np.full(horizon, spec.best_arm, dtype=np.intc)
        states = _states_for(actions, path, rested)
    elif hook is None and spec.name == "random":
        actions = (pol_rng.random(horizon) * n).astype(np.intc)
        states = _states_for(actions, path, rested)
    else:
        policy = build_policy(spec, arms, pol_rng, hook)
        actions = np.empty(horizon, dtype=np.intc)
        states = np.empty(horizon, dtype=np.intc)
        plays = [0] * n
        for t in range(horizon):
            a = policy.select()
            if rested:
                s = int(path[a, plays[a]])
            else:
                s = int(path[a, t])
            plays[a] += 1
            policy.update(float(table[a, s]))
            actions[t] = a
            states[t] = s
    rewards = table[actions, states]
    return Trajectory(actions, states, rewards, log_events)


def pseudo_regret(traj: Trajectory, means: np.ndarray) -> np.ndarray:
    """``r(t) = t * mu_best - sum_{tau <= t} mu[a(tau)]`` for ``t = 1..T``."""
    means = np.asarray(means, dtype=float)
    return np.cumsum(means.max() - means[traj.actions])


def realized_regret(traj: Trajectory, means: np.ndarray) -> np.ndarray:
    """``t * mu_best - R(t)`` with ``R`` the observed reward sum."""
    t = np.arange(1, traj.horizon + 1)
    return t * np.max(means) - np.cumsum(traj.rewards)


@dataclass
class RegretCurve:
    policy: str
    checkpoints: np.ndarray
    mean_regret: np.ndarray
    std_err: np.ndarray
    per_run: np.ndarray = field(repr=False)

    @property
    def normalized(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.mean_regret / np.log(self.checkpoints)

    @property
    def runs(self) -> int:
        return self.per_run.shape[0]


def aggregate(policy: str, checkpoints: np.ndarray, per_run: np.ndarray) -> RegretCurve:
    """Mean and standard error across the rows of ``per_run`` (run-index
    order), so the result does not depend on when runs finished."""
    per_run = np.asarray(per_run, dtype=float)
    runs = per_run.shape[0]
    mean = per_run.mean(axis=0)
    if runs > 1:
        se = per_run.std(axis=0, ddof=1) / math.sqrt(runs)
    else:
        se = np.zeros_like(mean)
    return RegretCurve(policy, np.asarray(checkpoints, dtype=np.int64), mean, se, per_run)


def default_checkpoints(horizon: int, count: int = 50, start: int = 100) -> np.ndarray:
    """``count`` log-spaced integer slots in ``[start, horizon]`` (deduplicated)."""
    lo = min(start, horizon)
    pts = np.unique(np.round(np.geomspace(lo, horizon, count)).astype(np.int64))
    return pts


def simulate_runs(
    arms: Sequence[ArmSpec],
    spec: PolicySpec,
    horizon: int,
    runs: int,
    master_seed: int,
    checkpoints: Optional[Sequence[int]] = None,
    *,
    dynamics: Dynamics | str = Dynamics.RESTLESS,
    stats: Optional[InstanceStats] = None,
    backend: Optional[str] = None,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Per-run pseudo and realized regret at ``checkpoints``.

    Returns ``{"checkpoints", "pseudo", "realized"}``, the latter two of shape
    ``(runs, len(checkpoints))`` with row ``k`` from seed
    ``derive_seed(master_seed, k)``.
    """
    if runs < 1:
        raise ConfigurationError("runs must be >= 1")
    stats = stats if stats is not None else instance_stats(arms)
    cps = default_checkpoints(horizon) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if cps.size == 0 or cps.min() < 1 or cps.max() > horizon:
        raise ConfigurationError("checkpoints must lie in [1, horizon]")
    idx = cps - 1
    means = stats.means

    def one(k: int) -> tuple[np.ndarray, np.ndarray]:
        traj = run_episode(arms, spec, horizon, derive_seed(master_seed, k),
                           dynamics=dynamics, stats=stats, backend=backend)
        return pseudo_regret(traj, means)[idx], realized_regret(traj, means)[idx]

    pseudo = np.empty((runs, cps.size))
    realized = np.empty((runs, cps.size))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(one, range(runs))
            for k, (p, r) in enumerate(results):
                pseudo[k], realized[k] = p, r
    else:
        for k in range(runs):
            pseudo[k], realized[k] = one(k)
    log.debug("%s: %d runs x %d slots done", spec.name, runs, horizon)
    return {"checkpoints": cps, "pseudo": pseudo, "realized": realized}


def monte_carlo(
    arms: Sequence[ArmSpec],
    spec: PolicySpec,
    horizon: int,
    runs: int,
    master_seed: int,
    checkpoints: Optional[Sequence[int]] = None,
    *,
    regret: str = "pseudo",
    **kwargs,
) -> RegretCurve:
    if regret not in ("pseudo", "realized"):
        raise ValueError("regret must be 'pseudo' or 'realized'")
    res = simulate_runs(arms, spec, horizon, runs, master_seed, checkpoints, **kwargs)
    return aggregate(spec.name, res["checkpoints"], res[regret])
