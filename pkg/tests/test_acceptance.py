"""Acceptance criteria, one test per criterion.

Each test prints a ``CRITERION n PASS|FAIL: ...`` line (also collected into
the pytest terminal summary) and then asserts.  Run standalone with
``python tests/test_acceptance.py`` for just the seven lines.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracle_constants  # noqa: E402
from asr_invariants import check_run  # noqa: E402
from restless_asr import chain_stats, instance_stats, stationary_distribution  # noqa: E402
from restless_asr.bound import bound_constants  # noqa: E402
from restless_asr.cli import ExperimentConfig, run_experiment  # noqa: E402
from restless_asr.engine import make_policy_spec, run_episode, simulate_runs  # noqa: E402
from restless_asr.scenarios import PRESETS, load_scenario  # noqa: E402

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.acceptance

HORIZON = 100_000
MASTER_SEED = 2024


def report(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# 1. chain math --------------------------------------------------------------

def _mc_hitting_mean(P, x, y, trials, rng):
    """Mean first-passage time x -> y over ``trials`` independent walks.

    Each step draws among the row's nonzero successors only, which keeps
    sparse (birth-death) chains cheap to simulate.
    """
    n = P.shape[0]
    width = int((P > 0).sum(axis=1).max())
    succ = np.zeros((n, width), dtype=np.int64)
    cum = np.ones((n, width))
    for s in range(n):
        nz = np.flatnonzero(P[s] > 0)
        succ[s, : nz.size] = nz
        succ[s, nz.size:] = nz[-1]
        cum[s, : nz.size] = np.cumsum(P[s, nz])
        cum[s, nz.size - 1:] = 1.0
    cur = np.full(trials, x)
    steps = np.zeros(trials, dtype=np.int64)
    idx = np.arange(trials)
    while idx.size:
        c = cur[idx]
        k = (rng.random(idx.size)[:, None] >= cum[c]).sum(axis=1)
        cur[idx] = succ[c, k]
        steps[idx] += 1
        idx = idx[cur[idx] != y]
    return steps.mean(), steps.std(ddof=1) / math.sqrt(trials)


def test_criterion_1_chain_math():
    rng = np.random.default_rng(1)
    worst_stat = worst_bal = worst_closed = 0.0
    mc_checked = mc_bad = 0
    seen = set()
    for name in PRESETS:
        for arm in load_scenario(name).arms:
            P = arm.transition
            pi = stationary_distribution(P)
            worst_stat = max(worst_stat, float(np.max(np.abs(pi @ P - pi))))
            flow = pi[:, None] * P
            worst_bal = max(worst_bal, float(np.max(np.abs(flow - flow.T))))
            cs = chain_stats(arm)
            if arm.n_states == 2:
                p01, p10 = float(P[0, 1]), float(P[1, 0])
                ref = oracle_constants.two_state(p01, p10, *arm.rewards)
                worst_closed = max(
                    worst_closed,
                    float(np.max(np.abs(cs.pi - ref["pi"]))),
                    abs(cs.mu - ref["mu"]),
                    abs(cs.lambda2 - ref["lambda2"]),
                    abs(cs.hitting[0, 1] - ref["hit01"]),
                    abs(cs.hitting[1, 0] - ref["hit10"]),
                )
                pairs = [(0, 1), (1, 0)]
            else:
                pairs = [(0, arm.n_states // 2)]
            key = P.tobytes()
            if key in seen:
                continue
            seen.add(key)
            for x, y in pairs:
                m, se = _mc_hitting_mean(P, x, y, 100_000, rng)
                mc_checked += 1
                mc_bad += abs(m - cs.hitting[x, y]) >= 3 * se
    ok = worst_stat < 1e-10 and worst_bal < 1e-10 and worst_closed < 1e-12 and mc_bad == 0
    report(1, ok, f"stationary residual {worst_stat:.1e}, balance residual {worst_bal:.1e}, "
                  f"closed-form error {worst_closed:.1e}, MC hitting times {mc_checked - mc_bad}/{mc_checked} within 3 SE")


# 2. constants ---------------------------------------------------------------

def test_criterion_2_constants():
    ref = oracle_constants.derive(**oracle_constants.FIG_5ARM, epsilon=0.01, delta=0.1)
    stats = instance_stats(list(load_scenario("fig_5arm").arms), 0.01, 0.1)
    bc = bound_constants(stats)
    checks = {
        "r_max=1.1": math.isclose(stats.r_max, 1.1, rel_tol=1e-12) and math.isclose(ref["r_max"], 1.1, rel_tol=1e-12),
        "gap_min=0.3": math.isclose(stats.gap_min, 0.3, rel_tol=1e-12) and math.isclose(ref["gap_min"], 0.3, rel_tol=1e-12),
        "A_max=6.6": math.isclose(stats.a_max, 6.6, rel_tol=1e-12) and math.isclose(ref["a_max"], 6.6, rel_tol=1e-12),
        "pi_min=1/6": math.isclose(stats.pi_min, 1 / 6, rel_tol=1e-12) and math.isclose(ref["pi_min"], 1 / 6, rel_tol=1e-12),
        "L~705.24": math.isclose(stats.big_l, ref["big_l"], rel_tol=1e-9) and abs(ref["big_l"] - 705.24) < 0.005,
        "K={3,4,5}": set(bc.k_set) == {3, 4, 5} == ref["k_set"],
        "D_bar(2)~13930": math.isclose(bc.d_bar[0], ref["d_bar"][0], rel_tol=1e-9) and round(ref["d_bar"][0], -1) == 13930,
        "C1,C2 match oracle": math.isclose(bc.c1, ref["c1"], rel_tol=1e-9) and math.isclose(bc.c2, ref["c2"], rel_tol=1e-9),
    }
    bad = [k for k, v in checks.items() if not v]
    report(2, not bad, f"L={stats.big_l:.6f}, D_bar(2)={bc.d_bar[0]:.2f}, K={sorted(bc.k_set)}"
                       + (f"; mismatched: {bad}" if bad else "; all constants match the oracle"))


# 3. structural invariants ---------------------------------------------------

def test_criterion_3_structural_invariants():
    arms = list(load_scenario("fig_5arm").arms)
    stats = instance_stats(arms)
    rewards = [a.rewards for a in arms]
    configs = {
        "default": make_policy_spec("asr", stats),
        "L=1,index": make_policy_spec("asr", stats, big_l=1.0, tie_break="index"),
        "L=1,deficit": make_policy_spec("asr", stats, big_l=1.0),
    }
    failures = []
    exploit_epochs = 0
    for label, spec in configs.items():
        for seed in range(20):
            traj = run_episode(arms, spec, HORIZON, seed, stats=stats, record=True)
            errs = check_run(traj.epoch_log, traj.states, spec.asr, rewards, HORIZON)
            exploit_epochs += len({e.epoch for e in traj.epoch_log if e.phase == "exploit"})
            failures += [f"{label}/seed {seed}: {e}" for e in errs[:2]]
    report(3, not failures, f"{len(configs)} configs x 20 seeds at horizon {HORIZON}, "
                            f"{exploit_epochs} exploitation epochs checked"
                            + (f"; first violations: {failures[:3]}" if failures else "; no violations"))


# 4. qualitative ordering ----------------------------------------------------

def _horizon_regret(arms, stats, name, runs, regret="pseudo"):
    spec = make_policy_spec(name, stats)
    res = simulate_runs(arms, spec, HORIZON, runs, MASTER_SEED, [HORIZON], stats=stats, threads=4)
    x = res[regret][:, 0]
    return x.mean(), x.std(ddof=1) / math.sqrt(runs)


def test_criterion_4_asr_beats_baselines():
    parts, ok = [], True
    for name in ("fig_5arm", "fig_10arm", "fig_closegap", "fig_bursty"):
        arms = list(load_scenario(name).arms)
        stats = instance_stats(arms)
        res = {p: _horizon_regret(arms, stats, p, 100) for p in ("asr", "dsee", "rca")}
        a_m, a_se = res["asr"]
        wins = []
        for b in ("dsee", "rca"):
            b_m, b_se = res[b]
            wins.append(b_m - a_m > 2 * math.hypot(a_se, b_se))
        ok &= all(wins)
        parts.append(f"{name} asr={a_m:.0f}+-{a_se:.0f} dsee={res['dsee'][0]:.0f}+-{res['dsee'][1]:.0f} "
                     f"rca={res['rca'][0]:.0f}+-{res['rca'][1]:.0f}{'' if all(wins) else ' (not lower)'}")
    report(4, ok, "; ".join(parts))


# 5. logarithmic order -------------------------------------------------------

def test_criterion_5_log_order():
    arms = list(load_scenario("fig_5arm").arms)
    stats = instance_stats(arms)
    cps = np.unique(np.round(np.geomspace(1e4, 1e5, 20)).astype(np.int64))
    res = simulate_runs(arms, make_policy_spec("asr", stats), HORIZON, 100, MASTER_SEED, cps, stats=stats, threads=4)
    y = res["pseudo"].mean(axis=0)
    x = np.log(cps)
    a, b = np.polyfit(x, y, 1)
    r2 = 1 - np.sum((y - (a * x + b)) ** 2) / np.sum((y - y.mean()) ** 2)
    norm = y / x
    drift = abs(norm[-1] / norm[0] - 1)
    report(5, r2 >= 0.95 and drift <= 0.25,
           f"R^2={r2:.4f} (need >= 0.95), r(t)/ln t changes by {100 * drift:.1f}% from 1e4 to 1e5 (need <= 25%)")


# 6. regret definitions ------------------------------------------------------

def test_criterion_6_pseudo_vs_realized():
    arms = list(load_scenario("fig_5arm").arms)
    stats = instance_stats(arms)
    res = simulate_runs(arms, make_policy_spec("asr", stats), HORIZON, 500, MASTER_SEED, [HORIZON], stats=stats, threads=4)
    p, r = res["pseudo"][:, 0], res["realized"][:, 0]
    se = math.hypot(p.std(ddof=1), r.std(ddof=1)) / math.sqrt(p.size)
    diff = abs(p.mean() - r.mean())
    report(6, diff < 4 * se, f"pseudo={p.mean():.1f}, realized={r.mean():.1f}, |diff|={diff:.1f} vs 4 SE={4 * se:.1f}")


# 7. determinism -------------------------------------------------------------

def test_criterion_7_determinism():
    cfg = dict(scenario="fig_5arm", policies=["asr", "dsee", "rca", "random"], horizon=HORIZON, runs=20,
               master_seed=7, epsilon=0.01, delta=0.1, bound=True)
    first = run_experiment(ExperimentConfig(**cfg)).csv_text
    second = run_experiment(ExperimentConfig(**cfg, threads=4)).csv_text
    python = run_experiment(ExperimentConfig(**cfg, backend="python")).csv_text
    ok = first == second == python
    report(7, ok, f"{len(first.splitlines())}-line CSV byte-identical across reruns, thread counts and backends"
           if ok else "CSV differs between identical runs")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
