import math

import numpy as np
import pytest

from asr_invariants import check_run, split_blocks
from restless_asr import instance_stats
from restless_asr.engine import make_policy_spec, run_episode
from restless_asr.markov import ConfigurationError, two_state_arm
from restless_asr.policies import (
    EXPLOIT,
    AsrArmState,
    AsrConfig,
    AsrPolicy,
    Explore,
    ModelMismatchError,
    Mode,
    d_hat,
    select_epoch,
)
from restless_asr.scenarios import load_scenario

L_5ARM = 705.2396820942898


def practical(big_l=L_5ARM, tie_break="index"):
    return AsrConfig(Mode.PRACTICAL, big_l=big_l, tie_break=tie_break)


def arms_with(s_tilde, v_count=1):
    return [AsrArmState(v_count=v_count, v_sum=s * v_count, vw_sum=s * v_count, n_explore=1) for s in s_tilde]


def test_d_hat_practical_gap():
    assert d_hat(practical(), [0.85, 0.40], 1) == pytest.approx(4 * L_5ARM / 0.2025)
    assert d_hat(practical(), [0.85, 0.40], 1) == pytest.approx(13930.66, rel=1e-6)


def test_d_hat_practical_leader_uses_runner_up():
    cfg = practical()
    assert d_hat(cfg, [0.85, 0.40, 0.3], 0) == pytest.approx(4 * L_5ARM / 0.45**2)
    assert d_hat(cfg, [0.6, 0.6, 0.1], 0) == math.inf
    assert d_hat(cfg, [0.6, 0.6, 0.1], 1) == math.inf


def test_d_hat_theoretical_clamps_to_delta():
    cfg = AsrConfig(Mode.THEORETICAL, big_l=1.0, epsilon=0.01, delta=0.1, big_i=1.0)
    s = [0.5, 0.5 - math.sqrt(0.05)]
    assert d_hat(cfg, s, 1) == pytest.approx(4 / 0.1)
    s = [0.9, 0.1]
    assert d_hat(cfg, s, 1) == pytest.approx(4 / (0.64 - 0.01))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        AsrConfig(Mode.THEORETICAL, big_l=1.0)
    with pytest.raises(ConfigurationError):
        AsrConfig(Mode.PRACTICAL, big_l=0.0)
    with pytest.raises(ConfigurationError):
        AsrConfig(Mode.PRACTICAL, big_l=1.0, tie_break="random")


def test_select_epoch_rules():
    cfg = practical(big_l=1.0)
    assert select_epoch(cfg, arms_with([0.9, 0.1]), 1) == EXPLOIT
    # tied leaders have infinite thresholds
    assert select_epoch(cfg, arms_with([0.5, 0.5, 0.1], v_count=10**9), 3) == Explore(0)
    # both qualify: lowest index under "index", smaller deficit otherwise
    arms = arms_with([0.9, 0.1])
    arms[0].v_count, arms[1].v_count = 3, 1
    arms[0].v_sum, arms[1].v_sum = 2.7, 0.1
    assert select_epoch(cfg, arms, 10) == Explore(0)
    assert select_epoch(practical(1.0, "deficit"), arms, 10) == Explore(1)
    assert select_epoch(practical(1.0, "fewest"), arms, 10) == Explore(1)
    # nobody qualifies once counts exceed 4L/g^2 ln t
    assert select_epoch(cfg, arms_with([0.9, 0.1], v_count=100), 10) == EXPLOIT


def _drive(policy, arms, horizon, rng):
    state = [int(rng.integers(a.n_states)) for a in arms]
    out = []
    for _ in range(horizon):
        a = policy.select()
        policy.update(float(arms[a].rewards[state[a]]))
        out.append(a)
        for i, arm in enumerate(arms):
            state[i] = int(rng.choice(arm.n_states, p=arm.transition[state[i]]))
    return out


def test_initialisation_and_first_epochs():
    arms = [two_state_arm(0.3, 0.4), two_state_arm(0.2, 0.5), two_state_arm(0.6, 0.1)]
    events = []
    pol = AsrPolicy(arms, practical(big_l=1e-3), hook=events.append)
    actions = _drive(pol, arms, 400, np.random.default_rng(0))
    assert actions[:3] == [0, 1, 2]
    assert [e.phase for e in events[:3]] == ["init"] * 3
    exploit = [b for b in split_blocks(events, [0] * len(events)) if b.phase == "exploit"]
    assert [b.length for b in exploit[:3]] == [2, 8, 32]


def test_model_mismatch():
    arms = [two_state_arm(0.3, 0.4), two_state_arm(0.2, 0.5)]
    pol = AsrPolicy(arms, practical())
    pol.select()
    with pytest.raises(ModelMismatchError):
        pol.update(0.5)


def test_step_interface_matches_select_update():
    arms = list(load_scenario("fig_5arm").arms)
    stats = instance_stats(arms)
    spec = make_policy_spec("asr", stats, big_l=1.0)
    traj = run_episode(arms, spec, 3000, 5, stats=stats, backend="python")
    pol = AsrPolicy(arms, spec.asr)
    out, last = [], None
    for t in range(3000):
        a = pol.step(last)
        out.append(a)
        last = float(arms[a].rewards[traj.states[t]])
    assert out == list(traj.actions)


@pytest.mark.parametrize("tie_break", ["index", "fewest", "deficit"])
@pytest.mark.parametrize("big_l", [0.05, 1.0])
def test_structural_invariants(tie_break, big_l):
    arms = list(load_scenario("fig_5arm").arms)
    stats = instance_stats(arms)
    spec = make_policy_spec("asr", stats, big_l=big_l, tie_break=tie_break)
    horizon = 20_000
    for seed in range(3):
        traj = run_episode(arms, spec, horizon, seed, stats=stats, record=True)
        errs = check_run(traj.epoch_log, traj.states, spec.asr, [a.rewards for a in arms], horizon)
        assert errs == []


def test_structural_invariants_theoretical_and_rested():
    arms = list(load_scenario("fig_bursty").arms)
    stats = instance_stats(arms, 0.01, 0.05)
    spec = make_policy_spec("asr", stats, mode="theoretical", big_l=0.01)
    for dyn in ("restless", "rested"):
        traj = run_episode(arms, spec, 5000, 1, stats=stats, record=True, dynamics=dyn)
        assert check_run(traj.epoch_log, traj.states, spec.asr, [a.rewards for a in arms], 5000) == []


def test_checker_detects_corruption():
    arms = list(load_scenario("fig_5arm").arms)
    stats = instance_stats(arms)
    spec = make_policy_spec("asr", stats, big_l=0.05)
    traj = run_episode(arms, spec, 5000, 0, stats=stats, record=True)
    states = traj.states.copy()
    sb2 = next(k for k, e in enumerate(traj.epoch_log) if e.phase == "sb2")
    states[sb2 - 1] = 1 - states[sb2 - 1]
    assert check_run(traj.epoch_log, states, spec.asr, [a.rewards for a in arms], 5000)


def test_determinism():
    arms = list(load_scenario("fig_closegap").arms)
    stats = instance_stats(arms)
    spec = make_policy_spec("asr", stats)
    a = run_episode(arms, spec, 20_000, 99, stats=stats)
    b = run_episode(arms, spec, 20_000, 99, stats=stats)
    assert np.array_equal(a.actions, b.actions)
