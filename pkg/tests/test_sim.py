import numpy as np
import pytest

import instances
from cisolver.dp import extract_control_strategy, solve_finite
from cisolver.errors import InvalidParameter, UnreachableInformation
from cisolver.sim import paired_rollout, rollout


def test_same_seed_reproduces_the_report(solved_seed1):
    spec, _, tree = solved_seed1
    a = rollout(spec, tree, seed=5, episodes=400)
    b = rollout(spec, tree, seed=5, episodes=400)
    assert a.mean == b.mean
    assert a.stderr == b.stderr
    c = rollout(spec, tree, seed=6, episodes=400)
    assert c.mean != a.mean


def test_thread_count_does_not_change_results(solved_seed1):
    spec, _, tree = solved_seed1
    a = rollout(spec, tree, seed=9, episodes=501, threads=1)
    b = rollout(spec, tree, seed=9, episodes=501, threads=8)
    assert a.mean == b.mean
    assert a.stderr == b.stderr
    assert a.violations == b.violations


def test_trajectory_recording_shapes(solved_seed1):
    spec, _, tree = solved_seed1
    report = rollout(spec, tree, seed=3, episodes=7, record=True)
    assert len(report.trajectories) == 7
    T = spec.horizon
    for e, traj in enumerate(report.trajectories):
        assert traj.episode == e
        assert len(traj.states) == T
        assert len(traj.obs) == T and all(len(o) == spec.n for o in traj.obs)
        assert len(traj.actions) == T
        assert len(traj.messages) == T - 1
        assert len(traj.memories) == T
        assert len(traj.nodes) == T
        hand = sum(float(spec.cost(t + 1)[traj.states[t],
                                           traj.actions[t][0] * 2 + traj.actions[t][1]])
                   for t in range(T))
        assert traj.cost == pytest.approx(hand, abs=1e-12)


def test_empirical_frequencies_match_the_model(solved_seed1):
    spec, _, tree = solved_seed1
    episodes = 20_000
    report = rollout(spec, tree, seed=12, episodes=episodes, record=True)
    x0 = np.array([t.states[0] for t in report.trajectories])

    p = float(spec.initial_dist[0])
    freq = float((x0 == 0).mean())
    sigma = np.sqrt(p * (1 - p) / episodes)
    assert abs(freq - p) <= 4 * sigma

    # next-state frequencies conditioned on the most common (state, action)
    keys = {}
    for t in report.trajectories:
        u = t.actions[0][0] * 2 + t.actions[0][1]
        keys.setdefault((t.states[0], u), []).append(t.states[1])
    (x, u), succ = max(keys.items(), key=lambda kv: len(kv[1]))
    succ = np.array(succ)
    q = float(spec.transition(1)[x, u, 0])
    freq = float((succ == 0).mean())
    sigma = np.sqrt(q * (1 - q) / len(succ))
    assert abs(freq - q) <= 4 * sigma


def test_paired_rollout_is_identical_for_a_faithful_extraction(solved_seed1):
    spec, _, tree = solved_seed1
    strategy = extract_control_strategy(spec, tree)
    report = paired_rollout(spec, tree, strategy, seed=4, episodes=1000)
    assert report.identical
    assert report.divergences == []


def test_paired_rollout_flags_a_corrupted_stage(solved_seed1):
    spec, _, tree = solved_seed1
    strategy = extract_control_strategy(spec, tree)
    for node in strategy.stages[1]:
        node.tables = (1 - node.tables[0],) + node.tables[1:]
    report = paired_rollout(spec, tree, strategy, seed=4, episodes=200)
    assert not report.identical
    assert len(report.divergences) == 200
    assert all(d == (e, 2, "action")
               for e, d in zip(range(200), report.divergences))


def test_rollout_raises_on_a_missing_successor(solved_seed1):
    spec, _, tree = solved_seed1
    strategy = extract_control_strategy(spec, tree)
    strategy.node(strategy.roots[0][1]).children.clear()
    with pytest.raises(UnreachableInformation):
        rollout(spec, strategy, seed=2, episodes=50)


def test_no_violations_on_an_optimal_tree(solved_seed1):
    spec, _, tree = solved_seed1
    report = rollout(spec, tree, seed=17, episodes=2000)
    assert report.violations == 0


def test_strategy_and_tree_estimate_the_same_value(solved_seed1):
    spec, report, tree = solved_seed1
    strategy = extract_control_strategy(spec, tree)
    sim = rollout(spec, strategy, seed=8, episodes=50_000)
    assert abs(sim.mean - report.value) <= 4 * sim.stderr


def test_argument_validation(solved_seed1):
    spec, _, tree = solved_seed1
    with pytest.raises(InvalidParameter, match="episodes"):
        rollout(spec, tree, seed=1, episodes=0)
    with pytest.raises(InvalidParameter, match="seed"):
        rollout(spec, tree, seed=-1, episodes=10)
    with pytest.raises(InvalidParameter, match="episodes"):
        paired_rollout(spec, tree, extract_control_strategy(spec, tree),
                       seed=1, episodes=0)
