import numpy as np
import pytest

import instances
import reference
from cisolver.coordinator import (
    PrescriptionSpace,
    expected_cost,
    message_distribution,
    zeta,
)
from cisolver.dp import (
    extract_control_strategy,
    solve_discounted,
    solve_finite,
    solve_finite_reduced,
    truncation_depth,
)
from cisolver.errors import InvalidParameter, SizeOverflow
from cisolver.model import FiniteSpace, ProblemSpec
from cisolver.oracle import (
    enumerate_basic_strategies,
    exact_cost_of_strategy,
)
from cisolver.protocols import delayed_sharing_protocol


def test_single_controller_matches_textbook_recursion():
    for seed in (21, 22, 23):
        spec = instances.single_controller_instance(seed)
        report, _ = solve_finite(spec)
        expect = reference.finite_pomdp_value(
            spec.initial_dist, list(spec.transitions),
            list(spec.obs_kernels[0]), list(spec.costs))
        assert abs(report.value - expect) <= 1e-9


def test_two_controller_value_matches_enumeration():
    spec = instances.random_delayed_instance(1)
    report, _ = solve_finite(spec)
    basic = enumerate_basic_strategies(spec)
    assert abs(report.value - basic.minimum) <= 1e-9


def test_reduced_belief_variant_agrees(seeded_instances):
    for spec in seeded_instances:
        full, _ = solve_finite(spec)
        red, _ = solve_finite_reduced(spec)
        assert abs(full.value - red.value) <= 1e-9
        assert red.variant == "reduced"


def test_tree_satisfies_bellman_recursion(solved_seed1):
    spec, report, tree = solved_seed1
    for stage in tree.stages:
        for node in stage:
            gamma = PrescriptionSpace(spec, node.t).decode(node.gamma_index)
            stage_cost = expected_cost(spec, node.belief, gamma)
            if node.t == tree.horizon:
                assert abs(node.value - stage_cost) <= 1e-12
                continue
            dist = message_distribution(spec, node.belief, gamma)
            cont = sum(dist[z] * tree.node(child).value
                       for z, child in node.children.items())
            assert abs(sum(dist[z] for z in node.children)
                       - 1.0) <= 1e-12
            assert abs(node.value - (stage_cost + cont)) <= 1e-12
    root_value = sum(p * tree.node(i).value for p, i in tree.roots)
    assert abs(root_value - report.value) <= 1e-12


def test_ties_break_to_smallest_prescription_index():
    spec = instances.random_delayed_instance(4)
    flat = ProblemSpec(
        n=spec.n, mode="finite", horizon=spec.horizon, discount=None,
        state_space=spec.state_space, obs_spaces=spec.obs_spaces,
        action_spaces=spec.action_spaces, initial_dist=spec.initial_dist,
        transitions=spec.transitions, obs_kernels=spec.obs_kernels,
        costs=[np.full_like(c, 0.5) for c in spec.costs],
        protocol=spec.protocol)
    _, tree = solve_finite(flat)
    # every prescription is optimal under a constant cost, so the solver
    # must pick index 0 everywhere for the output to be reproducible
    for stage in tree.stages:
        for node in stage:
            assert node.gamma_index == 0


def test_extracted_strategy_achieves_the_value(solved_seed1):
    spec, report, tree = solved_seed1
    strategy = extract_control_strategy(spec, tree)
    assert abs(exact_cost_of_strategy(spec, strategy) - report.value) <= 1e-9


def test_one_shot_team_with_common_signal():
    spec = instances.static_team()
    report, tree = solve_finite(spec)
    basic = enumerate_basic_strategies(spec)
    assert abs(report.value - basic.minimum) <= 1e-9
    assert len(tree.roots) == 2


def test_prescription_cap_aborts_solve():
    spec = instances.random_delayed_instance(1)
    with pytest.raises(SizeOverflow):
        solve_finite(spec, cap_prescriptions=3)


def test_mode_checks():
    finite = instances.random_delayed_instance(1)
    with pytest.raises(InvalidParameter):
        solve_discounted(finite)
    discounted = instances.discounted_constant(0.5)
    with pytest.raises(InvalidParameter):
        solve_finite(discounted)


def test_truncation_depth_edges():
    assert truncation_depth(0.0, 1e-4, 1.0) == 1
    assert truncation_depth(0.9, 1e-4, 0.0) == 1
    deep = truncation_depth(0.9, 1e-4, 1.0)
    assert 0.9 ** deep * 1.0 / 0.1 <= 1e-4
    assert 0.9 ** (deep - 1) * 1.0 / 0.1 > 1e-4


def test_discount_zero_equals_one_shot_solve():
    base = instances.discounted_constant(0.5)
    zero = ProblemSpec(
        n=base.n, mode="discounted", horizon=None, discount=0.0,
        state_space=base.state_space, obs_spaces=base.obs_spaces,
        action_spaces=base.action_spaces, initial_dist=base.initial_dist,
        transitions=base.transitions, obs_kernels=base.obs_kernels,
        costs=[np.array([[0.1, 0.9, 0.9, 0.4], [0.7, 0.2, 0.9, 0.5]])],
        protocol=base.protocol)
    report, _ = solve_discounted(zero, epsilon=1e-4)
    obs, act = list(base.obs_spaces), list(base.action_spaces)
    one_shot = ProblemSpec(
        n=base.n, mode="finite", horizon=1, discount=None,
        state_space=base.state_space, obs_spaces=base.obs_spaces,
        action_spaces=base.action_spaces, initial_dist=base.initial_dist,
        transitions=[], obs_kernels=base.obs_kernels, costs=zero.costs,
        protocol=delayed_sharing_protocol(1, 1, obs, act))
    finite_report, _ = solve_finite(one_shot)
    assert abs(report.value - finite_report.value) <= 1e-12
    assert report.iterations == 1


def test_constant_cost_fixed_point():
    for beta in (0.5, 0.9):
        spec = instances.discounted_constant(beta)
        report, _ = solve_discounted(spec, epsilon=1e-4)
        assert abs(report.value - 1.0 / (1.0 - beta)) <= 1e-4
        assert report.tail_bound <= 1e-4


def test_discounted_chain_matches_independent_value_iteration():
    spec = instances.discounted_chain(0.9)
    epsilon = 1e-4
    report, policy = solve_discounted(spec, epsilon=epsilon)
    depth = truncation_depth(0.9, epsilon / 10.0, spec.max_abs_cost)
    expect = reference.discounted_pomdp_value(
        spec.initial_dist, spec.transitions[0], spec.obs_kernels[0][0],
        spec.costs[0], 0.9, depth)
    assert abs(report.value - expect) <= 2 * epsilon
    assert policy.value == report.value
    assert policy.entries


def test_halving_epsilon_is_stable():
    spec = instances.discounted_chain(0.9)
    coarse, _ = solve_discounted(spec, epsilon=1e-4)
    fine, _ = solve_discounted(spec, epsilon=5e-5)
    assert abs(coarse.value - fine.value) < 1e-4


def test_reduced_tree_lifts_to_the_full_beliefs(solved_seed1):
    spec, _, full_tree = solved_seed1
    _, red_tree = solve_finite_reduced(spec)
    full_keys = {node.belief.canonical_key()[1] for stage in full_tree.stages
                 for node in stage}
    for stage in red_tree.stages:
        for node in stage:
            lifted = zeta(spec, node.belief)
            assert lifted.canonical_key()[1] in full_keys
