import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import instances
import reference
from cisolver.coordinator import (
    Belief,
    PrescriptionSpace,
    chi,
    enumerate_states,
    eta_update,
    expected_cost,
    initial_belief,
    message_distribution,
    observation_probability,
    state_index,
    zeta,
)
from cisolver.dp import solve_finite
from cisolver.errors import SizeOverflow, ZeroProbabilityObservation
from cisolver.model import FiniteSpace, ProblemSpec
from cisolver.protocols import delayed_sharing_protocol


def tiny_chain():
    """One controller, delay-1 sharing, fixed round numbers."""
    obs, act = [FiniteSpace(2)], [FiniteSpace(2)]
    return ProblemSpec(
        n=1, mode="finite", horizon=2, discount=None,
        state_space=FiniteSpace(2),
        obs_spaces=obs, action_spaces=act,
        initial_dist=np.array([0.6, 0.4]),
        transitions=[np.array([[[0.9, 0.1], [0.3, 0.7]],
                               [[0.5, 0.5], [0.2, 0.8]]])],
        obs_kernels=[[np.array([[0.9, 0.1], [0.2, 0.8]]),
                      np.array([[0.7, 0.3], [0.4, 0.6]])]],
        costs=[np.array([[0.0, 1.0], [1.0, 0.0]]) for _ in range(2)],
        protocol=delayed_sharing_protocol(1, 2, obs, act))


def test_initial_belief_is_joint_state_observation_law():
    spec = tiny_chain()
    roots = initial_belief(spec)
    assert len(roots) == 1
    prob, belief = roots[0]
    assert prob == 1.0
    # order is (x, y): 0.6 * (0.9, 0.1) and 0.4 * (0.2, 0.8)
    assert np.allclose(belief.weights, [0.54, 0.06, 0.08, 0.32])
    assert belief.dims == (2, 2, 1)


def test_initial_belief_splits_on_common_signal():
    spec = instances.static_team()
    roots = initial_belief(spec)
    assert len(roots) == 2
    probs = [p for p, _ in roots]
    # P(signal 0) = 0.6 * 0.8 + 0.4 * 0.3
    assert abs(probs[0] - 0.6) < 1e-12
    assert abs(probs[1] - 0.4) < 1e-12
    for _, belief in roots:
        assert abs(belief.weights.sum() - 1.0) < 1e-12


def test_enumerate_states_is_lexicographic_and_invertible():
    spec = instances.random_delayed_instance(1)
    states = enumerate_states(spec, 2)
    assert [state_index(spec, s, 2) for s in states] == list(range(len(states)))
    flat = [(s.x,) + s.obs + s.mem for s in states]
    assert flat == sorted(flat)


def test_prescription_space_size_and_round_trip():
    spec = instances.random_delayed_instance(1)
    space = PrescriptionSpace(spec, 2)
    # each controller maps 2 observations x 2 remembered values? delay 1
    # keeps memory empty, so 2 points each and 2^2 tables per controller
    assert space.size == 16
    for idx in range(space.size):
        gamma = space.decode(idx)
        assert space.encode(gamma.tables) == idx


def test_prescription_space_cap():
    spec = instances.random_delayed_instance(1)
    with pytest.raises(SizeOverflow):
        PrescriptionSpace(spec, 1, cap=15)


def test_message_split_and_eta_update_match_hand_computation():
    spec = tiny_chain()
    _, belief = initial_belief(spec)[0]
    space = PrescriptionSpace(spec, 1)
    gamma = space.decode(space.encode([np.array([[0], [1]])]))  # u = y

    dist = message_distribution(spec, belief, gamma)
    # null message never fires; z = 1 + (2 y + u) with u = y
    assert np.allclose(dist, [0.0, 0.62, 0.0, 0.0, 0.38])
    assert abs(observation_probability(spec, belief, gamma, 1) - 0.62) < 1e-12

    nxt = eta_update(spec, belief, gamma, 1)
    # condition on y = 0 (posterior (0.54, 0.08) / 0.62), act u = 0,
    # push through the stage-1 kernel rows and the stage-2 channel
    post = np.array([0.54, 0.08]) / 0.62
    x2 = post @ spec.transitions[0][:, 0, :]
    expect = (x2[:, None] * spec.obs_kernels[0][1]).reshape(-1)
    assert np.allclose(nxt.weights, expect, atol=1e-12)
    assert abs(nxt.weights.sum() - 1.0) < 1e-12


def test_eta_update_rejects_zero_probability_message():
    spec = tiny_chain()
    _, belief = initial_belief(spec)[0]
    gamma = PrescriptionSpace(spec, 1).decode(0)  # u = 0 always
    # z = 2 encodes (y = 0, u = 1), impossible under this prescription
    with pytest.raises(ZeroProbabilityObservation):
        eta_update(spec, belief, gamma, 2)


def test_expected_cost_matches_direct_sum():
    spec = tiny_chain()
    _, belief = initial_belief(spec)[0]
    gamma = PrescriptionSpace(spec, 1).decode(1)  # y=0 -> 0, y=1 -> 1
    # cost c(x, u) = 1 on mismatch x != u
    expect = 0.06 * 1.0 + 0.08 * 1.0  # (x=0,y=1) acts 1; (x=1,y=0) acts 0
    assert abs(expected_cost(spec, belief, gamma) - expect) < 1e-12


@given(st.integers(min_value=0, max_value=15),
       st.integers(min_value=0, max_value=10 ** 9))
@settings(max_examples=40, deadline=None)
def test_message_distribution_sums_to_one(gamma_idx, seed):
    spec = instances.random_delayed_instance(2)
    layout_dims = initial_belief(spec)[0][1].dims
    rng = np.random.default_rng(seed)
    w = rng.uniform(size=int(np.prod(layout_dims)))
    w /= w.sum()
    belief = Belief(t=1, n=2, dims=layout_dims, weights=w)
    gamma = PrescriptionSpace(spec, 1).decode(gamma_idx)
    dist = message_distribution(spec, belief, gamma)
    assert abs(dist.sum() - 1.0) < 1e-9
    assert dist.min() >= 0.0


def test_reduction_and_lift_are_inverse_on_reachable_beliefs(solved_seed1):
    spec, _, tree = solved_seed1
    for stage in tree.stages:
        for node in stage:
            reduced = chi(node.belief)
            lifted = zeta(spec, reduced)
            assert np.allclose(lifted.weights, node.belief.weights, atol=1e-13)
            assert reduced.dims == (2, 1, 1)


def test_canonical_key_clears_negative_zero():
    a = Belief(t=1, n=1, dims=(2, 2, 1), weights=np.array([0.5, 0.5, 0.0, 0.0]))
    b = Belief(t=1, n=1, dims=(2, 2, 1), weights=np.array([0.5, 0.5, -0.0, 0.0]))
    assert a.canonical_key() == b.canonical_key()


def walk_paths(spec, tree):
    """Yield (node, gamma tables along the way, messages along the way)."""
    spaces = {t: PrescriptionSpace(spec, t) for t in range(1, tree.horizon + 1)}
    stack = [(node_id, [], []) for _, node_id in tree.roots]
    while stack:
        node_id, gammas, msgs = stack.pop()
        node = tree.node(node_id)
        yield node, gammas, msgs
        tables = spaces[node.t].decode(node.gamma_index).tables
        for z, child in node.children.items():
            stack.append((child, gammas + [tables], msgs + [z]))


@pytest.mark.parametrize("k", [0, 2, 3])
def test_propagated_beliefs_match_enumerated_posteriors(k):
    spec = instances.filter_instance(k)
    _, tree = solve_finite(spec)
    checked = 0
    for node, gammas, msgs in walk_paths(spec, tree):
        posterior = reference.bayes_posterior(spec, gammas, msgs)
        mine = np.zeros_like(node.belief.weights)
        for (x, ys, ms), p in posterior.items():
            flat = np.ravel_multi_index((x,) + ys + ms, node.belief.dims)
            mine[flat] = p
        tv = 0.5 * np.abs(mine - node.belief.weights).sum()
        assert tv <= 1e-9
        checked += 1
    # the walk covers every reachable path; at minimum one per stage
    assert checked >= tree.horizon
