"""Coordinator view of a decentralized problem.

The shared memory defines a fictitious coordinator that, at every stage,
sees only the messages appended so far and selects one *prescription*
per controller: a table mapping that controller's current observation
and local memory to an action.  The controllers become passive table
lookups, and the coordinator faces a centralized partially observed
problem whose state is the triple

    (chain state x, current observations y_1..y_n, local memories m_1..m_n)

and whose observation after acting is the joint emitted message.  This
module implements the state space, beliefs over it, prescription
spaces, and the belief update (condition on the emitted message, then
push through the dynamics).

Beliefs are dense vectors over the stage's state space, flattened
lexicographically as ``(x, y_1, ..., y_n, m_1, ..., m_n)`` with ``x``
most significant.  Joint messages flatten the per-controller message
indices the same way.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, SizeOverflow, ZeroProbabilityObservation
from .model import ProblemSpec

#: Message realizations at or below this mass are treated as impossible.
ZERO_MASS = 1e-15
#: Decimal places kept when hashing a belief into its canonical form.
CANON_DECIMALS = 12


@dataclass(frozen=True)
class CoordState:
    """One coordinator state: chain state, joint observation, joint memory."""

    x: int
    obs: tuple[int, ...]
    mem: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Belief:
    """Coordinator belief at the start of stage ``t``.

    ``dims`` is ``(|X|, |Y_1|, ..., |Y_n|, |M_1|, ..., |M_n|)`` and
    ``weights`` is the flattened probability vector over that grid.
    """

    t: int
    n: int
    dims: tuple[int, ...]
    weights: np.ndarray

    @property
    def support_id(self) -> str:
        return f"t{self.t}|" + "x".join(str(d) for d in self.dims)

    def canonical_key(self) -> tuple[str, bytes]:
        w = np.round(self.weights, CANON_DECIMALS) + 0.0  # +0.0 clears -0.0
        return (self.support_id, w.tobytes())


@dataclass(frozen=True, eq=False)
class ReducedBelief:
    """Belief with current observations marginalized out: over ``(x, m)``."""

    t: int
    n: int
    dims: tuple[int, ...]
    weights: np.ndarray

    @property
    def support_id(self) -> str:
        return f"r{self.t}|" + "x".join(str(d) for d in self.dims)

    def canonical_key(self) -> tuple[str, bytes]:
        w = np.round(self.weights, CANON_DECIMALS) + 0.0
        return (self.support_id, w.tobytes())


class StageLayout:
    """Precomputed index arrays for one stage's coordinator state space."""

    def __init__(self, spec: ProblemSpec, t: int):
        self.t = t
        nx = spec.state_space.cardinality
        ny = tuple(sp.cardinality for sp in spec.obs_spaces)
        nm = spec.mem_cards(t)
        self.dims = (nx,) + ny + nm
        self.nx, self.ny, self.nm = nx, ny, nm
        self.n_obs = int(np.prod(ny, dtype=np.int64))
        self.n_mem = int(np.prod(nm, dtype=np.int64))
        self.size = nx * self.n_obs * self.n_mem
        grid = np.unravel_index(np.arange(self.size), self.dims)
        self.x_of = grid[0].astype(np.int64)
        self.y_of = [g.astype(np.int64) for g in grid[1:1 + spec.n]]
        self.m_of = [g.astype(np.int64) for g in grid[1 + spec.n:]]
        self.act_strides = _strides(spec.action_cards)
        self.msg_cards = spec.msg_cards(t) if _has_msg_stage(spec, t) else None
        self.msg_strides = _strides(self.msg_cards) if self.msg_cards else None
        # product of the stage's observation kernels, (|X|, n_obs)
        prod = np.ones((nx, 1))
        for i in range(spec.n):
            k = spec.obs_kernel(i, t)
            prod = (prod[:, :, None] * k[:, None, :]).reshape(nx, -1)
        self.obs_prod = prod

    def joint_actions(self, tables) -> np.ndarray:
        """Flat joint action taken in every state under the given tables."""
        u = np.zeros(self.size, dtype=np.int64)
        for i, table in enumerate(tables):
            u += table[self.y_of[i], self.m_of[i]] * self.act_strides[i]
        return u

    def controller_actions(self, tables) -> list[np.ndarray]:
        return [table[self.y_of[i], self.m_of[i]] for i, table in enumerate(tables)]


def _strides(cards) -> np.ndarray:
    out = np.ones(len(cards), dtype=np.int64)
    for i in range(len(cards) - 2, -1, -1):
        out[i] = out[i + 1] * cards[i + 1]
    return out


def _has_msg_stage(spec: ProblemSpec, t: int) -> bool:
    if spec.mode == "discounted":
        return True
    return t <= len(spec.protocol.msg_spaces[0])


_layout_cache: "weakref.WeakKeyDictionary[ProblemSpec, dict]" = weakref.WeakKeyDictionary()


def stage_layout(spec: ProblemSpec, t: int) -> StageLayout:
    if spec.mode == "discounted":
        t = 1
    per_spec = _layout_cache.setdefault(spec, {})
    if t not in per_spec:
        per_spec[t] = StageLayout(spec, t)
    return per_spec[t]


def state_dims(spec: ProblemSpec, t: int) -> tuple[int, ...]:
    return stage_layout(spec, t).dims


def enumerate_states(spec: ProblemSpec, t: int) -> list[CoordState]:
    """All coordinator states at stage ``t`` in flat (lexicographic) order."""
    layout = stage_layout(spec, t)
    out = []
    for idx in range(layout.size):
        parts = np.unravel_index(idx, layout.dims)
        out.append(CoordState(
            x=int(parts[0]),
            obs=tuple(int(v) for v in parts[1:1 + spec.n]),
            mem=tuple(int(v) for v in parts[1 + spec.n:]),
        ))
    return out


def state_index(spec: ProblemSpec, state: CoordState, t: int) -> int:
    layout = stage_layout(spec, t)
    return int(np.ravel_multi_index((state.x,) + state.obs + state.mem, layout.dims))


# -- prescriptions --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointPrescription:
    """One coordinator action: an action table per controller.

    ``tables[i]`` has shape ``(|Y_i|, |M_i|)``; ``index`` is the flat
    position in the joint prescription space (controller 0 most
    significant, then table points in row-major ``(y, m)`` order, then
    actions as digits).
    """

    tables: tuple[np.ndarray, ...]
    index: int


class PrescriptionSpace:
    """The joint prescription space at one stage, indexable and iterable.

    Sizes are Python ints (they can exceed 2**63); use ``decode`` for
    random access and iteration for full enumeration.
    """

    def __init__(self, spec: ProblemSpec, t: int, cap: int | None = None):
        layout = stage_layout(spec, t)
        self.t = t
        self.n = spec.n
        self.shapes = [(layout.ny[i], layout.nm[i]) for i in range(spec.n)]
        self.n_actions = list(spec.action_cards)
        self.points = [ny * nm for ny, nm in self.shapes]
        self.sizes = [self.n_actions[i] ** self.points[i] for i in range(spec.n)]
        self.size = 1
        for s in self.sizes:
            self.size *= s
        if cap is not None and self.size > cap:
            raise SizeOverflow(
                f"joint prescription space at stage {t} has {self.size} elements, "
                f"cap is {cap}", size=self.size)

    def decode_controller(self, i: int, idx: int) -> np.ndarray:
        ny, nm = self.shapes[i]
        base = self.n_actions[i]
        flat = np.zeros(self.points[i], dtype=np.int64)
        for p in range(self.points[i] - 1, -1, -1):
            flat[p] = idx % base
            idx //= base
        return flat.reshape(ny, nm)

    def encode_controller(self, i: int, table: np.ndarray) -> int:
        base = self.n_actions[i]
        idx = 0
        for a in np.asarray(table).reshape(-1):
            idx = idx * base + int(a)
        return idx

    def decode(self, index: int) -> JointPrescription:
        parts = []
        rest = index
        for i in range(self.n - 1, -1, -1):
            parts.append(rest % self.sizes[i])
            rest //= self.sizes[i]
        parts.reverse()
        tables = tuple(self.decode_controller(i, parts[i]) for i in range(self.n))
        return JointPrescription(tables=tables, index=index)

    def encode(self, tables) -> int:
        idx = 0
        for i in range(self.n):
            idx = idx * self.sizes[i] + self.encode_controller(i, tables[i])
        return idx

    def __len__(self):
        return self.size

    def __iter__(self):
        for idx in range(self.size):
            yield self.decode(idx)


def prescription_space(spec: ProblemSpec, t: int, cap: int | None = None) -> PrescriptionSpace:
    return PrescriptionSpace(spec, t, cap=cap)


# -- single-state dynamics -------------------------------------------------


def emit_message(spec: ProblemSpec, state: CoordState, gamma: JointPrescription,
                 t: int) -> int:
    """Flat joint message emitted from ``state`` under ``gamma`` at stage ``t``."""
    layout = stage_layout(spec, t)
    if layout.msg_strides is None:
        raise InvalidParameter(f"stage {t} has no message stage")
    z = 0
    for i in range(spec.n):
        u = int(gamma.tables[i][state.obs[i], state.mem[i]])
        zi = int(spec.msg_map(i, t)[state.mem[i], state.obs[i], u])
        z += zi * int(layout.msg_strides[i])
    return z


def transition(spec: ProblemSpec, state: CoordState, gamma: JointPrescription,
               t: int) -> np.ndarray:
    """Distribution of the next coordinator state, flat over stage ``t + 1``."""
    next_t = t + 1 if spec.mode == "finite" else 1
    layout_next = stage_layout(spec, next_t)
    actions = [int(gamma.tables[i][state.obs[i], state.mem[i]]) for i in range(spec.n)]
    u_flat = 0
    for i in range(spec.n):
        u_flat += actions[i] * int(stage_layout(spec, t).act_strides[i])
    m_next = 0
    mem_strides = _strides(layout_next.nm)
    for i in range(spec.n):
        mi = int(spec.mem_update(i, t)[state.mem[i], state.obs[i], actions[i]])
        m_next += mi * int(mem_strides[i])
    row = spec.transition(t)[state.x, u_flat]  # (|X|,)
    out = np.zeros((layout_next.nx, layout_next.n_obs, layout_next.n_mem))
    out[:, :, m_next] = row[:, None] * layout_next.obs_prod
    return out.reshape(-1)


# -- beliefs ----------------------------------------------------------------


def initial_belief(spec: ProblemSpec) -> tuple[tuple[float, Belief], ...]:
    """Root belief nodes with their probabilities.

    Without an initial common observation there is a single root of
    probability one: ``P(x, y) = Q(x) * prod_i P_i(y_i | x)`` with all
    memories empty.  With one, the root splits into one node per signal
    value, each conditioned on that value.
    """
    layout = stage_layout(spec, 1)
    base = spec.initial_dist[:, None] * layout.obs_prod  # (|X|, n_obs)
    if spec.initial_common_obs is None:
        w = base.reshape(-1)
        total = w.sum()
        return ((1.0, Belief(t=1, n=spec.n, dims=layout.dims, weights=w / total)),)
    kernel = spec.initial_common_obs.kernel
    roots = []
    for ystar in range(spec.initial_common_obs.space.cardinality):
        w = (base * kernel[:, ystar][:, None]).reshape(-1)
        mass = float(w.sum())
        if mass <= ZERO_MASS:
            continue
        roots.append((mass, Belief(t=1, n=spec.n, dims=layout.dims, weights=w / mass)))
    return tuple(roots)


def expected_cost(spec: ProblemSpec, belief: Belief, gamma: JointPrescription) -> float:
    """Expected one-stage cost of applying ``gamma`` under ``belief``."""
    layout = stage_layout(spec, belief.t)
    u_flat = layout.joint_actions(gamma.tables)
    return float(belief.weights @ spec.cost(belief.t)[layout.x_of, u_flat])


def message_distribution(spec: ProblemSpec, belief: Belief,
                         gamma: JointPrescription) -> np.ndarray:
    """Law of the flat joint message emitted this stage; sums to one."""
    layout = stage_layout(spec, belief.t)
    if layout.msg_strides is None:
        raise InvalidParameter(f"stage {belief.t} has no message stage")
    acts = layout.controller_actions(gamma.tables)
    z = np.zeros(layout.size, dtype=np.int64)
    for i in range(spec.n):
        zi = spec.msg_map(i, belief.t)[layout.m_of[i], layout.y_of[i], acts[i]]
        z += zi * layout.msg_strides[i]
    n_msgs = int(np.prod(layout.msg_cards, dtype=np.int64))
    return np.bincount(z, weights=belief.weights, minlength=n_msgs)


def observation_probability(spec: ProblemSpec, belief: Belief,
                            gamma: JointPrescription, z: int) -> float:
    """Probability that the coordinator observes joint message ``z``."""
    return float(message_distribution(spec, belief, gamma)[z])


def eta_update(spec: ProblemSpec, belief: Belief, gamma: JointPrescription,
               z: int) -> Belief:
    """Next-stage belief given that ``gamma`` was prescribed and ``z`` emitted.

    Conditions the current belief on the states that emit ``z``, then
    pushes the conditional through the chain transition, the next
    stage's observation channels, and the deterministic memory updates.

    Raises:
        ZeroProbabilityObservation: ``z`` has probability <= 1e-15.
    """
    t = belief.t
    layout = stage_layout(spec, t)
    next_t = t + 1 if spec.mode == "finite" else 1
    layout_next = stage_layout(spec, next_t)

    acts = layout.controller_actions(gamma.tables)
    z_all = np.zeros(layout.size, dtype=np.int64)
    u_flat = np.zeros(layout.size, dtype=np.int64)
    m_next = np.zeros(layout.size, dtype=np.int64)
    mem_strides = _strides(layout_next.nm)
    for i in range(spec.n):
        zi = spec.msg_map(i, t)[layout.m_of[i], layout.y_of[i], acts[i]]
        z_all += zi * layout.msg_strides[i]
        u_flat += acts[i] * layout.act_strides[i]
        m_next += spec.mem_update(i, t)[layout.m_of[i], layout.y_of[i], acts[i]] \
            * mem_strides[i]

    mask = (z_all == z) & (belief.weights > 0)
    mass = float(belief.weights[mask].sum())
    if mass <= ZERO_MASS:
        raise ZeroProbabilityObservation(
            f"message {z} at stage {t} has probability {mass!r}")

    kernel = spec.transition(t)
    out = np.zeros((layout_next.nx, layout_next.n_obs, layout_next.n_mem))
    for s in np.nonzero(mask)[0]:
        row = kernel[layout.x_of[s], u_flat[s]]
        out[:, :, m_next[s]] += (belief.weights[s] / mass) \
            * row[:, None] * layout_next.obs_prod
    w = out.reshape(-1)
    return Belief(t=next_t, n=spec.n, dims=layout_next.dims, weights=w / w.sum())


def chi(belief: Belief) -> ReducedBelief:
    """Marginalize the current observations out of a coordinator belief."""
    nx = belief.dims[0]
    n_obs = int(np.prod(belief.dims[1:1 + belief.n], dtype=np.int64))
    n_mem = int(np.prod(belief.dims[1 + belief.n:], dtype=np.int64))
    w = belief.weights.reshape(nx, n_obs, n_mem).sum(axis=1)
    dims = (belief.dims[0],) + belief.dims[1 + belief.n:]
    return ReducedBelief(t=belief.t, n=belief.n, dims=dims, weights=w.reshape(-1))


def zeta(spec: ProblemSpec, reduced: ReducedBelief) -> Belief:
    """Reattach the stage's observation channels to a reduced belief.

    Inverse of :func:`chi` on beliefs reachable by the coordinator: the
    current observations are conditionally independent of the memories
    given the chain state, with the stage's kernel law.
    """
    layout = stage_layout(spec, reduced.t)
    w = reduced.weights.reshape(layout.nx, layout.n_mem)
    full = w[:, None, :] * layout.obs_prod[:, :, None]
    return Belief(t=reduced.t, n=spec.n, dims=layout.dims,
                  weights=full.reshape(-1))
