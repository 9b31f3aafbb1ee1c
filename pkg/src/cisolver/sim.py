"""Monte Carlo execution of solved policies.

Rollouts are vectorized over episodes and driven by counter-based
randomness: every primitive draw (initial state, common signal, each
stage's transition, each controller's observation) has its own Philox
stream keyed by ``(seed, draw kind, stage, controller)``, and episode
``e`` always consumes element ``e`` of that stream.  Draws therefore do
not depend on how episodes are chunked across threads, and two policies
rolled out under the same seed see the same primitive randomness, which
is what makes paired comparisons exact.

Sampling from a categorical row uses the inverse CDF, so equal rows and
equal uniforms give equal samples bitwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coordinator import message_distribution, stage_layout, zeta, Belief, PrescriptionSpace
from .dp import PolicyTree
from .errors import InvalidParameter, UnreachableInformation
from .model import ControlStrategy, ProblemSpec

_AUDIT_TOL = 1e-15

_KIND_INIT = 0
_KIND_COMMON = 1
_KIND_OBS = 2
_KIND_TRANS = 3


@dataclass
class Trajectory:
    """One recorded episode."""

    episode: int
    states: list[int]
    obs: list[tuple[int, ...]]
    actions: list[tuple[int, ...]]
    messages: list[int]
    memories: list[tuple[int, ...]]
    nodes: list[int]
    cost: float


@dataclass
class SimReport:
    episodes: int
    seed: int
    mean: float
    stderr: float
    violations: int
    trajectories: list[Trajectory] | None = None


@dataclass
class PairedReport:
    episodes: int
    seed: int
    identical: bool
    divergences: list[tuple[int, int, str]]  # (episode, stage, field)


def _stream(seed: int, kind: int, t: int = 0, i: int = 0) -> np.random.Generator:
    key = ((seed & ((1 << 64) - 1)) << 64) | (kind << 40) | (t << 20) | i
    return np.random.Generator(np.random.Philox(key=key))


def _draws(spec: ProblemSpec, seed: int, episodes: int) -> dict:
    out = {"init": _stream(seed, _KIND_INIT).random(episodes)}
    if spec.initial_common_obs is not None:
        out["common"] = _stream(seed, _KIND_COMMON).random(episodes)
    for t in range(1, spec.horizon + 1):
        for i in range(spec.n):
            out[("obs", t, i)] = _stream(seed, _KIND_OBS, t, i).random(episodes)
        if t < spec.horizon:
            out[("trans", t)] = _stream(seed, _KIND_TRANS, t).random(episodes)
    return out


def _inv_cdf(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Sample one categorical value per row via the inverse CDF."""
    cum = np.cumsum(rows, axis=-1)
    idx = (cum < u[..., None]).sum(axis=-1)
    return np.minimum(idx, rows.shape[-1] - 1).astype(np.int64)


class _ExecPlan:
    """A policy compiled to dense per-stage lookup arrays."""

    def __init__(self, spec: ProblemSpec, policy):
        if spec.mode != "finite":
            raise InvalidParameter("rollouts require a finite-horizon problem")
        self.spec = spec
        T = spec.horizon
        if isinstance(policy, PolicyTree):
            stages = policy.stages
            roots = policy.roots
            get_tables = self._tree_tables(spec, policy)
            self.audited = True
        elif isinstance(policy, ControlStrategy):
            stages = policy.stages
            roots = policy.roots
            get_tables = lambda nd, t: nd.tables
            self.audited = False
        else:
            raise InvalidParameter(f"cannot execute policy of type {type(policy).__name__}")
        if getattr(policy, "horizon", None) != T or getattr(policy, "n", spec.n) != spec.n:
            raise InvalidParameter("policy shape does not match the problem")

        self.local = []  # per stage: node_id -> local index
        self.actions = []  # per stage, per controller: (nodes, ny, nm)
        self.children = []  # per stage t < T: (nodes, NZ) local ids at t+1, -1 missing
        self.msg_probs = []  # per stage t < T: (nodes, NZ) recomputed, or None
        for t in range(1, T + 1):
            nodes = stages[t - 1]
            layout = stage_layout(spec, t)
            self.local.append({nd.node_id: k for k, nd in enumerate(nodes)})
            acts = [np.zeros((len(nodes), layout.ny[i], layout.nm[i]), dtype=np.int64)
                    for i in range(spec.n)]
            for k, nd in enumerate(nodes):
                tables = get_tables(nd, t)
                for i in range(spec.n):
                    acts[i][k] = tables[i]
            self.actions.append(acts)
        for t in range(1, T):
            nodes = stages[t - 1]
            nz = int(np.prod(spec.msg_cards(t), dtype=np.int64))
            table = np.full((len(nodes), nz), -1, dtype=np.int64)
            for k, nd in enumerate(nodes):
                for z, child in nd.children.items():
                    table[k, z] = self.local[t][child]
            self.children.append(table)
            if self.audited:
                probs = np.zeros((len(nodes), nz))
                space = PrescriptionSpace(spec, t)
                for k, nd in enumerate(nodes):
                    belief = nd.belief
                    if not isinstance(belief, Belief):
                        belief = zeta(spec, belief)
                    gamma = space.decode(nd.gamma_index)
                    probs[k] = message_distribution(spec, belief, gamma)
                self.msg_probs.append(probs)
            else:
                self.msg_probs.append(None)

        if spec.initial_common_obs is None:
            self.root_map = np.full(1, self.local[0][roots[0][1]], dtype=np.int64)
        else:
            card = spec.initial_common_obs.space.cardinality
            self.root_map = np.full(card, -1, dtype=np.int64)
            pos = 0
            for ystar in range(card):
                mass = float(spec.initial_dist @ spec.initial_common_obs.kernel[:, ystar])
                if mass <= _AUDIT_TOL:
                    continue
                self.root_map[ystar] = self.local[0][roots[pos][1]]
                pos += 1

    @staticmethod
    def _tree_tables(spec, tree):
        spaces = {t: PrescriptionSpace(spec, t) for t in range(1, tree.horizon + 1)}
        cache = {}

        def get(nd, t):
            if nd.node_id not in cache:
                cache[nd.node_id] = spaces[t].decode(nd.gamma_index).tables
            return cache[nd.node_id]

        return get


class _Cursor:
    """Per-episode execution state for one policy over one episode slice."""

    def __init__(self, plan: _ExecPlan, x0, draws, lo, hi):
        spec = plan.spec
        self.plan = plan
        self.x = x0
        if spec.initial_common_obs is not None:
            rows = spec.initial_common_obs.kernel[self.x]
            ystar = _inv_cdf(rows, draws["common"][lo:hi])
            self.node = plan.root_map[ystar]
        else:
            self.node = np.repeat(plan.root_map[0], hi - lo)
        self.y = [_inv_cdf(spec.obs_kernel(i, 1)[self.x], draws[("obs", 1, i)][lo:hi])
                  for i in range(spec.n)]
        self.m = [np.zeros(hi - lo, dtype=np.int64) for _ in range(spec.n)]
        self.cost = np.zeros(hi - lo)
        self.violations = 0

    def act(self, t):
        spec = self.plan.spec
        layout = stage_layout(spec, t)
        acts = [self.plan.actions[t - 1][i][self.node, self.y[i], self.m[i]]
                for i in range(spec.n)]
        u_flat = np.zeros(len(self.x), dtype=np.int64)
        for i in range(spec.n):
            u_flat += acts[i] * layout.act_strides[i]
        self.cost += spec.cost(t)[self.x, u_flat]
        return acts, u_flat

    def advance(self, t, acts, u_flat, draws, lo, hi, mark_missing=False):
        spec = self.plan.spec
        layout = stage_layout(spec, t)
        z = np.zeros(len(self.x), dtype=np.int64)
        for i in range(spec.n):
            zi = spec.msg_map(i, t)[self.m[i], self.y[i], acts[i]]
            z += zi * layout.msg_strides[i]
        probs = self.plan.msg_probs[t - 1]
        if probs is not None:
            self.violations += int((probs[self.node, z] <= _AUDIT_TOL).sum())
        child = self.plan.children[t - 1][self.node, z]
        missing = child < 0
        if missing.any():
            if not mark_missing:
                ep = int(np.nonzero(missing)[0][0])
                raise UnreachableInformation(
                    f"episode {lo + ep}: no policy entry at stage {t} for message "
                    f"{int(z[ep])} from node index {int(self.node[ep])}")
            child = np.where(missing, 0, child)  # parked; caller marks divergence
        for i in range(spec.n):
            self.m[i] = spec.mem_update(i, t)[self.m[i], self.y[i], acts[i]]
        self.x = _inv_cdf(spec.transition(t)[self.x, u_flat],
                          draws[("trans", t)][lo:hi])
        self.y = [_inv_cdf(spec.obs_kernel(i, t + 1)[self.x],
                           draws[("obs", t + 1, i)][lo:hi])
                  for i in range(spec.n)]
        self.node = child
        return z, missing


def _run_chunk(plan: _ExecPlan, draws, lo, hi, record):
    spec = plan.spec
    x0 = _inv_cdf(np.broadcast_to(spec.initial_dist, (hi - lo, len(spec.initial_dist))),
                  draws["init"][lo:hi])
    cur = _Cursor(plan, x0, draws, lo, hi)
    rec = {"x": [], "y": [], "u": [], "z": [], "m": [], "node": []} if record else None
    for t in range(1, spec.horizon + 1):
        acts, u_flat = cur.act(t)
        if record:
            rec["x"].append(cur.x.copy())
            rec["y"].append([yi.copy() for yi in cur.y])
            rec["u"].append([a.copy() for a in acts])
            rec["m"].append([mi.copy() for mi in cur.m])
            rec["node"].append(cur.node.copy())
        if t == spec.horizon:
            break
        z, _ = cur.advance(t, acts, u_flat, draws, lo, hi)
        if record:
            rec["z"].append(z.copy())
    return cur.cost, cur.violations, rec


def rollout(spec: ProblemSpec, policy, seed: int, episodes: int,
            threads: int = 1, record: bool = False) -> SimReport:
    """Estimate the expected cost of a policy by simulation.

    ``policy`` is a :class:`PolicyTree` or :class:`ControlStrategy`.
    For trees, the emitted message's probability under the node's own
    belief is recomputed at every step and counted as a violation
    whenever it is not positive (an on-policy consistency audit; the
    report's ``violations`` must be zero for a correctly solved pair).

    Results are independent of ``threads``.

    Raises:
        UnreachableInformation: a realized message has no policy entry.
    """
    if episodes < 1:
        raise InvalidParameter(f"episodes must be >= 1, got {episodes}")
    if seed < 0:
        raise InvalidParameter(f"seed must be >= 0, got {seed}")
    plan = _ExecPlan(spec, policy)
    draws = _draws(spec, seed, episodes)
    threads = max(1, int(threads))
    chunk = math.ceil(episodes / threads)
    ranges = [(lo, min(lo + chunk, episodes)) for lo in range(0, episodes, chunk)]
    if len(ranges) == 1:
        parts = [_run_chunk(plan, draws, 0, episodes, record)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda r: _run_chunk(plan, draws, r[0], r[1], record), ranges))
    costs = np.concatenate([p[0] for p in parts])
    violations = sum(p[1] for p in parts)
    mean = float(costs.mean())
    stderr = float(costs.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    trajectories = None
    if record:
        trajectories = []
        for (lo, hi), (_, _, rec) in zip(ranges, parts):
            for e in range(hi - lo):
                T = spec.horizon
                trajectories.append(Trajectory(
                    episode=lo + e,
                    states=[int(rec["x"][t][e]) for t in range(T)],
                    obs=[tuple(int(rec["y"][t][i][e]) for i in range(spec.n))
                         for t in range(T)],
                    actions=[tuple(int(rec["u"][t][i][e]) for i in range(spec.n))
                             for t in range(T)],
                    messages=[int(rec["z"][t][e]) for t in range(T - 1)],
                    memories=[tuple(int(rec["m"][t][i][e]) for i in range(spec.n))
                              for t in range(T)],
                    nodes=[int(rec["node"][t][e]) for t in range(T)],
                    cost=float(costs[lo + e]),
                ))
    return SimReport(episodes=episodes, seed=seed, mean=mean, stderr=stderr,
                     violations=violations, trajectories=trajectories)


def paired_rollout(spec: ProblemSpec, tree: PolicyTree, strategy: ControlStrategy,
                   seed: int, episodes: int) -> PairedReport:
    """Run a tree and a strategy on identical primitive randomness.

    Both policies see the same initial states, noise and observation
    draws; if they encode the same behavior, every recorded quantity
    (actions, messages, memories, chain states, observations) agrees on
    every episode.  Divergences are reported at the earliest affected
    stage of each episode.
    """
    if episodes < 1:
        raise InvalidParameter(f"episodes must be >= 1, got {episodes}")
    plan_a = _ExecPlan(spec, tree)
    plan_b = _ExecPlan(spec, strategy)
    draws = _draws(spec, seed, episodes)
    x0 = _inv_cdf(np.broadcast_to(spec.initial_dist, (episodes, len(spec.initial_dist))),
                  draws["init"][0:episodes])
    a = _Cursor(plan_a, x0.copy(), draws, 0, episodes)
    b = _Cursor(plan_b, x0.copy(), draws, 0, episodes)
    diverged = np.full(episodes, 0, dtype=np.int64)  # 0 = still identical
    divergences: list[tuple[int, int, str]] = []

    def note(mask, t, field):
        fresh = np.nonzero(mask & (diverged == 0))[0]
        for e in fresh:
            divergences.append((int(e), t, field))
        diverged[mask] = np.maximum(diverged[mask], 1)

    for t in range(1, spec.horizon + 1):
        acts_a, u_a = a.act(t)
        acts_b, u_b = b.act(t)
        note(u_a != u_b, t, "action")
        if t == spec.horizon:
            break
        z_a, miss_a = a.advance(t, acts_a, u_a, draws, 0, episodes, mark_missing=True)
        z_b, miss_b = b.advance(t, acts_b, u_b, draws, 0, episodes, mark_missing=True)
        note(z_a != z_b, t, "message")
        note(miss_a | miss_b, t, "node")
        mem_neq = np.zeros(episodes, dtype=bool)
        for i in range(spec.n):
            mem_neq |= a.m[i] != b.m[i]
        note(mem_neq, t, "memory")
        note(a.x != b.x, t, "state")
        obs_neq = np.zeros(episodes, dtype=bool)
        for i in range(spec.n):
            obs_neq |= a.y[i] != b.y[i]
        note(obs_neq, t, "obs")
    divergences.sort()
    return PairedReport(episodes=episodes, seed=seed,
                        identical=not divergences, divergences=divergences)
