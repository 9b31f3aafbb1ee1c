"""Exact dynamic programming over reachable coordinator beliefs.

The coordinator's belief is a sufficient statistic: the optimal value
satisfies, for every reachable belief ``pi`` at stage ``t``,

    V_t(pi) = min over joint prescriptions gamma of
              E[cost | pi, gamma] + sum_z P(z | pi, gamma) * V_{t+1}(eta(pi, gamma, z))

with ``V_{T+1} = 0``.  The solver grows the reachable belief set forward
from the root (memoizing beliefs by canonical form), then runs the
recursion backward, recording one prescription per belief node.

Two exact reductions keep the enumeration small without changing any
value or argmin:

* *Support restriction*: two prescriptions that agree on every
  ``(y, m)`` point carrying belief mass have identical cost, message
  law and successor beliefs, so only one representative per equivalence
  class is evaluated.  The representative fixes action 0 on off-support
  points and is the smallest full prescription index in its class, and
  classes are enumerated in increasing representative order, so the
  documented smallest-index tie-break is preserved exactly.
* *Observation marginalization* (the reduced variant): beliefs are
  stored over ``(x, m)`` only and the current observations are
  reattached through the stage's kernels when a node is expanded.  On
  reachable beliefs this is lossless, so values agree with the full
  variant to floating-point accuracy and node counts can only shrink.

Discounted problems use the same expansion on stationary tables and a
depth-limited fixed-point evaluation whose truncation depth is chosen
from the discount factor so the tail is below the requested accuracy.
"""

from __future__ import annotations

import itertools
import math
import time
import weakref
from dataclasses import dataclass, field

import numpy as np

from .coordinator import (
    ZERO_MASS,
    Belief,
    JointPrescription,
    PrescriptionSpace,
    ReducedBelief,
    chi,
    initial_belief,
    stage_layout,
    zeta,
)
from .errors import Infeasible, InvalidParameter, SizeOverflow
from .model import ControlStrategy, ProblemSpec, StrategyNode

DEFAULT_PRESCRIPTION_CAP = 10_000_000


@dataclass
class TreeNode:
    """One reachable belief with its chosen prescription and value."""

    node_id: int
    t: int
    belief: Belief | ReducedBelief
    gamma_index: int | None = None
    value: float = math.nan
    children: dict[int, int] = field(default_factory=dict)  # message -> node_id


@dataclass
class PolicyTree:
    """Optimal coordinator policy over the reachable belief tree."""

    variant: str  # "full" or "reduced"
    horizon: int
    roots: tuple[tuple[float, int], ...]  # (probability, node_id)
    stages: list[list[TreeNode]]

    def node(self, node_id: int) -> TreeNode:
        return self._index[node_id]

    def finalize(self):
        self._index = {nd.node_id: nd for stage in self.stages for nd in stage}
        return self


@dataclass
class PolicyEntry:
    belief: Belief
    gamma_index: int
    value: float
    children: dict[int, bytes]  # message -> canonical key of successor


@dataclass
class StationaryPolicy:
    """Greedy stationary prescription rule from the truncated fixed point."""

    epsilon: float
    iterations: int
    residual: float
    tail_bound: float
    value: float
    entries: list[PolicyEntry]


@dataclass
class ValueReport:
    """What the solver did: the value and the work it took."""

    value: float
    variant: str
    mode: str
    stage_nodes: list[int]
    prescription_space_sizes: list[int]
    expanded_classes: list[int]
    runtime_s: float
    iterations: int | None = None
    residual: float | None = None
    tail_bound: float | None = None


# -- prescription classes ---------------------------------------------------


class _ClassStructure:
    """Weight-independent part of the class enumeration at one support.

    Everything here depends only on the stage and the support pattern,
    so belief nodes sharing a support share one structure: ``reps[c]``
    is the smallest full prescription index in class ``c``;
    ``u_flat[c, s]`` / ``z_flat[c, s]`` / ``m_next[c, s]`` give the
    joint action, message and next joint memory for support state
    ``s``; ``cost_matrix[c, s]`` is the stage cost there.  Classes are
    ordered by increasing representative.
    """

    def __init__(self, spec: ProblemSpec, t: int, support: np.ndarray,
                 terminal: bool):
        layout = stage_layout(spec, t)
        n = spec.n
        x_sup = layout.x_of[support]

        per_counts = []
        assign = []
        full_points = []
        for i in range(n):
            nu = spec.action_cards[i]
            points = layout.y_of[i][support] * layout.nm[i] + layout.m_of[i][support]
            uniq, inv = np.unique(points, return_inverse=True)
            a = np.array(list(itertools.product(range(nu), repeat=len(uniq))),
                         dtype=np.int64).reshape(nu ** len(uniq), len(uniq))
            per_counts.append(a.shape[0])
            assign.append((a, inv, uniq))
            full_points.append(layout.ny[i] * layout.nm[i])

        total = 1
        for c in per_counts:
            total *= c
        if total * len(support) > 50_000_000:
            raise SizeOverflow(
                f"class enumeration at stage {t} needs {total} x {len(support)} "
                "action entries; lower the prescription cap or shrink the instance",
                size=total)
        self.count = total

        suffix = [1] * n
        for i in range(n - 2, -1, -1):
            suffix[i] = suffix[i + 1] * per_counts[i + 1]

        S = len(support)
        u_flat = np.zeros((total, S), dtype=np.int64)
        z_flat = np.zeros((total, S), dtype=np.int64) if not terminal else None
        m_next = np.zeros((total, S), dtype=np.int64) if not terminal else None
        mem_strides = None
        if not terminal:
            next_t = t + 1 if spec.mode == "finite" else 1
            layout_next = stage_layout(spec, next_t)
            mem_strides = np.ones(n, dtype=np.int64)
            for i in range(n - 2, -1, -1):
                mem_strides[i] = mem_strides[i + 1] * layout_next.nm[i + 1]

        class_ids = np.arange(total, dtype=np.int64)
        for i in range(n):
            a, inv, _ = assign[i]
            idx = (class_ids // suffix[i]) % per_counts[i]
            acts = a[idx][:, inv]  # (total, S)
            u_flat += acts * layout.act_strides[i]
            if not terminal:
                mi, yi = layout.m_of[i][support], layout.y_of[i][support]
                z_flat += spec.msg_map(i, t)[mi, yi, acts] * layout.msg_strides[i]
                m_next += spec.mem_update(i, t)[mi, yi, acts] * mem_strides[i]

        self.u_flat, self.z_flat, self.m_next = u_flat, z_flat, m_next
        self.cost_matrix = spec.cost(t)[x_sup[None, :], u_flat]
        self.support, self.x_sup = support, x_sup

        # full-index representative per class, as exact Python ints
        per_reps = []
        for i in range(n):
            a, _, uniq = assign[i]
            nu = spec.action_cards[i]
            place = [nu ** (full_points[i] - 1 - int(p)) for p in uniq]
            per_reps.append([sum(int(row[k]) * place[k] for k in range(len(uniq)))
                             for row in a])
        full_sizes = [spec.action_cards[i] ** full_points[i] for i in range(n)]
        reps = []
        for c in range(total):
            rep = 0
            for i in range(n):
                rep = rep * full_sizes[i] + per_reps[i][(c // suffix[i]) % per_counts[i]]
            reps.append(rep)
        self.reps = reps


_structure_cache: "weakref.WeakKeyDictionary[ProblemSpec, dict]" = \
    weakref.WeakKeyDictionary()


def _class_structure(spec: ProblemSpec, t: int, support: np.ndarray,
                     terminal: bool) -> _ClassStructure:
    per_spec = _structure_cache.setdefault(spec, {})
    key = (t if spec.mode == "finite" else 1, terminal, support.tobytes())
    if key not in per_spec:
        per_spec[key] = _ClassStructure(spec, t, support, terminal)
    return per_spec[key]


class _ClassEnumeration:
    """Support-restricted prescription classes at one belief node.

    Shares the structural tables (actions, messages, representatives)
    with every other node on the same support; only the expected stage
    cost ``costs[c]`` depends on the belief weights.
    """

    def __init__(self, spec: ProblemSpec, t: int, weights: np.ndarray,
                 support: np.ndarray, cap: int, terminal: bool):
        structure = _class_structure(spec, t, support, terminal)
        if structure.count > cap:
            raise SizeOverflow(
                f"{structure.count} support-restricted prescription classes "
                f"at stage {t}, cap is {cap}", size=structure.count)
        self.count = structure.count
        self.reps = structure.reps
        self.u_flat = structure.u_flat
        self.z_flat = structure.z_flat
        self.m_next = structure.m_next
        self.support = support
        self.x_sup = structure.x_sup
        self.w_sup = weights[support]
        self.costs = structure.cost_matrix @ self.w_sup


def _child_weights(spec, t, enum: _ClassEnumeration, c: int):
    """Successor beliefs of class ``c``: list of (z, mass, normalized weights)."""
    next_t = t + 1 if spec.mode == "finite" else 1
    layout_next = stage_layout(spec, next_t)
    kernel = spec.transition(t)
    out = []
    zs = enum.z_flat[c]
    for z in np.unique(zs):
        sel = np.nonzero(zs == z)[0]
        mass = float(enum.w_sup[sel].sum())
        if mass <= ZERO_MASS:
            continue
        child = np.zeros((layout_next.nx, layout_next.n_obs, layout_next.n_mem))
        for k in sel:
            row = kernel[enum.x_sup[k], enum.u_flat[c, k]]
            child[:, :, enum.m_next[c, k]] += (enum.w_sup[k] / mass) \
                * row[:, None] * layout_next.obs_prod
        w = child.reshape(-1)
        out.append((int(z), mass, w / w.sum()))
    return out


# -- finite horizon ----------------------------------------------------------


class _StageTable:
    """Deduplicated beliefs of one stage, in creation order."""

    def __init__(self):
        self.keys = {}
        self.weights = []

    def intern(self, key, weights) -> int:
        idx = self.keys.get(key)
        if idx is None:
            idx = len(self.weights)
            self.keys[key] = idx
            self.weights.append(weights)
        return idx


def _solve_finite(spec: ProblemSpec, reduced: bool, cap: int):
    if spec.mode != "finite":
        raise InvalidParameter("finite-horizon solver requires mode='finite'")
    started = time.perf_counter()
    T = spec.horizon
    n = spec.n

    def node_key(weights, t):
        if reduced:
            layout = stage_layout(spec, t)
            red = weights.reshape(layout.nx, layout.n_obs, layout.n_mem).sum(axis=1)
            red = red.reshape(-1)
            return (t, (np.round(red, 12) + 0.0).tobytes()), red
        return (t, (np.round(weights, 12) + 0.0).tobytes()), weights

    def lift(stored, t):
        if not reduced:
            return stored
        layout = stage_layout(spec, t)
        full = stored.reshape(layout.nx, layout.n_mem)[:, None, :] \
            * layout.obs_prod[:, :, None]
        return full.reshape(-1)

    stages = [_StageTable() for _ in range(T)]
    roots = []
    for prob, bel in initial_belief(spec):
        key, stored = node_key(bel.weights, 1)
        roots.append((float(prob), stages[0].intern(key, stored)))

    expansions: list[list] = [[] for _ in range(T)]
    expanded_classes = [0] * T
    for t in range(1, T + 1):
        table = stages[t - 1]
        idx = 0
        while idx < len(table.weights):
            w_full = lift(table.weights[idx], t)
            support = np.nonzero(w_full > ZERO_MASS)[0]
            enum = _ClassEnumeration(spec, t, w_full, support, cap, terminal=(t == T))
            expanded_classes[t - 1] += enum.count
            branches = None
            if t < T:
                branches = []
                for c in range(enum.count):
                    per_class = []
                    for z, mass, child_w in _child_weights(spec, t, enum, c):
                        key, stored = node_key(child_w, t + 1)
                        per_class.append((z, mass, stages[t].intern(key, stored)))
                    branches.append(per_class)
            expansions[t - 1].append((enum.reps, enum.costs, branches))
            idx += 1

    values = [np.zeros(len(stages[t - 1].weights)) for t in range(1, T + 1)]
    chosen = [[None] * len(stages[t - 1].weights) for t in range(1, T + 1)]
    for t in range(T, 0, -1):
        for idx, (reps, costs, branches) in enumerate(expansions[t - 1]):
            if branches is None:
                q = costs
            else:
                q = costs.copy()
                for c, per_class in enumerate(branches):
                    q[c] += sum(mass * values[t][child] for _, mass, child in per_class)
            best = int(np.argmin(q))  # first occurrence = smallest representative
            values[t - 1][idx] = q[best]
            chosen[t - 1][idx] = (reps[best],
                                  {} if branches is None else
                                  {z: child for z, _, child in branches[best]})

    total = sum(prob * values[0][idx] for prob, idx in roots)

    # assemble the tree with globally sequential node ids, stage by stage
    node_ids = []
    counter = 0
    for t in range(1, T + 1):
        ids = list(range(counter, counter + len(stages[t - 1].weights)))
        counter += len(ids)
        node_ids.append(ids)
    tree_stages = []
    for t in range(1, T + 1):
        layout = stage_layout(spec, t)
        nodes = []
        for idx, stored in enumerate(stages[t - 1].weights):
            rep, children = chosen[t - 1][idx]
            if reduced:
                bel = ReducedBelief(t=t, n=n, dims=(layout.nx,) + layout.nm,
                                    weights=stored)
            else:
                bel = Belief(t=t, n=n, dims=layout.dims, weights=stored)
            nodes.append(TreeNode(
                node_id=node_ids[t - 1][idx], t=t, belief=bel,
                gamma_index=rep, value=float(values[t - 1][idx]),
                children={z: node_ids[t][child] for z, child in children.items()},
            ))
        tree_stages.append(nodes)

    tree = PolicyTree(
        variant="reduced" if reduced else "full",
        horizon=T,
        roots=tuple((prob, node_ids[0][idx]) for prob, idx in roots),
        stages=tree_stages,
    ).finalize()
    report = ValueReport(
        value=float(total),
        variant=tree.variant,
        mode="finite",
        stage_nodes=[len(s) for s in tree_stages],
        prescription_space_sizes=[PrescriptionSpace(spec, t).size
                                  for t in range(1, T + 1)],
        expanded_classes=expanded_classes,
        runtime_s=time.perf_counter() - started,
    )
    return report, tree


def solve_finite(spec: ProblemSpec, cap_prescriptions: int = DEFAULT_PRESCRIPTION_CAP):
    """Solve a finite-horizon problem exactly over full coordinator beliefs.

    Returns ``(ValueReport, PolicyTree)``.  Ties between prescriptions
    with equal cost-to-go break toward the smallest full prescription
    index.  Message branches of probability <= 1e-15 are pruned.

    Raises:
        SizeOverflow: a node needs more prescription classes than
            ``cap_prescriptions``.
    """
    return _solve_finite(spec, reduced=False, cap=cap_prescriptions)


def solve_finite_reduced(spec: ProblemSpec,
                         cap_prescriptions: int = DEFAULT_PRESCRIPTION_CAP):
    """Same recursion over observation-marginalized beliefs ``(x, m)``."""
    return _solve_finite(spec, reduced=True, cap=cap_prescriptions)


# -- strategy extraction ------------------------------------------------------


def extract_control_strategy(spec: ProblemSpec, tree: PolicyTree) -> ControlStrategy:
    """Read the per-controller strategies off a solved policy tree.

    Controller ``i`` acts at stage ``t`` by looking up the current tree
    node (a function of the shared memory), its observation and its
    local memory in the node's action table; the emitted joint message
    selects the next node.
    """
    stages = []
    for t in range(1, tree.horizon + 1):
        space = PrescriptionSpace(spec, t)
        nodes = []
        for nd in tree.stages[t - 1]:
            gamma = space.decode(nd.gamma_index)
            nodes.append(StrategyNode(
                node_id=nd.node_id, t=t, tables=gamma.tables,
                children=dict(nd.children)))
        stages.append(nodes)
    return ControlStrategy(n=spec.n, horizon=tree.horizon,
                           roots=tree.roots, stages=stages).finalize()


# -- discounted ---------------------------------------------------------------


def truncation_depth(discount: float, epsilon: float, max_abs_cost: float) -> int:
    """Smallest depth whose geometric cost tail is below ``epsilon``."""
    if discount == 0.0 or max_abs_cost == 0.0:
        return 1
    k = math.ceil(math.log(epsilon * (1.0 - discount) / max_abs_cost)
                  / math.log(discount))
    return max(1, k)


def solve_discounted(spec: ProblemSpec, epsilon: float = 1e-4,
                     cap_prescriptions: int = DEFAULT_PRESCRIPTION_CAP,
                     cap_beliefs: int = 100_000):
    """Evaluate the discounted fixed point to accuracy ``epsilon``.

    Expands the reachable stationary beliefs and evaluates the Bellman
    operator to the truncation depth implied by the discount factor;
    the returned value is within ``epsilon`` of the fixed point
    (``tail_bound`` certifies the truncation error).  Returns
    ``(ValueReport, StationaryPolicy)``.

    Raises:
        Infeasible: more than ``cap_beliefs`` distinct beliefs reached.
    """
    if spec.mode != "discounted":
        raise InvalidParameter("fixed-point solver requires mode='discounted'")
    started = time.perf_counter()
    beta = spec.discount
    max_c = spec.max_abs_cost
    K = truncation_depth(beta, epsilon, max_c)
    tail = 0.0 if beta == 0.0 else (beta ** K) * max_c / (1.0 - beta)

    layout = stage_layout(spec, 1)
    cache: dict[bytes, tuple] = {}  # key -> (weights, enum-lite)
    order: list[bytes] = []

    def intern(weights) -> bytes:
        key = (np.round(weights, 12) + 0.0).tobytes()
        if key not in cache:
            if len(cache) >= cap_beliefs:
                raise Infeasible(
                    f"reachable stationary beliefs exceed cap {cap_beliefs}",
                    count=len(cache))
            cache[key] = [weights, None]
            order.append(key)
        return key

    def expansion(key):
        entry = cache[key]
        if entry[1] is None:
            w = entry[0]
            support = np.nonzero(w > ZERO_MASS)[0]
            enum = _ClassEnumeration(spec, 1, w, support, cap_prescriptions,
                                     terminal=False)
            branches = []
            for c in range(enum.count):
                branches.append([(z, mass, intern(cw))
                                 for z, mass, cw in _child_weights(spec, 1, enum, c)])
            entry[1] = (enum.reps, enum.costs, branches)
        return entry[1]

    memo: dict[tuple[bytes, int], float] = {}

    def value(key, k) -> float:
        if k <= 0:
            return 0.0
        got = memo.get((key, k))
        if got is not None:
            return got
        reps, costs, branches = expansion(key)
        best = math.inf
        for c in range(len(reps)):
            q = costs[c] + beta * sum(mass * value(child, k - 1)
                                      for _, mass, child in branches[c])
            if q < best:
                best = q
        memo[(key, k)] = best
        return best

    roots = initial_belief(spec)
    root_keys = [(prob, intern(bel.weights)) for prob, bel in roots]
    v_top = sum(prob * value(key, K) for prob, key in root_keys)
    v_prev = sum(prob * value(key, K - 1) for prob, key in root_keys)
    residual = abs(v_top - v_prev)

    entries = []
    for key in list(order):  # snapshot: the sweep itself may intern new beliefs
        if cache[key][1] is None:
            continue  # interned but never expanded (leaf of the truncation)
        reps, costs, branches = cache[key][1]
        best_q, best_c = math.inf, 0
        for c in range(len(reps)):
            q = costs[c] + beta * sum(mass * value(child, K - 1)
                                      for _, mass, child in branches[c])
            if q < best_q:
                best_q, best_c = q, c
        entries.append(PolicyEntry(
            belief=Belief(t=1, n=spec.n, dims=layout.dims, weights=cache[key][0]),
            gamma_index=reps[best_c],
            value=float(best_q),
            children={z: child for z, _, child in branches[best_c]},
        ))

    policy = StationaryPolicy(
        epsilon=epsilon, iterations=K, residual=float(residual),
        tail_bound=float(tail), value=float(v_top), entries=entries)
    report = ValueReport(
        value=float(v_top), variant="full", mode="discounted",
        stage_nodes=[len(entries)],
        prescription_space_sizes=[PrescriptionSpace(spec, 1).size],
        expanded_classes=[sum(len(cache[k][1][0]) for k in order
                              if cache[k][1] is not None)],
        runtime_s=time.perf_counter() - started,
        iterations=K, residual=float(residual), tail_bound=float(tail))
    return report, policy
