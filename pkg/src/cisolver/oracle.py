"""Brute-force ground truth for small decentralized problems.

Everything here works directly on the model tables (kernels, cost
tables, message maps, memory updates) with explicit measures over
``(x, observations, memories)`` tuples; none of it shares code with the
belief-space solver, so agreement between the two is evidence, not
tautology.

Three operations:

* exact expected cost of a given control strategy, by summing over all
  trajectory branches weighted by their kernel probabilities;
* enumeration of all *basic* strategies: every deterministic assignment
  of actions to the decision points ``(shared-memory node, observation,
  local memory)`` that are realizable under the strategy being built,
  enumerated depth-first over the realizable node tree;
* enumeration of coordinator strategies: every joint prescription at
  every distinct (stage, belief) node, with nodes deduplicated by their
  conditional measure, the way a centralized reformulation would count
  its options.

Both enumerations return the minimizing strategy in executable form.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InvalidParameter, UnreachableInformation
from .model import ControlStrategy, ProblemSpec, StrategyNode

#: Conditional-measure entries are rounded to this many decimals when two
#: enumeration nodes are tested for equality.
_CANON_DECIMALS = 12
_ZERO = 1e-15


@dataclass
class EnumerationReport:
    """Outcome of a brute-force enumeration."""

    kind: str  # "basic" or "coordinator"
    count: int  # strategies examined / prescription evaluations performed
    minimum: float
    strategy: ControlStrategy
    runtime_s: float


def _require_finite(spec: ProblemSpec, what: str):
    if spec.mode != "finite":
        raise InvalidParameter(f"{what} requires a finite-horizon problem")


def _msg_strides(spec: ProblemSpec, t: int) -> list[int]:
    cards = spec.msg_cards(t)
    strides = [1] * spec.n
    for i in range(spec.n - 2, -1, -1):
        strides[i] = strides[i + 1] * cards[i + 1]
    return strides


def _act_strides(spec: ProblemSpec) -> list[int]:
    cards = spec.action_cards
    strides = [1] * spec.n
    for i in range(spec.n - 2, -1, -1):
        strides[i] = strides[i + 1] * cards[i + 1]
    return strides


def _positive_obs(spec: ProblemSpec, t: int) -> list[list[list[tuple[int, float]]]]:
    """Per controller, per state: the positive-probability observations."""
    out = []
    for i in range(spec.n):
        k = spec.obs_kernel(i, t)
        out.append([[(y, float(k[x, y])) for y in range(k.shape[1]) if k[x, y] > 0.0]
                    for x in range(k.shape[0])])
    return out


def _initial_joint(spec: ProblemSpec):
    """Joint initial measures, one per strategy root, in root order.

    Yields ``(root_position, measure)`` where the measure maps
    ``(x, observations, empty memories)`` to its probability, already
    weighted by the root probability.
    """
    obs1 = _positive_obs(spec, 1)
    m0 = tuple(0 for _ in range(spec.n))

    def measure_for(weight_of_x):
        measure = {}
        for x in range(spec.state_space.cardinality):
            base = weight_of_x(x)
            if base <= 0.0:
                continue
            for combo in itertools.product(*(obs1[i][x] for i in range(spec.n))):
                p = base
                for _, py in combo:
                    p *= py
                if p > 0.0:
                    measure[(x, tuple(y for y, _ in combo), m0)] = p
        return measure

    if spec.initial_common_obs is None:
        yield 0, measure_for(lambda x: float(spec.initial_dist[x]))
        return
    kernel = spec.initial_common_obs.kernel
    pos = 0
    for ystar in range(spec.initial_common_obs.space.cardinality):
        mass = float(spec.initial_dist @ kernel[:, ystar])
        if mass <= _ZERO:
            continue
        yield pos, measure_for(
            lambda x, ys=ystar: float(spec.initial_dist[x] * kernel[x, ys]))
        pos += 1


def _extend(spec: ProblemSpec, t: int, state, p: float, u: tuple[int, ...],
            obs_next, sink: dict, counter: list | None = None, cap: int = 0):
    """Push one weighted state through stage ``t``'s dynamics into ``sink``."""
    x, ys, ms = state
    strides = _act_strides(spec)
    u_flat = sum(u[i] * strides[i] for i in range(spec.n))
    m_next = tuple(int(spec.mem_update(i, t)[ms[i], ys[i], u[i]])
                   for i in range(spec.n))
    row = spec.transition(t)[x, u_flat]
    for x2 in np.nonzero(row > 0.0)[0]:
        px = p * float(row[x2])
        for combo in itertools.product(*(obs_next[i][x2] for i in range(spec.n))):
            q = px
            for _, py in combo:
                q *= py
            if counter is not None:
                counter[0] += 1
                if counter[0] > cap:
                    raise Infeasible(
                        f"trajectory branches exceed cap {cap} "
                        f"(reached {counter[0]})", count=counter[0])
            if q > 0.0:
                key = (int(x2), tuple(y for y, _ in combo), m_next)
                sink[key] = sink.get(key, 0.0) + q


def exact_cost_of_strategy(spec: ProblemSpec, strategy: ControlStrategy,
                           cap_branches: int = 100_000_000) -> float:
    """Exact expected total cost of ``strategy``, by trajectory summation.

    Raises:
        UnreachableInformation: the strategy has no child for a message
            that occurs with positive probability.
        Infeasible: more than ``cap_branches`` trajectory branches.
    """
    _require_finite(spec, "exact cost evaluation")
    if strategy.horizon != spec.horizon or strategy.n != spec.n:
        raise InvalidParameter("strategy shape does not match the problem")
    counter = [0]
    roots = list(strategy.roots)
    measure: dict = {}
    for pos, joint in _initial_joint(spec):
        if pos >= len(roots):
            raise InvalidParameter(
                "strategy has fewer root nodes than the problem has "
                "positive-probability common-signal values")
        root_id = roots[pos][1]
        for state, p in joint.items():
            measure[(root_id,) + state] = measure.get((root_id,) + state, 0.0) + p

    total = 0.0
    for t in range(1, spec.horizon + 1):
        cost_t = spec.cost(t)
        strides = _act_strides(spec)
        stage_cost = 0.0
        for (node_id, x, ys, ms), p in measure.items():
            nd = strategy.node(node_id)
            u_flat = sum(int(nd.tables[i][ys[i], ms[i]]) * strides[i]
                         for i in range(spec.n))
            stage_cost += p * float(cost_t[x, u_flat])
        total += stage_cost
        if t == spec.horizon:
            break
        obs_next = _positive_obs(spec, t + 1)
        zstr = _msg_strides(spec, t)
        nxt: dict = {}
        for (node_id, x, ys, ms), p in measure.items():
            nd = strategy.node(node_id)
            u = tuple(int(nd.tables[i][ys[i], ms[i]]) for i in range(spec.n))
            z = sum(int(spec.msg_map(i, t)[ms[i], ys[i], u[i]]) * zstr[i]
                    for i in range(spec.n))
            child = nd.children.get(z)
            if child is None:
                raise UnreachableInformation(
                    f"strategy node {node_id} at stage {t} has no successor for "
                    f"message {z}, which occurs with probability {p!r}")
            bucket: dict = {}
            _extend(spec, t, (x, ys, ms), p, u, obs_next, bucket, counter,
                    cap_branches)
            for state, q in bucket.items():
                key = (child,) + state
                nxt[key] = nxt.get(key, 0.0) + q
        measure = nxt
    return float(total)


# -- basic-strategy enumeration ----------------------------------------------


class _EnumNode:
    """One realizable node while a strategy is being built depth-first."""

    __slots__ = ("label", "measure", "points", "n_assign", "costs", "decode_cache")

    def __init__(self, spec: ProblemSpec, t: int, label, measure: dict):
        self.label = label
        self.measure = measure
        # realizable decision points per controller, sorted
        self.points = []
        for i in range(spec.n):
            pts = sorted({(ys[i], ms[i]) for (x, ys, ms) in measure})
            self.points.append(pts)
        self.n_assign = 1
        for i in range(spec.n):
            self.n_assign *= spec.action_cards[i] ** len(self.points[i])
        self.decode_cache = {}

    def actions(self, spec: ProblemSpec, assignment: int):
        """Per-controller point -> action maps for one assignment index."""
        got = self.decode_cache.get(assignment)
        if got is not None:
            return got
        maps = []
        rest = assignment
        sizes = [spec.action_cards[i] ** len(self.points[i]) for i in range(spec.n)]
        digits = []
        for i in range(spec.n - 1, -1, -1):
            digits.append(rest % sizes[i])
            rest //= sizes[i]
        digits.reverse()
        for i in range(spec.n):
            nu = spec.action_cards[i]
            acts = {}
            d = digits[i]
            for pt in reversed(self.points[i]):
                acts[pt] = d % nu
                d //= nu
            maps.append(acts)
        got = tuple(maps)
        self.decode_cache[assignment] = got
        return got

    def stage_cost(self, spec: ProblemSpec, t: int, assignment: int) -> float:
        strides = _act_strides(spec)
        maps = self.actions(spec, assignment)
        cost_t = spec.cost(t)
        out = 0.0
        for (x, ys, ms), p in self.measure.items():
            u_flat = sum(maps[i][(ys[i], ms[i])] * strides[i] for i in range(spec.n))
            out += p * float(cost_t[x, u_flat])
        return out


def enumerate_basic_strategies(spec: ProblemSpec,
                               cap_strategies: int = 10_000_000) -> EnumerationReport:
    """Enumerate every deterministic strategy on realizable decision points.

    A strategy assigns an action to each (shared-memory node,
    observation, local memory) triple that has positive probability
    *under the strategy itself*; the enumeration walks the realizable
    node tree depth-first, choosing stage assignments level by level, so
    the count equals the product of per-node assignment counts along
    each realized tree.  Returns the count, the minimum cost, and one
    minimizing strategy (earliest in enumeration order among ties).

    Raises:
        Infeasible: the strategy count exceeds ``cap_strategies``.
    """
    _require_finite(spec, "basic-strategy enumeration")
    started = time.perf_counter()
    T = spec.horizon
    counted = [0]
    best = [np.inf, None]  # minimum, snapshot of (levels, leaf assignment indices)

    root_nodes = [_EnumNode(spec, 1, (pos,), joint)
                  for pos, joint in _initial_joint(spec)]

    def children_of(nodes, assignment_ids, t):
        obs_next = _positive_obs(spec, t + 1)
        zstr = _msg_strides(spec, t)
        buckets: dict = {}
        for nd, a in zip(nodes, assignment_ids):
            maps = nd.actions(spec, a)
            for (x, ys, ms), p in nd.measure.items():
                u = tuple(maps[i][(ys[i], ms[i])] for i in range(spec.n))
                z = sum(int(spec.msg_map(i, t)[ms[i], ys[i], u[i]]) * zstr[i]
                        for i in range(spec.n))
                label = nd.label + (z,)
                sink = buckets.setdefault(label, {})
                _extend(spec, t, (x, ys, ms), p, u, obs_next, sink)
        return [_EnumNode(spec, t + 1, label, buckets[label])
                for label in sorted(buckets)]

    def leaf_sweep(nodes, t, acc, path):
        sizes = [nd.n_assign for nd in nodes]
        total = 1
        for s in sizes:
            total *= s
        if counted[0] + total > cap_strategies:
            raise Infeasible(
                f"basic strategies exceed cap {cap_strategies} "
                f"(reached {counted[0] + total})", count=counted[0] + total)
        counted[0] += total
        acc_arr = np.array([acc])
        for nd in nodes:
            costs = np.array([nd.stage_cost(spec, t, a) for a in range(nd.n_assign)])
            acc_arr = (acc_arr[:, None] + costs[None, :]).reshape(-1)
        pos = int(np.argmin(acc_arr))
        if acc_arr[pos] < best[0]:
            leaf_assign = []
            rest = pos
            for s in reversed(sizes):
                leaf_assign.append(rest % s)
                rest //= s
            leaf_assign.reverse()
            best[0] = float(acc_arr[pos])
            best[1] = path + [(nodes, leaf_assign)]

    def dfs(nodes, t, acc, path):
        if t == T:
            leaf_sweep(nodes, t, acc, path)
            return
        for assignment_ids in itertools.product(*(range(nd.n_assign) for nd in nodes)):
            stage = acc
            for nd, a in zip(nodes, assignment_ids):
                stage += nd.stage_cost(spec, t, a)
            kids = children_of(nodes, assignment_ids, t)
            dfs(kids, t + 1, stage, path + [(nodes, list(assignment_ids))])

    dfs(root_nodes, 1, 0.0, [])
    strategy = _strategy_from_snapshot(spec, best[1])
    return EnumerationReport(
        kind="basic", count=counted[0], minimum=best[0], strategy=strategy,
        runtime_s=time.perf_counter() - started)


def _strategy_from_snapshot(spec: ProblemSpec, snapshot) -> ControlStrategy:
    """Build an executable strategy from one DFS path's nodes and choices."""
    ids = {}
    counter = 0
    for level, (nodes, _) in enumerate(snapshot, start=1):
        for nd in nodes:
            ids[(level, nd.label)] = counter
            counter += 1
    out_stages = []
    for level, (nodes, assignment_ids) in enumerate(snapshot, start=1):
        out = []
        for nd, a in zip(nodes, assignment_ids):
            maps = nd.actions(spec, a)
            tables = []
            for i in range(spec.n):
                ny = spec.obs_spaces[i].cardinality
                nm = spec.mem_space(i, level).cardinality
                table = np.zeros((ny, nm), dtype=np.int64)
                for (y, m), act in maps[i].items():
                    table[y, m] = act
                tables.append(table)
            children = {}
            if level < len(snapshot):
                for child_nd in snapshot[level][0]:
                    if child_nd.label[:-1] == nd.label:
                        children[child_nd.label[-1]] = ids[(level + 1, child_nd.label)]
            out.append(StrategyNode(
                node_id=ids[(level, nd.label)], t=level,
                tables=tuple(tables), children=children))
        out_stages.append(out)
    roots = []
    for nd in snapshot[0][0]:
        prob = sum(nd.measure.values())
        roots.append((float(prob), ids[(1, nd.label)]))
    return ControlStrategy(n=spec.n, horizon=spec.horizon,
                           roots=tuple(roots), stages=out_stages).finalize()


# -- coordinator-strategy enumeration ------------------------------------------


def _canon_measure(measure: dict):
    items = []
    for state in sorted(measure):
        p = round(measure[state], _CANON_DECIMALS)
        if p > 0.0:
            items.append((state, p))
    return tuple(items)


def enumerate_coordinator_strategies(spec: ProblemSpec,
                                     cap_evaluations: int = 10_000_000
                                     ) -> EnumerationReport:
    """Evaluate every joint prescription at every distinct belief node.

    Nodes are (stage, conditional measure) pairs reached from the root
    by positive-probability messages, deduplicated by measure; at each
    node all ``prod_i |U_i| ** (|Y_i| * |M_i|)`` joint prescriptions are
    evaluated once.  ``count`` is the total number of prescription
    evaluations.  Returns the optimum and one optimal strategy
    (smallest prescription indices among ties).

    Raises:
        Infeasible: evaluations exceed ``cap_evaluations``.
    """
    _require_finite(spec, "coordinator enumeration")
    started = time.perf_counter()
    T = spec.horizon
    evaluated = [0]
    memo: dict = {}  # (t, canonical measure) -> (value, gamma digits, children)

    def presc_sizes(t):
        sizes = []
        for i in range(spec.n):
            points = spec.obs_spaces[i].cardinality * spec.mem_space(i, t).cardinality
            sizes.append(spec.action_cards[i] ** points)
        return sizes

    def decode_gamma(t, index):
        """Flat joint prescription index -> per-controller (y, m) tables."""
        sizes = presc_sizes(t)
        parts = []
        rest = index
        for i in range(spec.n - 1, -1, -1):
            parts.append(rest % sizes[i])
            rest //= sizes[i]
        parts.reverse()
        tables = []
        for i in range(spec.n):
            ny = spec.obs_spaces[i].cardinality
            nm = spec.mem_space(i, t).cardinality
            nu = spec.action_cards[i]
            flat = np.zeros(ny * nm, dtype=np.int64)
            d = parts[i]
            for p in range(ny * nm - 1, -1, -1):
                flat[p] = d % nu
                d //= nu
            tables.append(flat.reshape(ny, nm))
        return tables

    def push(t, measure, tables):
        """Conditional successor measures per message, with message masses."""
        zstr = _msg_strides(spec, t)
        obs_next = _positive_obs(spec, t + 1)
        masses: dict = {}
        sinks: dict = {}
        for state in sorted(measure):
            x, ys, ms = state
            p = measure[state]
            u = tuple(int(tables[i][ys[i], ms[i]]) for i in range(spec.n))
            z = sum(int(spec.msg_map(i, t)[ms[i], ys[i], u[i]]) * zstr[i]
                    for i in range(spec.n))
            masses[z] = masses.get(z, 0.0) + p
        for state in sorted(measure):
            x, ys, ms = state
            p = measure[state]
            u = tuple(int(tables[i][ys[i], ms[i]]) for i in range(spec.n))
            z = sum(int(spec.msg_map(i, t)[ms[i], ys[i], u[i]]) * zstr[i]
                    for i in range(spec.n))
            if masses[z] <= _ZERO:
                continue
            sink = sinks.setdefault(z, {})
            _extend(spec, t, state, p / masses[z], u, obs_next, sink)
        return [(z, masses[z], sinks[z]) for z in sorted(sinks)]

    strides = _act_strides(spec)

    def evaluate(t, measure):
        """Minimum expected cost-to-go per unit mass of a normalized measure."""
        key = (t, _canon_measure(measure))
        got = memo.get(key)
        if got is not None:
            return got[0], key
        sizes = presc_sizes(t)
        joint = 1
        for s in sizes:
            joint *= s
        evaluated[0] += joint
        if evaluated[0] > cap_evaluations:
            raise Infeasible(
                f"prescription evaluations exceed cap {cap_evaluations} "
                f"(reached {evaluated[0]})", count=evaluated[0])
        cost_t = spec.cost(t)
        best, best_gamma, best_children = np.inf, None, None
        for index in range(joint):
            tables = decode_gamma(t, index)
            q = 0.0
            for (x, ys, ms), p in measure.items():
                u_flat = sum(int(tables[i][ys[i], ms[i]]) * strides[i]
                             for i in range(spec.n))
                q += p * float(cost_t[x, u_flat])
            children = {}
            if t < T:
                for z, mass, child in push(t, measure, tables):
                    value, child_key = evaluate(t + 1, child)
                    q += mass * value
                    children[z] = child_key
            if q < best:
                best, best_gamma, best_children = q, index, children
        memo[key] = (best, best_gamma, best_children)
        return best, key

    roots = []
    total = 0.0
    for pos, joint in _initial_joint(spec):
        mass = sum(joint.values())
        normalized = {state: p / mass for state, p in joint.items()}
        value, key = evaluate(1, normalized)
        total += mass * value
        roots.append((mass, key))

    strategy = _strategy_from_memo(spec, memo, roots, decode_gamma)
    return EnumerationReport(
        kind="coordinator", count=evaluated[0], minimum=float(total),
        strategy=strategy, runtime_s=time.perf_counter() - started)


def _strategy_from_memo(spec, memo, roots, decode_gamma) -> ControlStrategy:
    """Stitch the per-node argmins into one executable strategy."""
    ids = {}
    stages = [[] for _ in range(spec.horizon)]
    frontier = [key for _, key in roots]
    counter = 0
    seen = set()
    while frontier:
        nxt = []
        for key in frontier:
            if key in seen:
                continue
            seen.add(key)
            t = key[0]
            ids[key] = counter
            counter += 1
            _, gamma, children = memo[key]
            stages[t - 1].append((key, gamma, children))
            if children:
                nxt.extend(children.values())
        frontier = nxt
    out_stages = []
    for t in range(1, spec.horizon + 1):
        out = []
        for key, gamma, children in stages[t - 1]:
            tables = tuple(decode_gamma(t, gamma))
            out.append(StrategyNode(
                node_id=ids[key], t=t, tables=tables,
                children={z: ids[ck] for z, ck in children.items()}))
        out_stages.append(out)
    return ControlStrategy(
        n=spec.n, horizon=spec.horizon,
        roots=tuple((float(mass), ids[key]) for mass, key in roots),
        stages=out_stages).finalize()
