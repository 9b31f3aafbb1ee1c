"""Finite decentralized control problems with partial information sharing.

A problem couples a controlled finite Markov chain with ``n`` controllers.
At every stage each controller sees the state through its own noisy
channel, keeps a bounded local memory, acts, and then appends a chosen
part of its local data (a *message*) to a shared append-only memory that
every controller can read.  All primitives live over finite index sets:

* stochastic kernels are dense row-stochastic ``numpy`` arrays,
* the sharing protocol is a pair of deterministic per-stage tables per
  controller (message map ``sigma`` and memory update ``mu``) together
  with a structural *witness* that ties every memory/message coordinate
  to a concrete past variable (an observation or an action at some
  stage), so that the subset/no-overlap rules of the information
  structure can be checked mechanically.

Stages are 1-based throughout the public API; internal sequences are
0-based (stage ``t`` lives at list index ``t - 1``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InvalidDistribution, InvalidParameter, MissingEntry

KIND_OBS = "obs"
KIND_ACT = "act"

#: Mass below which a probability row entry counts as violating nonnegativity.
_NEG_TOL = 1e-12
#: Tolerance on probability rows summing to one.
_ROW_TOL = 1e-9


class Slot(NamedTuple):
    """One coordinate of a memory or message: which variable it stores.

    ``kind`` is ``"obs"`` or ``"act"``; ``time`` is the 1-based stage at
    which the variable was generated.
    """

    kind: str
    time: int


@dataclass(frozen=True)
class FiniteSpace:
    """A finite index set ``{0, ..., cardinality - 1}`` with optional labels."""

    cardinality: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.cardinality < 1:
            raise InvalidParameter(f"cardinality must be >= 1, got {self.cardinality}")
        if self.labels is not None:
            labels = tuple(self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != self.cardinality:
                raise InvalidParameter(
                    f"{len(labels)} labels for cardinality {self.cardinality}"
                )
            if len(set(labels)) != len(labels):
                raise InvalidParameter("labels must be unique")


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """A finite noise source: values ``0..|W|-1`` with a fixed distribution."""

    space: FiniteSpace
    dist: np.ndarray

    def __post_init__(self):
        dist = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "dist", dist)
        if dist.shape != (self.space.cardinality,):
            raise InvalidParameter(
                f"noise dist has shape {dist.shape}, space has cardinality "
                f"{self.space.cardinality}"
            )
        if np.any(dist < -_NEG_TOL):
            raise InvalidDistribution("noise distribution has negative mass")
        if abs(dist.sum() - 1.0) > _ROW_TOL:
            raise InvalidDistribution(
                f"noise distribution sums to {dist.sum()!r}, expected 1"
            )


@dataclass(frozen=True, eq=False)
class InitialCommonObs:
    """A one-shot common signal drawn alongside the initial state.

    Every controller (and the coordinator) sees the same draw ``y*`` with
    law ``kernel[x, y*]`` given the initial state ``x``, before stage 1.
    It splits the root belief into one node per signal value.
    """

    space: FiniteSpace
    kernel: np.ndarray  # (|X|, |Y*|)

    def __post_init__(self):
        object.__setattr__(self, "kernel", np.asarray(self.kernel, dtype=float))


@dataclass(frozen=True, eq=False)
class SharingProtocol:
    """Per-stage local-memory and message structure for every controller.

    For controller ``i`` (0-based) and stage ``t`` (1-based):

    * ``mem_spaces[i][t-1]`` is the local memory space at the start of
      stage ``t`` (stage 1 memory is always the empty singleton),
    * ``msg_spaces[i][t-1]`` (``t <= n_stages - 1``) is the message
      space; index 0 is the reserved null message, real messages encode
      the witness slots by mixed radix plus one,
    * ``msg_maps[i][t-1][m, y, u]`` gives the emitted message index,
    * ``mem_updates[i][t-1][m, y, u]`` gives the next memory index,
    * ``mem_slots`` / ``msg_slots`` are the structural witness: the
      tuple of :class:`Slot` coordinates each memory/message value
      encodes, mixed radix with the first slot most significant.
    """

    n: int
    n_stages: int
    mem_spaces: tuple[tuple[FiniteSpace, ...], ...]
    msg_spaces: tuple[tuple[FiniteSpace, ...], ...]
    mem_slots: tuple[tuple[tuple[Slot, ...], ...], ...]
    msg_slots: tuple[tuple[tuple[Slot, ...], ...], ...]
    msg_maps: tuple[tuple[np.ndarray, ...], ...]
    mem_updates: tuple[tuple[np.ndarray, ...], ...]

    def mem_space(self, i: int, t: int) -> FiniteSpace:
        return self.mem_spaces[i][t - 1]

    def msg_space(self, i: int, t: int) -> FiniteSpace:
        return self.msg_spaces[i][t - 1]


def slot_cardinality(slot: Slot, i: int, obs_spaces, action_spaces) -> int:
    if slot.kind == KIND_OBS:
        return obs_spaces[i].cardinality
    if slot.kind == KIND_ACT:
        return action_spaces[i].cardinality
    raise InvalidParameter(f"unknown slot kind {slot.kind!r}")


def encode_mixed_radix(values: Sequence[int], cards: Sequence[int]) -> int:
    """Pack digit tuple into one index, first digit most significant."""
    out = 0
    for v, c in zip(values, cards):
        out = out * c + v
    return out


def decode_mixed_radix(index: int, cards: Sequence[int]) -> tuple[int, ...]:
    out = []
    for c in reversed(cards):
        out.append(index % c)
        index //= c
    return tuple(reversed(out))


def _slot_values(slot: Slot, t: int, mem_vals: Mapping[Slot, int], y: int, u: int) -> int:
    if slot.time == t:
        return y if slot.kind == KIND_OBS else u
    return mem_vals[slot]


def message_table_from_slots(
    i: int,
    t: int,
    mem_slots_t: tuple[Slot, ...],
    msg_slots_t: tuple[Slot, ...],
    obs_spaces,
    action_spaces,
) -> np.ndarray:
    """Build the stage-``t`` message map implied by the witness slots.

    Output shape ``(|M_t|, |Y^i|, |U^i|)``; entry 0 means the null
    message, real messages are ``1 +`` the mixed-radix packing of the
    message slot values, read from the current memory, observation and
    action.
    """
    mem_cards = [slot_cardinality(s, i, obs_spaces, action_spaces) for s in mem_slots_t]
    msg_cards = [slot_cardinality(s, i, obs_spaces, action_spaces) for s in msg_slots_t]
    n_mem = int(np.prod(mem_cards, dtype=np.int64)) if mem_cards else 1
    n_y = obs_spaces[i].cardinality
    n_u = action_spaces[i].cardinality
    table = np.zeros((n_mem, n_y, n_u), dtype=np.int64)
    if not msg_slots_t:
        return table
    for m in range(n_mem):
        mem_vals = dict(zip(mem_slots_t, decode_mixed_radix(m, mem_cards)))
        for y in range(n_y):
            for u in range(n_u):
                vals = [_slot_values(s, t, mem_vals, y, u) for s in msg_slots_t]
                table[m, y, u] = 1 + encode_mixed_radix(vals, msg_cards)
    return table


def memory_table_from_slots(
    i: int,
    t: int,
    mem_slots_t: tuple[Slot, ...],
    next_mem_slots: tuple[Slot, ...],
    obs_spaces,
    action_spaces,
) -> np.ndarray:
    """Build the stage-``t`` memory update implied by the witness slots."""
    mem_cards = [slot_cardinality(s, i, obs_spaces, action_spaces) for s in mem_slots_t]
    next_cards = [slot_cardinality(s, i, obs_spaces, action_spaces) for s in next_mem_slots]
    n_mem = int(np.prod(mem_cards, dtype=np.int64)) if mem_cards else 1
    n_y = obs_spaces[i].cardinality
    n_u = action_spaces[i].cardinality
    table = np.zeros((n_mem, n_y, n_u), dtype=np.int64)
    for m in range(n_mem):
        mem_vals = dict(zip(mem_slots_t, decode_mixed_radix(m, mem_cards)))
        for y in range(n_y):
            for u in range(n_u):
                vals = [_slot_values(s, t, mem_vals, y, u) for s in next_mem_slots]
                table[m, y, u] = encode_mixed_radix(vals, next_cards)
    return table


def protocol_from_slots(
    horizon: int,
    obs_spaces: Sequence[FiniteSpace],
    action_spaces: Sequence[FiniteSpace],
    mem_slots: Sequence[Sequence[tuple[Slot, ...]]],
    msg_slots: Sequence[Sequence[tuple[Slot, ...]]],
) -> SharingProtocol:
    """Assemble a protocol whose tables are exactly the slot projections.

    ``mem_slots[i]`` must have ``horizon`` entries (stages ``1..T``) and
    ``msg_slots[i]`` must have ``horizon - 1`` entries (stages
    ``1..T-1``).
    """
    n = len(obs_spaces)
    mem_spaces, msg_spaces, msg_maps, mem_updates = [], [], [], []
    for i in range(n):
        mem_i, msg_i, maps_i, upd_i = [], [], [], []
        for t in range(1, horizon + 1):
            cards = [slot_cardinality(s, i, obs_spaces, action_spaces)
                     for s in mem_slots[i][t - 1]]
            mem_i.append(FiniteSpace(int(np.prod(cards, dtype=np.int64)) if cards else 1))
        for t in range(1, horizon):
            cards = [slot_cardinality(s, i, obs_spaces, action_spaces)
                     for s in msg_slots[i][t - 1]]
            size = 1 + (int(np.prod(cards, dtype=np.int64)) if cards else 0)
            msg_i.append(FiniteSpace(size))
            maps_i.append(message_table_from_slots(
                i, t, tuple(mem_slots[i][t - 1]), tuple(msg_slots[i][t - 1]),
                obs_spaces, action_spaces))
            upd_i.append(memory_table_from_slots(
                i, t, tuple(mem_slots[i][t - 1]), tuple(mem_slots[i][t]),
                obs_spaces, action_spaces))
        mem_spaces.append(tuple(mem_i))
        msg_spaces.append(tuple(msg_i))
        msg_maps.append(tuple(maps_i))
        mem_updates.append(tuple(upd_i))
    return SharingProtocol(
        n=n,
        n_stages=horizon,
        mem_spaces=tuple(mem_spaces),
        msg_spaces=tuple(msg_spaces),
        mem_slots=tuple(tuple(tuple(s) for s in per_i) for per_i in mem_slots),
        msg_slots=tuple(tuple(tuple(s) for s in per_i) for per_i in msg_slots),
        msg_maps=tuple(msg_maps),
        mem_updates=tuple(mem_updates),
    )


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A fully specified decentralized control problem.

    Attributes:
        n: number of controllers.
        mode: ``"finite"`` (total cost over ``horizon`` stages) or
            ``"discounted"`` (stationary tables, discount in ``[0, 1)``).
        horizon: number of stages ``T`` in finite mode, ``None`` otherwise.
        discount: discount factor in discounted mode, ``None`` otherwise.
        state_space: the chain's state space.
        obs_spaces / action_spaces: per-controller spaces.
        initial_dist: law of the initial state, shape ``(|X|,)``.
        transitions: per-stage kernels ``(|X|, |U_flat|, |X|)``; finite
            mode has ``T - 1`` of them, discounted mode exactly one.
        obs_kernels: ``obs_kernels[i][t-1]`` has shape ``(|X|, |Y^i|)``;
            finite mode has ``T`` per controller, discounted mode one.
        costs: per-stage cost tables ``(|X|, |U_flat|)``; ``T`` in finite
            mode, one in discounted mode.
        protocol: the sharing protocol.
        initial_common_obs: optional root-splitting common signal.

    Joint actions are flattened with controller 0 most significant:
    ``u_flat = sum_i u_i * prod_{j>i} |U_j|``.
    """

    n: int
    mode: str
    horizon: int | None
    discount: float | None
    state_space: FiniteSpace
    obs_spaces: tuple[FiniteSpace, ...]
    action_spaces: tuple[FiniteSpace, ...]
    initial_dist: np.ndarray
    transitions: tuple[np.ndarray, ...]
    obs_kernels: tuple[tuple[np.ndarray, ...], ...]
    costs: tuple[np.ndarray, ...]
    protocol: SharingProtocol
    initial_common_obs: InitialCommonObs | None = None

    def __post_init__(self):
        object.__setattr__(self, "obs_spaces", tuple(self.obs_spaces))
        object.__setattr__(self, "action_spaces", tuple(self.action_spaces))
        object.__setattr__(self, "initial_dist",
                           np.asarray(self.initial_dist, dtype=float))
        object.__setattr__(self, "transitions",
                           tuple(np.asarray(k, dtype=float) for k in self.transitions))
        object.__setattr__(self, "obs_kernels",
                           tuple(tuple(np.asarray(k, dtype=float) for k in per_i)
                                 for per_i in self.obs_kernels))
        object.__setattr__(self, "costs",
                           tuple(np.asarray(c, dtype=float) for c in self.costs))

    # -- index helpers ---------------------------------------------------

    @property
    def action_cards(self) -> tuple[int, ...]:
        return tuple(sp.cardinality for sp in self.action_spaces)

    @property
    def joint_action_count(self) -> int:
        return int(np.prod(self.action_cards, dtype=np.int64))

    @property
    def max_abs_cost(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.costs)

    def _stage_index(self, t: int, length: int) -> int:
        if self.mode == "discounted":
            return 0
        if not 1 <= t <= length:
            raise InvalidParameter(f"stage {t} outside 1..{length}")
        return t - 1

    def transition(self, t: int) -> np.ndarray:
        """Kernel applied between stages ``t`` and ``t + 1``."""
        return self.transitions[self._stage_index(t, len(self.transitions))]

    def obs_kernel(self, i: int, t: int) -> np.ndarray:
        return self.obs_kernels[i][self._stage_index(t, len(self.obs_kernels[i]))]

    def cost(self, t: int) -> np.ndarray:
        return self.costs[self._stage_index(t, len(self.costs))]

    def _protocol_index(self, t: int, length: int) -> int:
        if self.mode == "discounted":
            return 0
        if not 1 <= t <= length:
            raise InvalidParameter(f"stage {t} outside protocol range 1..{length}")
        return t - 1

    def mem_space(self, i: int, t: int) -> FiniteSpace:
        return self.protocol.mem_spaces[i][
            self._protocol_index(t, len(self.protocol.mem_spaces[i]))]

    def msg_space(self, i: int, t: int) -> FiniteSpace:
        return self.protocol.msg_spaces[i][
            self._protocol_index(t, len(self.protocol.msg_spaces[i]))]

    def msg_map(self, i: int, t: int) -> np.ndarray:
        return self.protocol.msg_maps[i][
            self._protocol_index(t, len(self.protocol.msg_maps[i]))]

    def mem_update(self, i: int, t: int) -> np.ndarray:
        return self.protocol.mem_updates[i][
            self._protocol_index(t, len(self.protocol.mem_updates[i]))]

    def mem_cards(self, t: int) -> tuple[int, ...]:
        return tuple(self.mem_space(i, t).cardinality for i in range(self.n))

    def msg_cards(self, t: int) -> tuple[int, ...]:
        return tuple(self.msg_space(i, t).cardinality for i in range(self.n))


def flatten_action(actions: Sequence[int], cards: Sequence[int]) -> int:
    """Joint action index, controller 0 most significant."""
    return encode_mixed_radix(actions, cards)


def unflatten_action(u_flat: int, cards: Sequence[int]) -> tuple[int, ...]:
    return decode_mixed_radix(u_flat, cards)


def build_kernel_from_functional(
    f_table,
    noise: NoiseModel,
    n_states: int | None = None,
    n_actions: int | None = None,
) -> np.ndarray:
    """Turn a functional system equation into a transition kernel.

    ``f_table`` maps ``(x, u_flat, w)`` to the next state, either as a
    dict keyed by triples or as a nested sequence indexed
    ``[x][u_flat][w]``.  The kernel is
    ``K[x, u, x'] = sum_w 1[f(x, u, w) = x'] * P(w)`` and its rows sum
    to one within 1e-12 by construction.

    Raises:
        MissingEntry: the table does not cover the full grid.
        InvalidParameter: a table value is not a valid state index.
    """
    n_noise = noise.space.cardinality
    if isinstance(f_table, Mapping):
        if not f_table:
            raise MissingEntry("empty functional table")
        xs = {k[0] for k in f_table}
        us = {k[1] for k in f_table}
        ws = {k[2] for k in f_table}
        nx = n_states if n_states is not None else max(xs | set(f_table.values())) + 1
        nu = n_actions if n_actions is not None else max(us) + 1
        if ws - set(range(n_noise)):
            raise InvalidParameter("functional table uses noise values outside the model")
        arr = np.empty((nx, nu, n_noise), dtype=np.int64)
        for x in range(nx):
            for u in range(nu):
                for w in range(n_noise):
                    try:
                        arr[x, u, w] = f_table[(x, u, w)]
                    except KeyError:
                        raise MissingEntry(
                            f"functional table missing entry (x={x}, u={u}, w={w})"
                        ) from None
    else:
        arr = np.asarray(f_table, dtype=np.int64)
        if arr.ndim != 3:
            raise InvalidParameter(
                f"functional table must be indexed [x][u][w], got ndim={arr.ndim}")
        if arr.shape[2] != n_noise:
            raise MissingEntry(
                f"functional table covers {arr.shape[2]} noise values, "
                f"noise model has {n_noise}")
        if n_states is not None and arr.shape[0] != n_states:
            raise MissingEntry(
                f"functional table covers {arr.shape[0]} states, expected {n_states}")
        if n_actions is not None and arr.shape[1] != n_actions:
            raise MissingEntry(
                f"functional table covers {arr.shape[1]} joint actions, "
                f"expected {n_actions}")
        nx, nu = arr.shape[0], arr.shape[1]
    if arr.min() < 0 or arr.max() >= nx:
        raise MissingEntry(
            f"functional table maps into state {int(arr.max())} "
            f"but only {nx} states have rows")
    kernel = np.zeros((nx, nu, nx))
    for w in range(n_noise):
        np.add.at(kernel, (np.arange(nx)[:, None], np.arange(nu)[None, :], arr[:, :, w]),
                  noise.dist[w])
    return kernel


@dataclass
class StrategyNode:
    """One reachable shared-memory node of a control strategy."""

    node_id: int
    t: int
    tables: tuple[np.ndarray, ...]  # per controller, (|Y_i|, |M_i|) action tables
    children: dict[int, int]  # flat joint message -> next node_id


@dataclass(eq=False)
class ControlStrategy:
    """Per-controller strategies indexed by the shared memory.

    The shared memory evolves along a tree of nodes: every stage each
    controller looks up its action in the current node's table under its
    own observation and local memory, and the joint emitted message
    selects the child node.  ``roots`` pairs each root node with its
    probability (several roots only when the problem has an initial
    common observation, ordered by signal value).
    """

    n: int
    horizon: int
    roots: tuple[tuple[float, int], ...]
    stages: list[list[StrategyNode]]

    def finalize(self) -> "ControlStrategy":
        self._index = {nd.node_id: nd for stage in self.stages for nd in stage}
        return self

    def node(self, node_id: int) -> StrategyNode:
        return self._index[node_id]


# -- validation ----------------------------------------------------------


@dataclass(frozen=True)
class ValidationFinding:
    """One violated invariant: a short code, a location, and details."""

    code: str
    where: str
    detail: str

    def __str__(self):
        return f"[{self.code}] {self.where}: {self.detail}"


@dataclass
class ValidationReport:
    findings: list[ValidationFinding]

    @property
    def ok(self) -> bool:
        return not self.findings

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(f) for f in self.findings)


def _check_rows(arr, shape, where, findings, kind="kernel"):
    """Check one stochastic table: shape, nonnegativity, unit row sums."""
    if arr.shape != shape:
        findings.append(ValidationFinding(
            "shape", where, f"expected shape {shape}, got {arr.shape}"))
        return
    rows = arr.reshape(-1, arr.shape[-1])
    sums = rows.sum(axis=1)
    bad_sum = np.nonzero(np.abs(sums - 1.0) > _ROW_TOL)[0]
    bad_neg = np.nonzero((rows < -_NEG_TOL).any(axis=1))[0]
    lead = arr.shape[:-1]
    for r in bad_neg:
        idx = np.unravel_index(r, lead) if lead else ()
        findings.append(ValidationFinding(
            f"{kind}-negative", where + str(list(map(int, idx))),
            "row has negative mass"))
    for r in bad_sum:
        idx = np.unravel_index(r, lead) if lead else ()
        findings.append(ValidationFinding(
            f"{kind}-row-sum", where + str(list(map(int, idx))),
            f"row sums to {float(sums[r])!r}, expected 1"))


def _check_protocol_stage(spec, i, t, findings):
    """Witness and table checks for controller ``i`` at stage ``t``."""
    proto = spec.protocol
    mem_here = proto.mem_slots[i][t - 1]
    where = f"protocol[i={i}][t={t}]"

    current = {Slot(KIND_OBS, t), Slot(KIND_ACT, t)}
    ok_structure = True

    def check_slots(slots, max_time, label):
        nonlocal ok_structure
        if len(set(slots)) != len(slots):
            findings.append(ValidationFinding(
                "slot-duplicate", where, f"{label} slots repeat a coordinate"))
            ok_structure = False
        for s in slots:
            if s.kind not in (KIND_OBS, KIND_ACT) or not 1 <= s.time <= max_time:
                findings.append(ValidationFinding(
                    "slot-time", where,
                    f"{label} slot {s} is not a past variable of stage {t}"))
                ok_structure = False

    check_slots(mem_here, t - 1, "memory")
    mem_card = int(np.prod(
        [slot_cardinality(s, i, spec.obs_spaces, spec.action_spaces) for s in mem_here],
        dtype=np.int64)) if mem_here else 1
    if spec.mem_space(i, t).cardinality != mem_card:
        findings.append(ValidationFinding(
            "memory-cardinality", where,
            f"memory space has {spec.mem_space(i, t).cardinality} elements, "
            f"witness implies {mem_card}"))
        ok_structure = False

    if t > len(proto.msg_slots[i]):
        return
    msg_here = proto.msg_slots[i][t - 1]
    check_slots(msg_here, t, "message")

    msg_card = 1 + (int(np.prod(
        [slot_cardinality(s, i, spec.obs_spaces, spec.action_spaces) for s in msg_here],
        dtype=np.int64)) if msg_here else 0)
    if spec.msg_space(i, t).cardinality != msg_card:
        findings.append(ValidationFinding(
            "message-cardinality", where,
            f"message space has {spec.msg_space(i, t).cardinality} elements, "
            f"witness implies {msg_card} (null included)"))
        ok_structure = False

    avail = set(mem_here) | current
    for s in msg_here:
        if s not in avail:
            findings.append(ValidationFinding(
                "message-source", where,
                f"message slot {s} is not in local memory or current data"))
            ok_structure = False

    mem_next = proto.mem_slots[i][t] if t < proto.n_stages else ()
    overlap = set(mem_next) & set(msg_here)
    for s in sorted(overlap):
        findings.append(ValidationFinding(
            "memory-message-overlap", where,
            f"slot {s} is both shared at stage {t} and retained in memory"))
        ok_structure = False
    for s in mem_next:
        if s not in avail and s not in overlap:
            findings.append(ValidationFinding(
                "memory-source", where,
                f"next-memory slot {s} is not in local memory or current data"))
            ok_structure = False

    maps_where = where
    msg_map = proto.msg_maps[i][t - 1]
    mem_upd = proto.mem_updates[i][t - 1]
    ny = spec.obs_spaces[i].cardinality
    nu = spec.action_spaces[i].cardinality
    expect_shape = (spec.mem_space(i, t).cardinality, ny, nu)
    for name, table in (("message map", msg_map), ("memory update", mem_upd)):
        if table.shape != expect_shape:
            findings.append(ValidationFinding(
                "map-shape", maps_where,
                f"{name} has shape {table.shape}, expected {expect_shape}"))
            ok_structure = False
    if not ok_structure:
        return

    next_card = int(np.prod(
        [slot_cardinality(s, i, spec.obs_spaces, spec.action_spaces) for s in mem_next],
        dtype=np.int64)) if mem_next else 1
    if t < proto.n_stages and spec.mem_space(i, t + 1).cardinality != next_card:
        return  # the t+1 stage check reports the cardinality mismatch
    if msg_map.min() < 0 or msg_map.max() >= msg_card:
        findings.append(ValidationFinding(
            "map-range", maps_where, "message map leaves the message space"))
        return
    if mem_upd.min() < 0 or mem_upd.max() >= next_card:
        findings.append(ValidationFinding(
            "map-range", maps_where, "memory update leaves the next memory space"))
        return

    expected_msg = message_table_from_slots(
        i, t, mem_here, msg_here, spec.obs_spaces, spec.action_spaces)
    if not np.array_equal(msg_map, expected_msg):
        findings.append(ValidationFinding(
            "message-map-mismatch", maps_where,
            "message map disagrees with the witness slot projection"))
    expected_upd = memory_table_from_slots(
        i, t, mem_here, mem_next, spec.obs_spaces, spec.action_spaces)
    if not np.array_equal(mem_upd, expected_upd):
        findings.append(ValidationFinding(
            "memory-update-mismatch", maps_where,
            "memory update disagrees with the witness slot projection"))


def validate_problem(spec: ProblemSpec) -> ValidationReport:
    """Check every structural and probabilistic invariant of a problem.

    Returns a report listing all violations (empty report means the
    problem is well formed).  Solvers assume a validated spec.
    """
    findings: list[ValidationFinding] = []
    f = findings.append

    if spec.mode not in ("finite", "discounted"):
        f(ValidationFinding("mode", "spec", f"unknown mode {spec.mode!r}"))
        return ValidationReport(findings)
    if spec.n < 1 or len(spec.obs_spaces) != spec.n or len(spec.action_spaces) != spec.n:
        f(ValidationFinding("controllers", "spec",
                            f"n={spec.n} but {len(spec.obs_spaces)} observation and "
                            f"{len(spec.action_spaces)} action spaces"))
        return ValidationReport(findings)

    if spec.mode == "finite":
        if spec.horizon is None or spec.horizon < 1:
            f(ValidationFinding("horizon", "spec",
                                f"finite mode needs horizon >= 1, got {spec.horizon}"))
            return ValidationReport(findings)
        n_trans, n_obs, n_cost = spec.horizon - 1, spec.horizon, spec.horizon
    else:
        if spec.discount is None or not 0.0 <= spec.discount < 1.0:
            f(ValidationFinding("discount-range", "spec",
                                f"discount must be in [0, 1), got {spec.discount}"))
            return ValidationReport(findings)
        n_trans, n_obs, n_cost = 1, 1, 1

    nx = spec.state_space.cardinality
    nu = spec.joint_action_count

    if len(spec.transitions) != n_trans:
        f(ValidationFinding("table-count", "transitions",
                            f"expected {n_trans} stage kernels, got {len(spec.transitions)}"))
    if len(spec.costs) != n_cost:
        f(ValidationFinding("table-count", "costs",
                            f"expected {n_cost} stage tables, got {len(spec.costs)}"))
    for i in range(spec.n):
        if len(spec.obs_kernels[i]) != n_obs:
            f(ValidationFinding("table-count", f"obs_kernels[i={i}]",
                                f"expected {n_obs} stage kernels, "
                                f"got {len(spec.obs_kernels[i])}"))

    _check_rows(spec.initial_dist[None, :], (1, nx), "initial_dist", findings,
                kind="dist")
    for k, arr in enumerate(spec.transitions):
        _check_rows(arr, (nx, nu, nx), f"transition[t={k + 1}]", findings)
    for i in range(spec.n):
        ny = spec.obs_spaces[i].cardinality
        for k, arr in enumerate(spec.obs_kernels[i]):
            _check_rows(arr, (nx, ny), f"obs_kernel[i={i}][t={k + 1}]", findings)
    for k, arr in enumerate(spec.costs):
        where = f"cost[t={k + 1}]"
        if arr.shape != (nx, nu):
            f(ValidationFinding("shape", where,
                                f"expected shape {(nx, nu)}, got {arr.shape}"))
        elif not np.all(np.isfinite(arr)):
            f(ValidationFinding("cost-not-finite", where,
                                "cost table contains non-finite entries"))

    if spec.initial_common_obs is not None:
        ico = spec.initial_common_obs
        _check_rows(ico.kernel, (nx, ico.space.cardinality),
                    "initial_common_obs", findings)

    proto = spec.protocol
    if proto.n != spec.n:
        f(ValidationFinding("controllers", "protocol",
                            f"protocol is for {proto.n} controllers, spec has {spec.n}"))
        return ValidationReport(findings)
    expect_stages = spec.horizon if spec.mode == "finite" else 2
    if proto.n_stages != expect_stages:
        f(ValidationFinding("protocol-horizon", "protocol",
                            f"protocol covers {proto.n_stages} stages, "
                            f"expected {expect_stages}"))
        return ValidationReport(findings)

    for i in range(spec.n):
        if proto.mem_slots[i][0]:
            f(ValidationFinding("initial-memory-nonempty", f"protocol[i={i}][t=1]",
                                "stage-1 local memory must be empty"))
        for t in range(1, proto.n_stages + 1):
            _check_protocol_stage(spec, i, t, findings)
        if spec.mode == "discounted":
            for t, sp in enumerate(proto.mem_spaces[i], start=1):
                if sp.cardinality != 1:
                    f(ValidationFinding(
                        "memory-not-stationary", f"protocol[i={i}][t={t}]",
                        "discounted mode requires a time-invariant (singleton) "
                        "local memory; this protocol accumulates local data"))

    return ValidationReport(findings)
