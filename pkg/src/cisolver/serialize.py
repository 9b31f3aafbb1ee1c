"""JSON documents for problems, policies, and run reports.

Everything the command line reads or writes goes through this module so
the on-disk formats live in one place.  Output text is deterministic:
keys are sorted, floats use the shortest decimal form that round-trips
exactly, and no timing data is embedded.  Policy documents carry a
sha256 digest of the canonical problem encoding so a policy can never
silently be replayed against a different problem.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .coordinator import Belief, PrescriptionSpace, ReducedBelief
from .dp import PolicyTree, StationaryPolicy, TreeNode, ValueReport
from .errors import InvalidParameter, SolverError
from .model import (
    KIND_ACT,
    KIND_OBS,
    ControlStrategy,
    FiniteSpace,
    InitialCommonObs,
    NoiseModel,
    ProblemSpec,
    SharingProtocol,
    Slot,
    StrategyNode,
    ValidationFinding,
    ValidationReport,
    build_kernel_from_functional,
    slot_cardinality,
    validate_problem,
)
from .oracle import EnumerationReport
from .protocols import (
    control_sharing_protocol,
    delayed_sharing_protocol,
    no_sharing_protocol,
    periodic_sharing_protocol,
)
from .sim import SimReport, Trajectory

_PRESET_ALIASES = {
    "delayed": "delayed",
    "delayed_sharing": "delayed",
    "delayed_state": "delayed_state",
    "delayed_state_sharing": "delayed_state",
    "periodic": "periodic",
    "periodic_sharing": "periodic",
    "control": "control",
    "control_sharing": "control",
    "no_sharing": "no_sharing",
}


def dumps(doc: Any) -> str:
    """Serialize a document to deterministic, human-readable JSON text."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_file(path: str) -> Any:
    """Load raw JSON; parse errors propagate as json.JSONDecodeError."""
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# -- problem documents -----------------------------------------------------


def _space_to_dict(sp: FiniteSpace) -> dict:
    doc: dict = {"cardinality": sp.cardinality}
    if sp.labels is not None:
        doc["labels"] = list(sp.labels)
    return doc


class _Reader:
    """Collects structural findings while pulling fields out of a document."""

    def __init__(self):
        self.findings: list[ValidationFinding] = []

    def bad(self, code: str, where: str, detail: str):
        self.findings.append(ValidationFinding(code, where, detail))

    @property
    def ok(self) -> bool:
        return not self.findings

    def space(self, doc, where) -> FiniteSpace | None:
        if isinstance(doc, int):
            card, labels = doc, None
        elif isinstance(doc, dict):
            card = doc.get("cardinality")
            labels = doc.get("labels")
        else:
            self.bad("bad-type", where,
                     "expected an integer or an object with 'cardinality'")
            return None
        try:
            return FiniteSpace(card, tuple(labels) if labels else None)
        except (SolverError, TypeError, ValueError) as exc:
            self.bad("bad-space", where, str(exc))
            return None

    def array(self, doc, where, dtype=float) -> np.ndarray | None:
        try:
            return np.asarray(doc, dtype=dtype)
        except (TypeError, ValueError) as exc:
            self.bad("bad-array", where, f"not a rectangular numeric array: {exc}")
            return None

    def stage_list(self, doc, where, dtype=float) -> tuple | None:
        # may legitimately be empty: a one-stage problem has no transitions
        if not isinstance(doc, list):
            self.bad("bad-type", where, "expected a list of stage tables")
            return None
        out = []
        for k, item in enumerate(doc):
            arr = self.array(item, f"{where}[t={k + 1}]", dtype)
            if arr is None:
                return None
            out.append(arr)
        return tuple(out)

    def slot(self, item, where) -> Slot | None:
        if (isinstance(item, (list, tuple)) and len(item) == 2
                and item[0] in (KIND_OBS, KIND_ACT) and isinstance(item[1], int)):
            return Slot(item[0], item[1])
        self.bad("bad-slot", where, f"expected [\"obs\"|\"act\", stage], got {item!r}")
        return None


def _noise_from(reader: _Reader, doc, where) -> NoiseModel | None:
    if not isinstance(doc, dict) or "dist" not in doc:
        reader.bad("bad-type", where, "expected an object with a 'dist' list")
        return None
    dist = reader.array(doc["dist"], f"{where}.dist")
    if dist is None:
        return None
    card = doc.get("cardinality", len(dist))
    try:
        return NoiseModel(FiniteSpace(card), dist)
    except SolverError as exc:
        reader.bad("bad-noise", where, str(exc))
        return None


def _transitions_from(reader: _Reader, doc, mode, n_states, n_actions,
                      horizon) -> tuple | None:
    if not isinstance(doc, dict) or len(doc.keys() & {"kernel", "functional"}) != 1:
        reader.bad("bad-transition", "transition",
                   "expected exactly one of 'kernel' or 'functional'")
        return None
    if "kernel" in doc:
        return reader.stage_list(doc["kernel"], "transition.kernel")
    sub = doc["functional"]
    if not isinstance(sub, dict) or "f_table" not in sub or "noise" not in sub:
        reader.bad("bad-transition", "transition.functional",
                   "expected an object with 'f_table' and 'noise'")
        return None
    noise = _noise_from(reader, sub["noise"], "transition.functional.noise")
    if noise is None:
        return None
    try:
        kernel = build_kernel_from_functional(
            sub["f_table"], noise, n_states=n_states, n_actions=n_actions)
    except SolverError as exc:
        reader.bad("bad-transition", "transition.functional", str(exc))
        return None
    except (TypeError, ValueError) as exc:
        reader.bad("bad-transition", "transition.functional",
                   f"f_table is not a rectangular integer array: {exc}")
        return None
    # the functional form is time-homogeneous: one stage law for all stages
    copies = 1 if mode == "discounted" else max(horizon - 1, 0)
    return (kernel,) * copies


def _protocol_from_preset(reader: _Reader, name, params, horizon,
                          obs_spaces, action_spaces) -> SharingProtocol | None:
    if not isinstance(name, str):
        reader.bad("bad-protocol", "protocol.preset", f"preset name {name!r}")
        return None
    canon = _PRESET_ALIASES.get(name.strip().lower().replace("-", "_"))
    if canon is None:
        reader.bad("unknown-preset", "protocol.preset",
                   f"unknown preset {name!r}; known: "
                   f"{sorted(set(_PRESET_ALIASES.values()))}")
        return None
    params = params if isinstance(params, dict) else {}
    try:
        if canon in ("delayed", "delayed_state"):
            delays = params.get("delays", params.get("s", params.get("delay")))
            if delays is None:
                reader.bad("bad-protocol", "protocol.params",
                           f"preset {canon!r} needs 'delays' (or scalar 's')")
                return None
            return delayed_sharing_protocol(delays, horizon, obs_spaces,
                                            action_spaces)
        if canon == "periodic":
            period = params.get("period", params.get("s"))
            if period is None:
                reader.bad("bad-protocol", "protocol.params",
                           "preset 'periodic' needs 'period' (or 's')")
                return None
            return periodic_sharing_protocol(period, horizon, obs_spaces,
                                             action_spaces)
        if canon == "control":
            return control_sharing_protocol(horizon, obs_spaces, action_spaces)
        window = params.get("window", params.get("s", 0))
        return no_sharing_protocol(window, horizon, obs_spaces, action_spaces)
    except (SolverError, TypeError, ValueError) as exc:
        reader.bad("bad-protocol", "protocol.params", str(exc))
        return None


def _protocol_from_explicit(reader: _Reader, doc, obs_spaces,
                            action_spaces) -> SharingProtocol | None:
    needed = ("memory_slots", "message_slots", "message_maps", "memory_updates")
    if not isinstance(doc, dict) or any(k not in doc for k in needed):
        reader.bad("bad-protocol", "protocol.explicit",
                   f"expected an object with {', '.join(needed)}")
        return None
    n = len(obs_spaces)

    def slot_lists(field, expect_len):
        raw = doc[field]
        if not isinstance(raw, list) or len(raw) != n:
            reader.bad("bad-protocol", f"protocol.explicit.{field}",
                       f"expected one list per controller ({n})")
            return None
        out = []
        for i, per_i in enumerate(raw):
            if not isinstance(per_i, list) or (
                    expect_len is not None and len(per_i) != expect_len):
                reader.bad("bad-protocol", f"protocol.explicit.{field}[i={i}]",
                           "wrong number of stages")
                return None
            stages = []
            for t, per_t in enumerate(per_i, start=1):
                if not isinstance(per_t, list):
                    reader.bad("bad-protocol",
                               f"protocol.explicit.{field}[i={i}][t={t}]",
                               "expected a list of slots")
                    return None
                slots = tuple(
                    reader.slot(s, f"protocol.explicit.{field}[i={i}][t={t}]")
                    for s in per_t)
                if any(s is None for s in slots):
                    return None
                stages.append(slots)
            out.append(tuple(stages))
        return tuple(out)

    mem_slots = slot_lists("memory_slots", None)
    if mem_slots is None:
        return None
    n_stages = len(mem_slots[0])
    if n_stages < 1 or any(len(per_i) != n_stages for per_i in mem_slots):
        reader.bad("bad-protocol", "protocol.explicit.memory_slots",
                   "controllers disagree on the number of stages")
        return None
    msg_slots = slot_lists("message_slots", n_stages - 1)
    if msg_slots is None:
        return None

    def table_lists(field):
        raw = doc[field]
        if not isinstance(raw, list) or len(raw) != n:
            reader.bad("bad-protocol", f"protocol.explicit.{field}",
                       f"expected one list per controller ({n})")
            return None
        out = []
        for i, per_i in enumerate(raw):
            if not isinstance(per_i, list) or len(per_i) != n_stages - 1:
                reader.bad("bad-protocol", f"protocol.explicit.{field}[i={i}]",
                           f"expected {n_stages - 1} stage tables")
                return None
            stages = []
            for t, per_t in enumerate(per_i, start=1):
                arr = reader.array(per_t, f"protocol.explicit.{field}[i={i}][t={t}]",
                                   dtype=np.int64)
                if arr is None:
                    return None
                stages.append(arr)
            out.append(tuple(stages))
        return tuple(out)

    msg_maps = table_lists("message_maps")
    mem_updates = table_lists("memory_updates")
    if msg_maps is None or mem_updates is None:
        return None

    mem_spaces, msg_spaces = [], []
    for i in range(n):
        mem_i, msg_i = [], []
        for slots in mem_slots[i]:
            cards = [slot_cardinality(s, i, obs_spaces, action_spaces)
                     for s in slots]
            mem_i.append(FiniteSpace(int(np.prod(cards, dtype=np.int64)) if cards else 1))
        for slots in msg_slots[i]:
            cards = [slot_cardinality(s, i, obs_spaces, action_spaces)
                     for s in slots]
            msg_i.append(FiniteSpace(
                1 + (int(np.prod(cards, dtype=np.int64)) if cards else 0)))
        mem_spaces.append(tuple(mem_i))
        msg_spaces.append(tuple(msg_i))

    return SharingProtocol(
        n=n, n_stages=n_stages,
        mem_spaces=tuple(mem_spaces), msg_spaces=tuple(msg_spaces),
        mem_slots=mem_slots, msg_slots=msg_slots,
        msg_maps=msg_maps, mem_updates=mem_updates)


def problem_from_dict(doc) -> tuple[ProblemSpec | None, list[ValidationFinding]]:
    """Build a ProblemSpec from a parsed JSON document.

    Structural problems (missing fields, ragged arrays, unknown presets)
    come back as findings with a None spec; probabilistic and witness
    invariants are left to validate_problem.
    """
    reader = _Reader()
    if not isinstance(doc, dict):
        reader.bad("bad-document", "$", "top level must be a JSON object")
        return None, reader.findings

    for field in ("n", "mode", "state", "obs", "actions", "initial_dist",
                  "transition", "obs_kernels", "cost", "protocol"):
        if field not in doc:
            reader.bad("missing-field", field, "required field is absent")
    if not reader.ok:
        return None, reader.findings

    mode = doc["mode"]
    if mode not in ("finite", "discounted"):
        reader.bad("mode", "mode", f"expected 'finite' or 'discounted', got {mode!r}")
        return None, reader.findings
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        reader.bad("bad-type", "n", f"expected a positive integer, got {n!r}")
        return None, reader.findings

    horizon = None
    discount = None
    if mode == "finite":
        horizon = doc.get("T")
        if not isinstance(horizon, int) or horizon < 1:
            reader.bad("bad-type", "T", "finite mode needs a positive integer T")
            return None, reader.findings
    else:
        discount = doc.get("discount")
        if not isinstance(discount, (int, float)) or isinstance(discount, bool):
            reader.bad("bad-type", "discount",
                       "discounted mode needs a numeric discount")
            return None, reader.findings
        discount = float(discount)

    state_space = reader.space(doc["state"], "state")
    obs_docs, act_docs = doc["obs"], doc["actions"]
    for field, value in (("obs", obs_docs), ("actions", act_docs)):
        if not isinstance(value, list) or len(value) != n:
            reader.bad("bad-type", field, f"expected a list of {n} spaces")
            return None, reader.findings
    obs_spaces = [reader.space(d, f"obs[i={i}]") for i, d in enumerate(obs_docs)]
    action_spaces = [reader.space(d, f"actions[i={i}]")
                     for i, d in enumerate(act_docs)]
    if state_space is None or None in obs_spaces or None in action_spaces:
        return None, reader.findings

    initial_dist = reader.array(doc["initial_dist"], "initial_dist")
    n_actions = int(np.prod([sp.cardinality for sp in action_spaces],
                            dtype=np.int64))
    transitions = _transitions_from(reader, doc["transition"], mode,
                                    state_space.cardinality, n_actions, horizon)
    costs = reader.stage_list(doc["cost"], "cost")

    raw_obs = doc["obs_kernels"]
    obs_kernels = None
    if not isinstance(raw_obs, list) or len(raw_obs) != n:
        reader.bad("bad-type", "obs_kernels",
                   f"expected one stage list per controller ({n})")
    else:
        per_i = [reader.stage_list(raw_obs[i], f"obs_kernels[i={i}]")
                 for i in range(n)]
        if None not in per_i:
            obs_kernels = tuple(per_i)

    proto_doc = doc["protocol"]
    protocol = None
    if not isinstance(proto_doc, dict) or len(
            proto_doc.keys() & {"preset", "explicit"}) != 1:
        reader.bad("bad-protocol", "protocol",
                   "expected exactly one of 'preset' or 'explicit'")
    elif "preset" in proto_doc:
        proto_horizon = horizon if mode == "finite" else 2
        protocol = _protocol_from_preset(
            reader, proto_doc["preset"], proto_doc.get("params"), proto_horizon,
            obs_spaces, action_spaces)
    else:
        protocol = _protocol_from_explicit(
            reader, proto_doc["explicit"], obs_spaces, action_spaces)

    common = None
    if doc.get("initial_common_obs") is not None:
        ico = doc["initial_common_obs"]
        if not isinstance(ico, dict) or "kernel" not in ico:
            reader.bad("bad-type", "initial_common_obs",
                       "expected an object with 'cardinality' and 'kernel'")
        else:
            kernel = reader.array(ico["kernel"], "initial_common_obs.kernel")
            space = reader.space(ico.get("cardinality",
                                         np.shape(ico["kernel"])[-1]
                                         if kernel is not None else 0),
                                 "initial_common_obs")
            if kernel is not None and space is not None:
                common = InitialCommonObs(space, kernel)

    if not reader.ok or initial_dist is None or transitions is None \
            or costs is None or obs_kernels is None or protocol is None:
        return None, reader.findings

    spec = ProblemSpec(
        n=n, mode=mode, horizon=horizon, discount=discount,
        state_space=state_space, obs_spaces=tuple(obs_spaces),
        action_spaces=tuple(action_spaces), initial_dist=initial_dist,
        transitions=transitions, obs_kernels=obs_kernels, costs=costs,
        protocol=protocol, initial_common_obs=common)
    return spec, reader.findings


def problem_from_document(doc) -> tuple[ProblemSpec | None, ValidationReport]:
    """Parse and fully validate a problem document."""
    spec, findings = problem_from_dict(doc)
    if spec is None:
        return None, ValidationReport(findings)
    report = validate_problem(spec)
    return spec, ValidationReport(findings + report.findings)


def load_problem(path: str) -> tuple[ProblemSpec | None, ValidationReport]:
    """Read a problem file; JSON syntax errors propagate to the caller."""
    return problem_from_document(parse_file(path))


def _slots_to_json(slots_per_i) -> list:
    return [[[[s.kind, s.time] for s in per_t] for per_t in per_i]
            for per_i in slots_per_i]


def problem_to_dict(spec: ProblemSpec) -> dict:
    """Canonical document for a spec; protocols are always explicit.

    A preset problem and its explicit expansion produce the same
    canonical document, so they share one digest.
    """
    proto = spec.protocol
    doc = {
        "n": spec.n,
        "T": spec.horizon,
        "mode": spec.mode,
        "discount": spec.discount,
        "state": _space_to_dict(spec.state_space),
        "obs": [_space_to_dict(sp) for sp in spec.obs_spaces],
        "actions": [_space_to_dict(sp) for sp in spec.action_spaces],
        "initial_dist": spec.initial_dist.tolist(),
        "transition": {"kernel": [k.tolist() for k in spec.transitions]},
        "obs_kernels": [[k.tolist() for k in per_i] for per_i in spec.obs_kernels],
        "cost": [c.tolist() for c in spec.costs],
        "protocol": {"explicit": {
            "memory_slots": _slots_to_json(proto.mem_slots),
            "message_slots": _slots_to_json(proto.msg_slots),
            "message_maps": [[m.tolist() for m in per_i]
                             for per_i in proto.msg_maps],
            "memory_updates": [[m.tolist() for m in per_i]
                               for per_i in proto.mem_updates],
        }},
    }
    if spec.initial_common_obs is not None:
        ico = spec.initial_common_obs
        doc["initial_common_obs"] = {
            "cardinality": ico.space.cardinality,
            "kernel": ico.kernel.tolist(),
        }
    return doc


def problem_digest(spec: ProblemSpec) -> str:
    """sha256 of the canonical problem encoding."""
    text = json.dumps(problem_to_dict(spec), sort_keys=True,
                      separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- policy documents --------------------------------------------------------


def _belief_to_dict(belief) -> dict:
    return {"dims": list(belief.dims),
            "weights": [float(w) for w in belief.weights]}


def _gamma_to_dict(space: PrescriptionSpace, index: int) -> dict:
    gamma = space.decode(index)
    return {"index": int(index),
            "tables": [t.tolist() for t in gamma.tables]}


def policy_tree_to_dict(spec: ProblemSpec, tree: PolicyTree) -> dict:
    spaces = {t: PrescriptionSpace(spec, t) for t in range(1, tree.horizon + 1)}
    stages = []
    for stage in tree.stages:
        stages.append([{
            "id": nd.node_id,
            "t": nd.t,
            "belief": _belief_to_dict(nd.belief),
            "gamma": _gamma_to_dict(spaces[nd.t], nd.gamma_index),
            "value": float(nd.value),
            "children": {str(z): int(c) for z, c in sorted(nd.children.items())},
        } for nd in stage])
    return {
        "kind": "policy_tree",
        "variant": tree.variant,
        "horizon": tree.horizon,
        "problem_digest": problem_digest(spec),
        "roots": [[float(p), int(i)] for p, i in tree.roots],
        "stages": stages,
    }


def policy_tree_from_dict(doc, spec: ProblemSpec) -> PolicyTree:
    variant = doc["variant"]
    cls = ReducedBelief if variant == "reduced" else Belief
    stages = []
    for stage_doc in doc["stages"]:
        stage = []
        for nd in stage_doc:
            belief = cls(t=nd["t"], n=spec.n, dims=tuple(nd["belief"]["dims"]),
                         weights=np.asarray(nd["belief"]["weights"], dtype=float))
            stage.append(TreeNode(
                node_id=nd["id"], t=nd["t"], belief=belief,
                gamma_index=int(nd["gamma"]["index"]), value=float(nd["value"]),
                children={int(z): int(c) for z, c in nd["children"].items()}))
        stages.append(stage)
    return PolicyTree(
        variant=variant, horizon=doc["horizon"],
        roots=tuple((float(p), int(i)) for p, i in doc["roots"]),
        stages=stages).finalize()


def control_strategy_to_dict(spec: ProblemSpec,
                             strategy: ControlStrategy) -> dict:
    stages = []
    for stage in strategy.stages:
        stages.append([{
            "id": nd.node_id,
            "t": nd.t,
            "tables": [t.tolist() for t in nd.tables],
            "children": {str(z): int(c) for z, c in sorted(nd.children.items())},
        } for nd in stage])
    return {
        "kind": "control_strategy",
        "n": strategy.n,
        "horizon": strategy.horizon,
        "problem_digest": problem_digest(spec),
        "roots": [[float(p), int(i)] for p, i in strategy.roots],
        "stages": stages,
    }


def control_strategy_from_dict(doc, spec: ProblemSpec) -> ControlStrategy:
    stages = []
    for stage_doc in doc["stages"]:
        stages.append([StrategyNode(
            node_id=nd["id"], t=nd["t"],
            tables=tuple(np.asarray(t, dtype=np.int64) for t in nd["tables"]),
            children={int(z): int(c) for z, c in nd["children"].items()},
        ) for nd in stage_doc])
    return ControlStrategy(
        n=doc["n"], horizon=doc["horizon"],
        roots=tuple((float(p), int(i)) for p, i in doc["roots"]),
        stages=stages).finalize()


def stationary_policy_to_dict(spec: ProblemSpec,
                              policy: StationaryPolicy) -> dict:
    space = PrescriptionSpace(spec, 1)
    entries = []
    for entry in policy.entries:
        entries.append({
            "key": entry.belief.canonical_key()[1].hex(),
            "belief": _belief_to_dict(entry.belief),
            "gamma": _gamma_to_dict(space, entry.gamma_index),
            "value": float(entry.value),
            "children": {str(z): key.hex()
                         for z, key in sorted(entry.children.items())},
        })
    return {
        "kind": "stationary_policy",
        "problem_digest": problem_digest(spec),
        "epsilon": policy.epsilon,
        "iterations": policy.iterations,
        "residual": policy.residual,
        "tail_bound": policy.tail_bound,
        "value": policy.value,
        "entries": entries,
    }


def policy_from_document(doc, spec: ProblemSpec):
    """Decode a policy document, checking it matches the given problem.

    Accepts a solve result (unwrapping its policy), a policy tree, or a
    control strategy.  Raises InvalidParameter on unknown kinds, on a
    digest mismatch, and on structurally broken documents.
    """
    if not isinstance(doc, dict):
        raise InvalidParameter("policy document must be a JSON object")
    kind = doc.get("kind")
    if kind == "solve_result":
        return policy_from_document(doc.get("policy"), spec)
    stored = doc.get("problem_digest")
    expect = problem_digest(spec)
    if stored != expect:
        raise InvalidParameter(
            f"policy was produced for a different problem: its digest is "
            f"{stored}, the problem's is {expect}")
    try:
        if kind == "policy_tree":
            return policy_tree_from_dict(doc, spec)
        if kind == "control_strategy":
            return control_strategy_from_dict(doc, spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameter(f"malformed {kind} document: {exc!r}") from exc
    raise InvalidParameter(
        f"cannot simulate a document of kind {kind!r}; expected a policy "
        f"tree or a control strategy")


# -- report documents --------------------------------------------------------


def value_report_to_dict(report: ValueReport) -> dict:
    doc = {
        "kind": "value_report",
        "value": report.value,
        "variant": report.variant,
        "mode": report.mode,
        "stage_nodes": list(report.stage_nodes),
        "prescription_space_sizes": list(report.prescription_space_sizes),
        "expanded_classes": list(report.expanded_classes),
    }
    if report.iterations is not None:
        doc["iterations"] = report.iterations
        doc["residual"] = report.residual
        doc["tail_bound"] = report.tail_bound
    return doc


def solve_result_to_dict(spec: ProblemSpec, report: ValueReport,
                         policy) -> dict:
    if isinstance(policy, PolicyTree):
        policy_doc = policy_tree_to_dict(spec, policy)
    else:
        policy_doc = stationary_policy_to_dict(spec, policy)
    return {
        "kind": "solve_result",
        "problem_digest": problem_digest(spec),
        "report": value_report_to_dict(report),
        "policy": policy_doc,
    }


def enumeration_report_to_dict(spec: ProblemSpec,
                               report: EnumerationReport) -> dict:
    return {
        "kind": "enumeration_report",
        "enumeration": report.kind,
        "count": report.count,
        "minimum": report.minimum,
        "strategy": control_strategy_to_dict(spec, report.strategy),
    }


def enumeration_result_to_dict(spec: ProblemSpec, basic: EnumerationReport,
                               coordinator: EnumerationReport) -> dict:
    return {
        "kind": "enumeration_result",
        "problem_digest": problem_digest(spec),
        "basic": enumeration_report_to_dict(spec, basic),
        "coordinator": enumeration_report_to_dict(spec, coordinator),
        "minimum_gap": abs(basic.minimum - coordinator.minimum),
    }


def sim_report_to_dict(report: SimReport) -> dict:
    return {
        "kind": "sim_report",
        "episodes": report.episodes,
        "seed": report.seed,
        "mean": report.mean,
        "stderr": report.stderr,
        "violations": report.violations,
    }


def trajectory_to_dict(tr: Trajectory) -> dict:
    return {
        "episode": tr.episode,
        "states": list(tr.states),
        "obs": [list(o) for o in tr.obs],
        "actions": [list(a) for a in tr.actions],
        "messages": list(tr.messages),
        "memories": [list(m) for m in tr.memories],
        "nodes": list(tr.nodes),
        "cost": tr.cost,
    }


def validation_report_to_dict(report: ValidationReport) -> dict:
    return {
        "kind": "validation_report",
        "ok": report.ok,
        "findings": [{"code": f.code, "where": f.where, "detail": f.detail}
                     for f in report.findings],
    }
