"""Bounded exhaustive exploration and the equivalence checkers.

Reach graphs are built breadth-first with canonical-key deduplication, so
recorded depths are minimal and the graph is deterministic for a given
system and bound. A configurable node cap aborts exploration with the
partial graph; checks over truncated graphs report ``inconclusive``.

Three checks constitute the toolkit's oracle:

* ``check_embedding`` (CLI token ``prop1``): an untimed system and its
  all-INF embedding have canonically equal reach graphs (after erasing
  timers) and equal per-depth output readings.
* ``check_timer_elimination`` (CLI token ``prop2``): the timed system and
  its compiled untimed twin reach the same projected configuration sets
  within every depth bound, preserve membrane counts, and the compiled
  states keep counters sound.
* ``check_translation`` (CLI token ``prop45``): every non-time ambient
  reduction is matched by a membrane reduction with the same translated
  image (timer-erased against full engine steps, exact against the literal
  one-rule relation), and every reachable membrane state has some ambient
  preimage. Preimages the ambient side cannot reach are reported as
  informative, not failing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import Configuration, Rule, canonicalize, per_membrane_readings, output_reading
from .engine import choice_describe, successors
from .untimed import (
    UConfig,
    erase_timers,
    u_canonicalize,
    u_output_reading,
    u_successors,
)
from .compiler import (
    counter_soundness_violations,
    eliminate_timers,
    embed_infinite,
    project,
    _label_timers,
)
from . import ambient as amb
from .translate import (
    check_correspondence_PQ,
    check_preimage_reordering,
    generate_rules as _generate_rules,
    some_preimage,
    translate as _translate,
)

DEFAULT_NODE_CAP = 100_000


class BudgetExceeded(Exception):
    """Node cap hit; carries the partial graph."""

    def __init__(self, graph: "ReachGraph"):
        super().__init__(f"exploration exceeded {len(graph.nodes)} nodes")
        self.graph = graph


@dataclass
class NodeRecord:
    key: str
    depth: int
    halted: bool
    membranes: int
    output: tuple
    per_membrane: tuple = ()

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "depth": self.depth,
            "halted": self.halted,
            "membranes": self.membranes,
            "output": list(self.output),
            "per_membrane": [[uid, list(syms)] for uid, syms in self.per_membrane],
        }


@dataclass
class ReachGraph:
    root: str
    depth: int
    nodes: dict = field(default_factory=dict)      # key -> NodeRecord
    edges: list = field(default_factory=list)      # (src key, label, dst key)
    objects: dict = field(default_factory=dict)    # key -> state object
    truncated: bool = False

    def per_depth_keys(self) -> dict[int, set]:
        out: dict[int, set] = {}
        for record in self.nodes.values():
            out.setdefault(record.depth, set()).add(record.key)
        return out

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "depth": self.depth,
            "truncated": self.truncated,
            "nodes": [self.nodes[k].to_json() for k in sorted(self.nodes)],
            "edges": [{"src": s, "label": l, "dst": d} for s, l, d in self.edges],
            "stats": {"nodes": len(self.nodes), "edges": len(self.edges)},
        }


def _bfs(root, key_fn: Callable, succ_fn: Callable, meta_fn: Callable, depth: int, max_nodes: int) -> ReachGraph:
    root_key = key_fn(root)
    graph = ReachGraph(root=root_key, depth=depth)
    graph.nodes[root_key] = meta_fn(root, root_key, 0)
    graph.objects[root_key] = root
    frontier = deque([root_key])
    for level in range(depth):
        next_frontier: deque = deque()
        while frontier:
            key = frontier.popleft()
            state = graph.objects[key]
            succ = succ_fn(state)
            dst_keys = []
            for label, nxt in succ:
                nxt_key = key_fn(nxt)
                dst_keys.append(nxt_key)
                graph.edges.append((key, label, nxt_key))
                if nxt_key not in graph.nodes:
                    if len(graph.nodes) >= max_nodes:
                        graph.truncated = True
                        raise BudgetExceeded(graph)
                    graph.nodes[nxt_key] = meta_fn(nxt, nxt_key, level + 1)
                    graph.objects[nxt_key] = nxt
                    next_frontier.append(nxt_key)
            if succ and all(k == key for k in dst_keys):
                graph.nodes[key].halted = True
        frontier = next_frontier
    return graph


def explore_membranes(
    config: Configuration,
    rules: Sequence[Rule],
    depth: int,
    max_nodes: int = DEFAULT_NODE_CAP,
) -> ReachGraph:
    """BFS over the timed engine's legal step choices."""

    def succ(state):
        return [(choice_describe(choice), cfg) for choice, cfg in successors(state, rules)]

    def meta(state, key, d):
        reading = tuple(sorted(str(s) for s in output_reading(state)))
        per_mem = tuple(
            (uid, tuple(sorted(str(s) for s in syms)))
            for uid, syms in per_membrane_readings(state)
        )
        return NodeRecord(key, d, False, sum(1 for _ in state.skin.walk()), reading, per_mem)

    return _bfs(config, canonicalize, succ, meta, depth, max_nodes)


def explore_untimed(
    config: UConfig,
    rules: Sequence[Rule],
    depth: int,
    max_nodes: int = DEFAULT_NODE_CAP,
) -> ReachGraph:
    """BFS over the untimed engine's maximal choices."""

    def succ(state):
        out = []
        for choice, cfg in u_successors(state, rules):
            label = " + ".join(i.describe() for i in choice) if choice else "(empty)"
            out.append((label, cfg))
        return out

    def meta(state, key, d):
        reading = tuple(sorted(str(s) for s in u_output_reading(state)))
        return NodeRecord(key, d, False, sum(1 for _ in state.skin.walk()), reading)

    return _bfs(config, u_canonicalize, succ, meta, depth, max_nodes)


def explore_ambients(p, depth: int, max_nodes: int = DEFAULT_NODE_CAP) -> ReachGraph:
    """BFS over ambient reduction; edges are movement steps or the clock."""
    p = amb.normalize(p)

    def succ(state):
        moved = bool(amb.redexes(state))
        label = "move" if moved else "time"
        return [(label, q) for q in amb.reduce_step(state)]

    def meta(state, key, d):
        count = sum(1 for _ in _amb_walk(state))
        return NodeRecord(key, d, False, count, ())

    return _bfs(p, amb.canonical_key, succ, meta, depth, max_nodes)


def _amb_walk(p):
    if isinstance(p, amb.Amb):
        yield p
        yield from _amb_walk(p.body)
    elif isinstance(p, amb.Par):
        for part in p.parts:
            yield from _amb_walk(part)
    elif isinstance(p, amb.Prefix):
        yield from _amb_walk(p.cont)


# ---------------------------------------------------------------------------
# Verdicts

@dataclass
class Verdict:
    check: str
    ok: bool | None  # None = inconclusive (budget exceeded)
    details: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.ok is True:
            return 0
        if self.ok is None:
            return 2
        return 1

    def to_json(self) -> dict:
        status = "pass" if self.ok else ("inconclusive" if self.ok is None else "fail")
        return {"check": self.check, "verdict": status, "details": self.details}


def check_embedding(
    config: UConfig,
    rules: Sequence[Rule],
    depth: int,
    max_nodes: int = DEFAULT_NODE_CAP,
    embedded: tuple | None = None,
) -> Verdict:
    """Untimed system vs its all-INF embedding: keyed graphs must be equal
    after erasing timers, and output readings must match at every depth.
    ``embedded`` overrides the embedding (used to mutation-test the check
    itself)."""
    try:
        untimed_graph = explore_untimed(config, rules, depth, max_nodes)
        timed_config, timed_rules = embedded or embed_infinite(config, rules)
        timed_graph = explore_membranes(timed_config, timed_rules, depth, max_nodes)
    except BudgetExceeded as err:
        return Verdict("prop1", None, {"reason": str(err)})

    def erased(key: str) -> str:
        return u_canonicalize(erase_timers(timed_graph.objects[key]))

    mapping = {key: erased(key) for key in timed_graph.nodes}
    nodes_u = set(untimed_graph.nodes)
    nodes_t = set(mapping.values())
    details: dict = {
        "untimed_nodes": len(nodes_u),
        "embedded_nodes": len(timed_graph.nodes),
    }
    witnesses = []
    if nodes_u != nodes_t:
        witnesses.append({
            "missing_in_embedding": sorted(nodes_u - nodes_t)[:3],
            "extra_in_embedding": sorted(nodes_t - nodes_u)[:3],
        })
    depths_u = {k: r.depth for k, r in untimed_graph.nodes.items()}
    depths_t: dict[str, int] = {}
    for key, record in timed_graph.nodes.items():
        e = mapping[key]
        depths_t[e] = min(depths_t.get(e, record.depth), record.depth)
    if not witnesses and depths_u != depths_t:
        diff = [k for k in depths_u if depths_u[k] != depths_t.get(k)]
        witnesses.append({"depth_mismatch": sorted(diff)[:3]})
    edges_u = {(s, d) for s, _l, d in untimed_graph.edges}
    edges_t = {(mapping[s], mapping[d]) for s, _l, d in timed_graph.edges}
    if edges_u != edges_t:
        witnesses.append({
            "missing_edges": sorted(edges_u - edges_t)[:3],
            "extra_edges": sorted(edges_t - edges_u)[:3],
        })
    outputs_u: dict[int, set] = {}
    for key, record in untimed_graph.nodes.items():
        outputs_u.setdefault(record.depth, set()).add(record.output)
    outputs_t: dict[int, set] = {}
    for key, record in timed_graph.nodes.items():
        outputs_t.setdefault(record.depth, set()).add(record.output)
    if outputs_u != outputs_t:
        witnesses.append({"output_mismatch_depths": sorted(
            d for d in set(outputs_u) | set(outputs_t) if outputs_u.get(d) != outputs_t.get(d)
        )})
    details["witnesses"] = witnesses
    details["isomorphic"] = not witnesses
    return Verdict("prop1", not witnesses, details)


def check_timer_elimination(
    config: Configuration,
    rules: Sequence[Rule],
    depth: int,
    max_nodes: int = DEFAULT_NODE_CAP,
) -> Verdict:
    """Timed system vs its compiled untimed twin: equal projected reachable
    sets within every k <= depth, preserved membrane counts, sound
    counters."""
    compiled_config, compiled_rules = eliminate_timers(config, rules)
    counter_labels = {
        label for label, t in _label_timers(config).items() if t != float("inf")
    }
    try:
        timed_graph = explore_membranes(config, rules, depth, max_nodes)
        compiled_graph = explore_untimed(compiled_config, compiled_rules, depth, max_nodes)
    except BudgetExceeded as err:
        return Verdict("prop2", None, {"reason": str(err)})

    details: dict = {
        "timed_nodes": len(timed_graph.nodes),
        "compiled_nodes": len(compiled_graph.nodes),
        "initial_membranes_equal":
            sum(1 for _ in config.skin.walk()) == sum(1 for _ in compiled_config.skin.walk()),
    }
    witnesses = []

    soundness = []
    for key in compiled_graph.nodes:
        problems = counter_soundness_violations(compiled_graph.objects[key], counter_labels)
        if problems:
            soundness.append({"state": key, "problems": problems})
    if soundness:
        witnesses.append({"counter_soundness": soundness[:3]})

    def proj_info(graph):
        per_state = {}
        for key, record in graph.nodes.items():
            p = project(graph.objects[key])
            per_state[key] = (u_canonicalize(p), record.depth, sum(1 for _ in p.skin.walk()))
        return per_state

    timed_proj = proj_info(timed_graph)
    compiled_proj = proj_info(compiled_graph)
    for k in range(depth + 1):
        timed_set = {pk for pk, d, _m in timed_proj.values() if d <= k}
        compiled_set = {pk for pk, d, _m in compiled_proj.values() if d <= k}
        if timed_set != compiled_set:
            witnesses.append({
                "depth": k,
                "only_timed": sorted(timed_set - compiled_set)[:3],
                "only_compiled": sorted(compiled_set - timed_set)[:3],
            })
            break
    counts_timed = {pk: m for pk, _d, m in timed_proj.values()}
    counts_compiled = {pk: m for pk, _d, m in compiled_proj.values()}
    for pk in set(counts_timed) & set(counts_compiled):
        if counts_timed[pk] != counts_compiled[pk]:
            witnesses.append({"membrane_count_mismatch": pk})
            break
    details["witnesses"] = witnesses
    return Verdict("prop2", not witnesses, details)


def check_translation(p, depth: int, max_nodes: int = DEFAULT_NODE_CAP) -> Verdict:
    """Both correspondence directions for the ambient translation, plus the
    reordered-preimage phenomenon as an informative note."""
    p = amb.normalize(p)
    default_rules = _generate_rules(p)
    strict_report = check_correspondence_PQ(p, depth)
    try:
        ambient_graph = explore_ambients(p, depth, max_nodes)
        membrane_graph = explore_membranes(_translate(p), default_rules, depth, max_nodes)
    except BudgetExceeded as err:
        return Verdict("prop45", None, {"reason": str(err)})

    pq_misses = []
    pq_edges = 0
    for state_key, record in ambient_graph.nodes.items():
        state = ambient_graph.objects[state_key]
        if not amb.redexes(state):
            continue
        if record.depth >= depth:
            continue
        image = _translate(state)
        erased_successors = {
            u_canonicalize(erase_timers(cfg)) for _c, cfg in successors(image, default_rules)
        }
        for succ in amb.reduce_step(state):
            pq_edges += 1
            want = u_canonicalize(erase_timers(_translate(succ)))
            if want not in erased_successors:
                pq_misses.append({"state": state_key, "reduct": amb.canonical_key(succ)})

    mn_misses = []
    preimage_notes = []
    for key in membrane_graph.nodes:
        state = membrane_graph.objects[key]
        candidate = some_preimage(state)
        if candidate is None:
            mn_misses.append({"state": key})
            continue
        if amb.canonical_key(candidate) not in ambient_graph.nodes:
            preimage_notes.append({
                "state": key,
                "preimage": amb.canonical_key(candidate),
            })

    reordering = check_preimage_reordering(p)
    ok = strict_report["ok"] and not pq_misses and not mn_misses
    details = {
        "pq_exact": strict_report,
        "pq_erased": {"edges": pq_edges, "misses": pq_misses},
        "mn": {"nodes": len(membrane_graph.nodes), "misses": mn_misses},
        "preimages_not_in_ambient_graph": preimage_notes[:5],
        "reordering": reordering,
    }
    return Verdict("prop45", ok, details)
