"""Translating timed mobile ambients into membrane systems.

Capabilities become timed objects (``in:2 m`` becomes the object
``in_m:2``; co-capabilities become co-objects), ambients become membranes
with the same name and timer, parallel composition becomes multiset and
child union, and prefix order is erased: a continuation's objects appear
immediately next to the guarding capability. Tags are dropped. The result
is wrapped in a synthetic ``skin`` membrane with timer ``inf``, which is
also the default output membrane.

Rule generation pairs every two distinct ambient names (n, m) such that a
positive capability targeting m occurs: one endo rule consuming
``in_m``/``~in_m`` and one exo rule consuming ``out_m``/``~out_m``.

Because prefix order is erased the translation is not injective: a
membrane configuration reached by one movement step can be the image of a
process the ambient semantics cannot reach (its capabilities reordered).
``check_preimage_reordering`` demonstrates this on a given process.

Two membrane-side transition relations are used by the correspondence
checks. The literal relation applies exactly one generated rule and
changes nothing else (no timer decrements, no clock phases), mirroring the
generated rules' right-hand sides; against it the translation commutes
with reduction on the nose. The default engine relation (full steps)
matches only after erasing timers, since the engine ticks bystanders and
decrements the moving membrane.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Iterator, Sequence

from .core import (
    INF,
    Configuration,
    EndoRule,
    ExoRule,
    Fresh,
    MembraneNode,
    Multiset,
    Rule,
    Symbol,
    Timer,
    canonicalize,
    renumber,
)
from . import ambient as amb
from .ambient import Amb, Capability, Prefix, Process
from .engine import Instance, find_instances

SKIN_LABEL = "skin"


class TranslateError(ValueError):
    pass


def cap_symbol(cap: Capability) -> Symbol:
    return Symbol(f"{cap.kind}_{cap.target}", cap.co)


def cap_from_symbol(sym: Symbol, timer: Timer) -> Capability | None:
    for kind in ("in", "out"):
        if sym.name.startswith(kind + "_"):
            return Capability(kind, sym.is_co, sym.name[len(kind) + 1:], timer)
    return None


def translate(p: Process) -> Configuration:
    """Membrane image of a process, wrapped in the synthetic skin."""
    if SKIN_LABEL in amb.ambient_names(p):
        raise TranslateError(f"ambient name {SKIN_LABEL!r} is reserved for the synthetic skin")

    def region(q: Process) -> tuple[list, list]:
        objects: list = []
        children: list = []
        for comp in amb.soup(amb.normalize(q)):
            if isinstance(comp, Prefix):
                objects.append(((cap_symbol(comp.cap)), comp.cap.timer))
                inner_objs, inner_kids = region(comp.cont)
                objects.extend(inner_objs)
                children.extend(inner_kids)
            elif isinstance(comp, Amb):
                inner_objs, inner_kids = region(comp.body)
                children.append(
                    MembraneNode(comp.name, comp.timer, Multiset(inner_objs), tuple(inner_kids))
                )
            else:  # pragma: no cover - soup() drops Zero and flattens Par
                raise TranslateError(f"unexpected component {comp!r}")
        return objects, children

    objs, kids = region(p)
    skin = MembraneNode(SKIN_LABEL, INF, Multiset(objs), tuple(kids))
    return renumber(Configuration(skin, SKIN_LABEL))


def generate_rules(p: Process, strict: bool = False) -> tuple[Rule, ...]:
    """Movement rules for every (mover, target) name pair with a positive
    capability aimed at the target. ``strict`` keeps the moving membrane's
    timer unchanged, matching the generated rules' literal right sides."""
    names = sorted(amb.ambient_names(p))
    targets = sorted({c.target for c in amb.capabilities(p) if not c.co})
    rules: list[Rule] = []
    for m in targets:
        if m not in names:
            continue
        for n in names:
            if n == m:
                continue
            in_sym = Symbol(f"in_{m}")
            out_sym = Symbol(f"out_{m}")
            rules.append(EndoRule(
                n, m, Multiset([in_sym]), name=f"in:{n}>{m}", keep_active_timer=strict,
            ))
            rules.append(ExoRule(
                n, m, Multiset([out_sym]), name=f"out:{n}<{m}", keep_active_timer=strict,
            ))
    return tuple(rules)


# ---------------------------------------------------------------------------
# Literal transition relation

def _literal_apply(config: Configuration, instances: Sequence[Instance]) -> Configuration:
    """Fire the instances simultaneously and change nothing else: consumed
    objects are replaced by the right-hand sides (carried timers unchanged),
    active membranes move, and no timer anywhere is touched. No clock
    phases, no dissolution."""

    class Node:
        __slots__ = ("src", "children", "content", "parent")

        def __init__(self, src: MembraneNode, parent):
            self.src = src
            self.children = [c.uid for c in src.children]
            self.content = src.content
            self.parent = parent

    nodes: dict[int, Node] = {}

    def load(node: MembraneNode, parent):
        nodes[node.uid] = Node(node, parent)
        for child in node.children:
            load(child, node.uid)

    load(config.skin, None)

    def products(prods, classes):
        out = []
        for sym, spec in prods:
            if isinstance(spec, Fresh):
                out.append((sym, spec.timer))
            else:
                out.append((sym, classes[spec.slot][1]))
        return out

    for inst in instances:
        active = nodes[inst.active_uid]
        passive = nodes[inst.passive_uid]
        active.content = active.content.difference(Multiset(list(inst.active_classes)))
        passive.content = passive.content.difference(Multiset(list(inst.passive_classes)))
        for cls in products(inst.rule.w, inst.active_classes):
            active.content = active.content.add(cls)
        for cls in products(inst.rule.w2, inst.passive_classes):
            passive.content = passive.content.add(cls)
    for inst in instances:
        active = nodes[inst.active_uid]
        nodes[active.parent].children.remove(inst.active_uid)
        if isinstance(inst.rule, EndoRule):
            nodes[inst.passive_uid].children.append(inst.active_uid)
            active.parent = inst.passive_uid
        else:
            grandparent = nodes[inst.passive_uid].parent
            if grandparent is None:
                del nodes[inst.active_uid]  # out of the skin: detached
            else:
                nodes[grandparent].children.append(inst.active_uid)
                active.parent = grandparent

    def rebuild(uid: int) -> MembraneNode:
        node = nodes[uid]
        return replace(
            node.src, content=node.content,
            children=tuple(rebuild(c) for c in node.children),
        )

    return Configuration(rebuild(config.skin.uid), config.output_label)


def literal_successors(
    config: Configuration, rules: Sequence[Rule]
) -> list[tuple[tuple, Configuration]]:
    """The translation-level reduction: any nonempty conflict-free set of
    movement instances fires simultaneously (matching a reduction step that
    composes independent movements), with no clock. Deduplicated by
    canonical key."""
    from .engine import _addable, _availability, _needs

    instances = [i for i in find_instances(config, rules) if i.is_move]
    avail = _availability(config)
    seen: dict[str, tuple[tuple, Configuration]] = {}

    def explore(k: int, usage: dict, actives: frozenset, passives: frozenset, chosen: tuple):
        if chosen:
            result = _literal_apply(config, chosen)
            seen.setdefault(canonicalize(result), (chosen, result))
        for idx in range(k, len(instances)):
            inst = instances[idx]
            if not _addable(inst, avail, usage, actives, passives):
                continue
            usage2 = dict(usage)
            for key, n in _needs(inst).items():
                usage2[key] = usage2.get(key, 0) + n
            explore(idx + 1, usage2, actives | {inst.active_uid},
                    passives | {inst.passive_uid}, chosen + (inst,))

    explore(0, {}, frozenset(), frozenset(), ())
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# Correspondence: ambient reductions map to membrane reductions

def _ambient_reachable(p: Process, depth: int) -> list[tuple[Process, int]]:
    from collections import deque

    start = amb.normalize(p)
    seen = {amb.canonical_key(start): (start, 0)}
    queue = deque([(start, 0)])
    while queue:
        current, d = queue.popleft()
        if d >= depth:
            continue
        for succ in amb.reduce_step(current):
            key = amb.canonical_key(succ)
            if key not in seen:
                seen[key] = (succ, d + 1)
                queue.append((succ, d + 1))
    return sorted(seen.values(), key=lambda pair: amb.canonical_key(pair[0]))


def check_correspondence_PQ(p: Process, depth: int = 1) -> dict:
    """For every non-time ambient reduction P' -> Q' reachable within
    ``depth``, the literal membrane relation takes translate(P') to a
    configuration with the same canonical key as translate(Q')."""
    rules = generate_rules(p, strict=True)
    edges = 0
    misses: list[dict] = []
    for state, d in _ambient_reachable(p, depth - 1 if depth > 0 else 0):
        if not amb.redexes(state):
            continue  # its one successor is the clock tick
        membrane_keys = {
            canonicalize(cfg) for _i, cfg in literal_successors(translate(state), rules)
        }
        for succ in amb.reduce_step(state):
            edges += 1
            want = canonicalize(translate(succ))
            if want not in membrane_keys:
                misses.append({
                    "process": amb.canonical_key(state),
                    "reduct": amb.canonical_key(succ),
                    "wanted": want,
                })
    return {"edges": edges, "misses": misses, "ok": not misses}


# ---------------------------------------------------------------------------
# Preimages and the reordering phenomenon

def _chain(caps: Sequence[Capability], tail: Process) -> Process:
    out = tail
    for cap in reversed(caps):
        out = Prefix(cap, out)
    return out


def _arrangements(caps: list[Capability]) -> Iterator[list[list[Capability]]]:
    """All ways to arrange a capability multiset into ordered chains."""
    from itertools import permutations

    n = len(caps)
    if n == 0:
        yield []
        return
    seen = set()
    for perm in permutations(range(n)):
        for mask in range(1 << (n - 1)):
            chains: list[list[Capability]] = [[]]
            for idx, pos in enumerate(perm):
                chains[-1].append(caps[pos])
                if idx < n - 1 and mask & (1 << idx):
                    chains.append([])
            sig = tuple(tuple((c.kind, c.co, c.target, c.timer) for c in ch) for ch in chains)
            sig = tuple(sorted(sig))
            if sig not in seen:
                seen.add(sig)
                yield chains


def preimage_processes(config: Configuration, limit: int = 2000) -> list[Process]:
    """Processes Q with translate(Q) equal to ``config``, searching over
    capability orderings (children stay parallel, never nested under a
    prefix). Empty when some object is not capability-shaped."""

    def options(node: MembraneNode) -> list[Process] | None:
        caps: list[Capability] = []
        for (sym, t), count in node.content.items():
            cap = cap_from_symbol(sym, t)
            if cap is None:
                return None
            caps.extend([cap] * count)
        child_options: list[list[Process]] = []
        for child in node.children:
            opts = options(child)
            if opts is None:
                return None
            child_options.append([Amb(child.label, child.timer, body) for body in opts])
        results: list[Process] = []
        from itertools import product

        for chains in _arrangements(caps):
            chain_procs = [_chain(chain, amb.ZERO) for chain in chains]
            for kids in product(*child_options) if child_options else [()]:
                results.append(amb.par(*chain_procs, *kids))
                if len(results) > limit:
                    return results
        return results

    bodies = options(config.skin)
    if bodies is None:
        return []
    out: dict[str, Process] = {}
    for body in bodies:
        out.setdefault(amb.canonical_key(body), body)
    return [out[k] for k in sorted(out)]


def some_preimage(config: Configuration) -> Process | None:
    """One canonical preimage: every capability its own parallel prefix."""

    def build(node: MembraneNode) -> Process | None:
        parts: list[Process] = []
        for (sym, t), count in node.content.items():
            cap = cap_from_symbol(sym, t)
            if cap is None:
                return None
            parts.extend([Prefix(cap, amb.ZERO)] * count)
        for child in node.children:
            body = build(child)
            if body is None:
                return None
            parts.append(Amb(child.label, child.timer, body))
        return amb.par(*parts)

    return build(config.skin)


def check_preimage_reordering(p: Process) -> dict:
    """Demonstrates non-injectivity of the translation on prefix order: a
    membrane reduct N of translate(p) has a preimage Q (capabilities
    reordered) that is not among p's one-step reducts."""
    p = amb.normalize(p)
    rules = generate_rules(p, strict=True)
    config = translate(p)
    reducts = amb.reduce_step(p) if amb.redexes(p) else []
    # tag-erased comparison: the phenomenon is about prefix order, and a
    # preimage differing from a reduct only in tags is not a reordering
    reduct_keys = {amb.canonical_key(amb.erase_tags(q)) for q in reducts}
    report: dict = {"targets": [], "reordering_found": False, "degenerate": False}
    targets = literal_successors(config, rules)
    if not targets:
        report["degenerate"] = True
        return report
    for _inst, n_config in targets:
        n_key = canonicalize(n_config)
        preimages = preimage_processes(n_config)
        fresh = []
        for q in preimages:
            assert canonicalize(translate(q)) == n_key
            if amb.canonical_key(amb.erase_tags(q)) not in reduct_keys:
                fresh.append(q)
        entry = {
            "n_key": n_key,
            "preimages": len(preimages),
            "unreachable_preimages": [amb.canonical_key(q) for q in fresh],
        }
        report["targets"].append(entry)
        if fresh:
            report["reordering_found"] = True
    if all(t["preimages"] <= 1 for t in report["targets"]):
        report["degenerate"] = True
    return report
