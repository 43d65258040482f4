"""One global step of the timed semantics.

A step applies a chosen multiset of endo/exo/rewrite instances and then the
clock phases, in this order:

1. All chosen instances fire simultaneously against the original tree:
   bound objects are consumed, right-hand sides are produced (carried
   objects lose one tick, fresh objects get the rule's timer), moved
   membranes are re-parented with their whole contents, and each active
   membrane's timer is decremented. A membrane moved outside the skin is
   detached, frozen, and archived in the step record.
2. Every unbound pre-existing object with timer 0 is deleted.
3. Every remaining unbound pre-existing object is ticked (``INF`` stays).
   Objects produced in phase 1 already took their rule for this step and
   are left alone.
4. Every non-skin membrane that was not active this step and has timer 0
   receives the dissolution marker; then every marker-holding membrane is
   dissolved bottom-up, spilling objects and children (with their own
   timers) into its parent. The skin swallows markers without dissolving.
5. Every surviving membrane that was not active this step is ticked.

Choice selection comes in two strengths. ``maximal_choices`` returns the
saturated choices: no applicable instance can be added at all. This is what
``run`` executes. ``step_choices`` additionally admits choices in which an
object with a *finite* timer sits out an enabled move and simply ticks —
objects are chosen nondeterministically with no priority among rules, and a
finite-timer object always has the tick to fall back on. An instance all of
whose bound objects carry timer ``INF`` has no such fallback and is never
refusable, so on systems with only infinite timers the two notions agree.
``successors`` and the explorer enumerate ``step_choices``; this is what
makes the timer-elimination equivalence checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .core import (
    DELTA,
    DELTA_NAME,
    INF,
    Configuration,
    EndoRule,
    ExoRule,
    Fresh,
    Carry,
    MembraneNode,
    Multiset,
    RewriteRule,
    Rule,
    canonicalize,
    canonical_render,
    decrement,
    timer_str,
)


class StaleChoiceError(ValueError):
    """The choice refers to membranes or objects this configuration lacks."""


ObjClass = tuple  # (Symbol, timer)


@dataclass(frozen=True)
class Instance:
    """One applicable rule occurrence with its object bindings.

    ``active_classes``/``passive_classes`` give the bound ``(symbol, timer)``
    occurrence class per left-hand-side slot. Rewrites bind only the active
    side (their host membrane) and have no passive membrane.
    """

    rule_index: int
    rule: Rule
    active_uid: int
    passive_uid: int | None
    active_classes: tuple
    passive_classes: tuple = ()

    @property
    def is_move(self) -> bool:
        return isinstance(self.rule, (EndoRule, ExoRule))

    def bound(self) -> Iterator[tuple[int, ObjClass]]:
        for cls in self.active_classes:
            yield self.active_uid, cls
        for cls in self.passive_classes:
            yield self.passive_uid, cls

    def forced(self) -> bool:
        """No bound object could tick instead: all bound timers are INF."""
        classes = self.active_classes + self.passive_classes
        return all(t == INF for (_s, t) in classes)

    def sort_key(self):
        return (
            self.rule_index,
            self.active_uid,
            -1 if self.passive_uid is None else self.passive_uid,
            tuple((str(s), t) for s, t in self.active_classes),
            tuple((str(s), t) for s, t in self.passive_classes),
        )

    def describe(self) -> str:
        name = self.rule.name or f"r{self.rule_index}"
        binds = ",".join(f"{s}:{timer_str(t)}" for s, t in self.active_classes)
        if self.passive_uid is None:
            return f"{name}@{self.active_uid}{{{binds}}}"
        pbinds = ",".join(f"{s}:{timer_str(t)}" for s, t in self.passive_classes)
        return f"{name}@{self.active_uid}->{self.passive_uid}{{{binds}|{pbinds}}}"

    def to_json(self) -> dict:
        return {
            "rule": self.rule.name or f"r{self.rule_index}",
            "active": self.active_uid,
            "passive": self.passive_uid,
            "active_bindings": [[str(s), timer_str(t)] for s, t in self.active_classes],
            "passive_bindings": [[str(s), timer_str(t)] for s, t in self.passive_classes],
        }


StepChoice = tuple  # sorted tuple of Instance, repeated for multiplicity


def choice_describe(choice: StepChoice) -> str:
    return " + ".join(i.describe() for i in choice) if choice else "(empty)"


# ---------------------------------------------------------------------------
# Instance matching

def _slot_bindings(slots: Sequence, content: Multiset) -> list[tuple]:
    """All ways to bind the slot symbols to positive-timer occurrence
    classes of ``content``, up to equality of the resulting slot tuple."""
    if not slots:
        return [()]
    from itertools import combinations_with_replacement, permutations, product

    groups: dict = {}
    for pos, sym in enumerate(slots):
        groups.setdefault(sym, []).append(pos)
    per_symbol: list[tuple[list[int], list[tuple]]] = []
    for sym, positions in groups.items():
        classes = [(s, t) for (s, t), _n in content.items() if s == sym and t > 0]
        if not classes:
            return []
        r = len(positions)
        arrangements = set()
        for combo in combinations_with_replacement(classes, r):
            need: dict = {}
            for cls in combo:
                need[cls] = need.get(cls, 0) + 1
            if any(content.count(cls) < n for cls, n in need.items()):
                continue
            arrangements.update(permutations(combo))
        if not arrangements:
            return []
        per_symbol.append((positions, sorted(arrangements)))
    out = []
    for pick in product(*(arr for _pos, arr in per_symbol)):
        slot_classes: list = [None] * len(slots)
        for (positions, _), chosen in zip(per_symbol, pick):
            for pos, cls in zip(positions, chosen):
                slot_classes[pos] = cls
        out.append(tuple(slot_classes))
    return sorted(set(out))


def find_instances(config: Configuration, rules: Sequence[Rule]) -> list[Instance]:
    """Every applicable rule instance, exhaustive up to binding equivalence.

    Moves need an elementary active membrane in the stated position, and
    every bound timer (objects and both membranes) greater than 0.
    """
    found: list[Instance] = []
    for idx, rule in enumerate(rules):
        if isinstance(rule, EndoRule):
            for parent in config.skin.walk():
                for active in parent.children:
                    if active.label != rule.h or not active.elementary or not active.timer > 0:
                        continue
                    for passive in parent.children:
                        if passive is active or passive.label != rule.m or not passive.timer > 0:
                            continue
                        for ac in _slot_bindings(rule.active_slots, active.content):
                            for pc in _slot_bindings(rule.passive_slots, passive.content):
                                found.append(Instance(idx, rule, active.uid, passive.uid, ac, pc))
        elif isinstance(rule, ExoRule):
            for passive in config.skin.walk():
                if passive.label != rule.m or not passive.timer > 0:
                    continue
                for active in passive.children:
                    if active.label != rule.h or not active.elementary or not active.timer > 0:
                        continue
                    for ac in _slot_bindings(rule.active_slots, active.content):
                        for pc in _slot_bindings(rule.passive_slots, passive.content):
                            found.append(Instance(idx, rule, active.uid, passive.uid, ac, pc))
        elif isinstance(rule, RewriteRule):
            for host in config.skin.walk():
                if rule.at is not None and host.label != rule.at:
                    continue
                for ac in _slot_bindings(rule.active_slots, host.content):
                    found.append(Instance(idx, rule, host.uid, None, ac))
    found = sorted(set(found), key=Instance.sort_key)
    return found


# ---------------------------------------------------------------------------
# Choice enumeration

def _availability(config: Configuration) -> dict:
    avail: dict = {}
    for node in config.skin.walk():
        for cls, n in node.content.items():
            avail[(node.uid, cls)] = n
    return avail


def _needs(inst: Instance) -> dict:
    need: dict = {}
    for uid, cls in inst.bound():
        need[(uid, cls)] = need.get((uid, cls), 0) + 1
    return need


def _addable(inst: Instance, avail, usage, actives, passives) -> bool:
    if inst.is_move:
        if inst.active_uid in actives or inst.active_uid in passives:
            return False
        if inst.passive_uid in actives:
            return False
    for key, n in _needs(inst).items():
        if avail.get(key, 0) - usage.get(key, 0) < n:
            return False
    return True


def _enumerate_choices(config: Configuration, rules: Sequence[Rule], saturated: bool) -> list[StepChoice]:
    instances = find_instances(config, rules)
    avail = _availability(config)
    results: list[StepChoice] = []

    def leaf_ok(usage, actives, passives) -> bool:
        for inst in instances:
            if saturated or inst.forced():
                if _addable(inst, avail, usage, actives, passives):
                    return False
        return True

    def dfs(k: int, usage: dict, actives: frozenset, passives: frozenset, chosen: list):
        if k == len(instances):
            if leaf_ok(usage, actives, passives):
                results.append(tuple(chosen))
            return
        inst = instances[k]
        dfs(k + 1, usage, actives, passives, chosen)
        while _addable(inst, avail, usage, actives, passives):
            usage = dict(usage)
            for key, n in _needs(inst).items():
                usage[key] = usage.get(key, 0) + n
            if inst.is_move:
                actives = actives | {inst.active_uid}
                passives = passives | {inst.passive_uid}
            chosen = chosen + [inst]
            dfs(k + 1, usage, actives, passives, chosen)
            if inst.is_move:
                break  # an active membrane moves at most once

    dfs(0, {}, frozenset(), frozenset(), [])
    return sorted(set(results), key=lambda ch: tuple(i.sort_key() for i in ch))


def maximal_choices(config: Configuration, rules: Sequence[Rule]) -> list[StepChoice]:
    """Saturated choices: conflict-free and no further instance applies to
    the unused residue. When nothing applies, the single empty choice."""
    return _enumerate_choices(config, rules, saturated=True)


def step_choices(config: Configuration, rules: Sequence[Rule]) -> list[StepChoice]:
    """All legal choices of the timed semantics: conflict-free sets whose
    residue admits no instance binding only INF-timer objects. Superset of
    ``maximal_choices``; the difference is finite-timer objects ticking
    instead of joining an enabled move."""
    return _enumerate_choices(config, rules, saturated=False)


# ---------------------------------------------------------------------------
# Step application

class _WorkNode:
    __slots__ = ("label", "timer", "content", "children", "parent", "produced", "uid")

    def __init__(self, node: MembraneNode, parent: int | None):
        self.label = node.label
        self.timer = node.timer
        self.content = {cls: n for cls, n in node.content.items()}
        self.children = [c.uid for c in node.children]
        self.parent = parent
        self.produced: dict = {}
        self.uid = node.uid


@dataclass(frozen=True)
class StepStats:
    consumed: int = 0
    produced: int = 0
    expired: int = 0
    delta_consumed: int = 0
    detached_objects: int = 0


@dataclass(frozen=True)
class StepResult:
    config: Configuration
    detached: tuple = ()  # (uid, label, canonical render) per archived membrane
    stats: StepStats = StepStats()


def _is_delta(cls: ObjClass) -> bool:
    sym = cls[0]
    return sym.name == DELTA_NAME and not sym.is_co


def _resolve_products(prods: Iterable, slot_classes: tuple) -> list[ObjClass]:
    out = []
    for sym, spec in prods:
        if isinstance(spec, Fresh):
            out.append((sym, spec.timer))
        elif isinstance(spec, Carry):
            out.append((sym, decrement(slot_classes[spec.slot][1])))
        else:
            raise TypeError(f"unknown timer spec {spec!r}")
    return out


def _validate_choice(config: Configuration, choice: StepChoice, nodes: dict) -> None:
    usage: dict = {}
    actives: set = set()
    passives: set = set()
    for inst in choice:
        active = nodes.get(inst.active_uid)
        if active is None:
            raise StaleChoiceError(f"no membrane with uid {inst.active_uid}")
        if isinstance(inst.rule, EndoRule):
            passive = nodes.get(inst.passive_uid)
            if passive is None or active.parent != passive.parent or active.parent is None:
                raise StaleChoiceError("endo participants are not siblings here")
            if active.children or not active.timer > 0 or not passive.timer > 0:
                raise StaleChoiceError("endo structural precondition fails")
        elif isinstance(inst.rule, ExoRule):
            passive = nodes.get(inst.passive_uid)
            if passive is None or active.parent != passive.uid:
                raise StaleChoiceError("exo active is not a child of its passive")
            if active.children or not active.timer > 0 or not passive.timer > 0:
                raise StaleChoiceError("exo structural precondition fails")
        if inst.is_move:
            if inst.active_uid in actives or inst.active_uid in passives or inst.passive_uid in actives:
                raise StaleChoiceError("conflicting membrane roles in choice")
            actives.add(inst.active_uid)
            passives.add(inst.passive_uid)
        for key, n in _needs(inst).items():
            usage[key] = usage.get(key, 0) + n
    for (uid, cls), n in usage.items():
        node = nodes.get(uid)
        if node is None or node.content.get(cls, 0) < n:
            raise StaleChoiceError(f"binding {cls} x{n} unavailable in membrane {uid}")


def step(config: Configuration, choice: StepChoice) -> StepResult:
    """Apply one chosen step and the clock phases; see the module docstring
    for the phase order. Raises StaleChoiceError on a choice that was not
    produced for this configuration."""
    nodes: dict[int, _WorkNode] = {}

    def load(node: MembraneNode, parent: int | None):
        nodes[node.uid] = _WorkNode(node, parent)
        for child in node.children:
            load(child, node.uid)

    load(config.skin, None)
    _validate_choice(config, choice, nodes)

    consumed = produced_count = 0
    # Phase 1: consume, produce, move, decrement actives.
    for inst in choice:
        for (uid, cls), n in _needs(inst).items():
            nodes[uid].content[cls] -= n
            if nodes[uid].content[cls] == 0:
                del nodes[uid].content[cls]
            consumed += n
    actives: set = set()
    moves: list[tuple[str, int, int]] = []
    for inst in choice:
        rule = inst.rule
        if isinstance(rule, RewriteRule):
            host = nodes[inst.active_uid]
            for cls in _resolve_products(rule.rhs, inst.active_classes):
                host.content[cls] = host.content.get(cls, 0) + 1
                host.produced[cls] = host.produced.get(cls, 0) + 1
                produced_count += 1
        else:
            active = nodes[inst.active_uid]
            passive = nodes[inst.passive_uid]
            for cls in _resolve_products(rule.w, inst.active_classes):
                active.content[cls] = active.content.get(cls, 0) + 1
                active.produced[cls] = active.produced.get(cls, 0) + 1
                produced_count += 1
            for cls in _resolve_products(rule.w2, inst.passive_classes):
                passive.content[cls] = passive.content.get(cls, 0) + 1
                passive.produced[cls] = passive.produced.get(cls, 0) + 1
                produced_count += 1
            actives.add(inst.active_uid)
            if not rule.keep_active_timer:
                active.timer = decrement(active.timer)
            moves.append(("endo" if isinstance(rule, EndoRule) else "exo", inst.active_uid, inst.passive_uid))

    detached: list[tuple[int, str, str]] = []
    detached_objects = 0
    for kind, a_uid, p_uid in moves:
        active = nodes[a_uid]
        old_parent = nodes[active.parent]
        old_parent.children.remove(a_uid)
        if kind == "endo":
            nodes[p_uid].children.append(a_uid)
            active.parent = p_uid
        else:
            passive = nodes[p_uid]
            if passive.parent is None:
                frozen = MembraneNode(
                    active.label, active.timer,
                    Multiset(active.content), (), uid=a_uid,
                )
                detached.append((a_uid, active.label, canonical_render(frozen)))
                detached_objects += sum(active.content.values())
                del nodes[a_uid]
            else:
                nodes[passive.parent].children.append(a_uid)
                active.parent = passive.parent

    # Phases 2 and 3: expire timer-0 objects, tick the remaining unbound
    # pre-existing objects; phase-1 products are skipped in both.
    expired = 0
    for node in nodes.values():
        new_content: dict = {}

        def put(cls, n):
            if n:
                new_content[cls] = new_content.get(cls, 0) + n

        for cls, total in node.content.items():
            prod = node.produced.get(cls, 0)
            orig = total - prod
            put(cls, prod)
            sym, t = cls
            if orig:
                if _is_delta(cls):
                    put(cls, orig)  # markers take part in phase 4, not in time
                elif t == 0:
                    expired += orig
                elif t == INF:
                    put(cls, orig)
                else:
                    put((sym, t - 1), orig)
        node.content = new_content

    # Phase 4: timer-0 dissolution marker, then bottom-up dissolution.
    delta_consumed = 0
    marker = (DELTA, INF)
    for node in list(nodes.values()):
        if node.parent is not None and node.uid not in actives and node.timer == 0:
            node.content[marker] = node.content.get(marker, 0) + 1

    def post_order(uid: int) -> list[int]:
        out: list[int] = []
        for child in list(nodes[uid].children):
            out.extend(post_order(child))
        out.append(uid)
        return out

    for uid in post_order(config.skin.uid):
        node = nodes[uid]
        deltas = sum(n for cls, n in node.content.items() if _is_delta(cls))
        if not deltas:
            continue
        delta_consumed += deltas
        node.content = {cls: n for cls, n in node.content.items() if not _is_delta(cls)}
        if node.parent is None:
            continue  # the skin swallows markers and never dissolves
        parent = nodes[node.parent]
        for cls, n in node.content.items():
            parent.content[cls] = parent.content.get(cls, 0) + n
        for child_uid in node.children:
            nodes[child_uid].parent = parent.uid
            parent.children.append(child_uid)
        parent.children.remove(uid)
        del nodes[uid]

    # Phase 5: tick every surviving non-active membrane.
    for node in nodes.values():
        if node.parent is None or node.uid in actives:
            continue
        if node.timer == INF:
            continue
        if node.timer > 0:
            node.timer -= 1
        else:  # pragma: no cover - timer-0 non-actives dissolved in phase 4
            raise AssertionError("undissolved timer-0 membrane")

    def rebuild(uid: int) -> MembraneNode:
        node = nodes[uid]
        return MembraneNode(
            node.label, node.timer, Multiset(node.content),
            tuple(rebuild(c) for c in node.children), uid=uid,
        )

    new_config = Configuration(rebuild(config.skin.uid), config.output_label)
    stats = StepStats(consumed, produced_count, expired, delta_consumed, detached_objects)
    return StepResult(new_config, tuple(detached), stats)


def apply_step(config: Configuration, choice: StepChoice) -> Configuration:
    """Configuration after one full step (see ``step`` for the record)."""
    return step(config, choice).config


def successors(config: Configuration, rules: Sequence[Rule]) -> list[tuple[StepChoice, Configuration]]:
    """Distinct next configurations over all legal choices, deduplicated by
    canonical key (one representative choice per key)."""
    seen: dict[str, tuple[StepChoice, Configuration]] = {}
    for choice in step_choices(config, rules):
        result = step(config, choice).config
        key = canonicalize(result)
        if key not in seen:
            seen[key] = (choice, result)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# Simulation runs and traces

@dataclass(frozen=True)
class StepRecord:
    index: int
    choice: StepChoice
    key: str
    halted: bool
    detached: tuple

    def to_json(self) -> dict:
        return {
            "step": self.index,
            "instances": [inst.to_json() for inst in self.choice],
            "key": self.key,
            "halt": self.halted,
            "detached": [{"uid": u, "label": l, "render": r} for u, l, r in self.detached],
        }


@dataclass
class Trace:
    initial_key: str
    selector: str
    seed: int | None
    steps_requested: int
    records: list = field(default_factory=list)
    configs: list = field(default_factory=list)

    @property
    def halted(self) -> bool:
        return bool(self.records) and self.records[-1].halted

    def to_jsonl(self) -> str:
        header = {
            "initial": self.initial_key,
            "selector": self.selector,
            "seed": self.seed,
            "steps_requested": self.steps_requested,
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines.extend(json.dumps(r.to_json(), sort_keys=True) for r in self.records)
        return "\n".join(lines) + "\n"


def run(
    config: Configuration,
    rules: Sequence[Rule],
    steps: int,
    selector: str = "first",
    seed: int | None = None,
) -> Trace:
    """Repeatedly pick one saturated choice and apply it.

    ``selector`` is ``first`` (canonically least choice) or ``random``
    (seeded); identical seeds give identical traces. Stops early, flagging
    halt, when the only choice reproduces the current configuration.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if selector not in ("first", "random"):
        raise ValueError(f"unknown selector {selector!r}")
    rng = None
    if selector == "random":
        import random as _random

        rng = _random.Random(seed)
    trace = Trace(canonicalize(config), selector, seed, steps)
    trace.configs.append(config)
    current = config
    current_key = trace.initial_key
    for index in range(1, steps + 1):
        choices = maximal_choices(current, rules)
        choice = choices[0] if rng is None else rng.choice(choices)
        result = step(current, choice)
        key = canonicalize(result.config)
        halted = len(choices) == 1 and key == current_key
        trace.records.append(StepRecord(index, choice, key, halted, result.detached))
        trace.configs.append(result.config)
        current, current_key = result.config, key
        if halted:
            break
    return trace


# ---------------------------------------------------------------------------
# Maximality audit

def residual_instances(
    config: Configuration,
    choice: StepChoice,
    rules: Sequence[Rule],
    forced_only: bool = False,
) -> list[Instance]:
    """Instances still applicable after setting aside the choice's bound
    objects and membrane roles. Empty on every saturated choice; with
    ``forced_only`` empty on every legal choice."""
    avail = _availability(config)
    usage: dict = {}
    actives: set = set()
    passives: set = set()
    for inst in choice:
        for key, n in _needs(inst).items():
            usage[key] = usage.get(key, 0) + n
        if inst.is_move:
            actives.add(inst.active_uid)
            passives.add(inst.passive_uid)
    leftovers = []
    for inst in find_instances(config, rules):
        if forced_only and not inst.forced():
            continue
        if _addable(inst, avail, usage, frozenset(actives), frozenset(passives)):
            leftovers.append(inst)
    return leftovers
