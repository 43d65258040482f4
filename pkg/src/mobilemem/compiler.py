"""Embedding untimed systems into timed ones, and compiling timers away.

``embed_infinite`` assigns timer INF to every membrane, object, and fresh
right-hand side: the untimed system and its embedding have the same
evolution and output.

``eliminate_timers`` replaces timers by counter objects ``b$base$count``
(one per object occurrence, one per finite-timer membrane) together with
generated rule families: counter ticks, kill rules that remove an object
when its counter reaches the symbol's lifetime, membrane kill rules that
emit the dissolution marker, and for every endo/exo rule one untimed rule
per admissible counter vector. ``lifetime(a)`` is the maximum timer with
which ``a`` is ever created (initial configuration or fresh right-hand
sides).

The construction is exact when every creation site of a symbol uses that
one characteristic timer, and when no two moves share a passive membrane in
a single step (each compiled move binds the passive membrane's counter).
Both caveats are inherited from the counter encoding itself; systems
outside that envelope still compile but may admit compiled runs with no
timed counterpart.
"""

from __future__ import annotations

import re
from typing import Sequence

from .core import (
    DELTA,
    DELTA_NAME,
    INF,
    Configuration,
    EndoRule,
    ExoRule,
    Fresh,
    MembraneNode,
    Multiset,
    RewriteRule,
    Rule,
    Symbol,
    Timer,
)
from .untimed import UConfig, UNode


class CompileError(ValueError):
    """The system is outside the timer-elimination construction's domain."""


_COUNTER_RE = re.compile(r"^b\$(.+)\$(\d+)$")


def make_counter(base: str, count: int) -> Symbol:
    """Counter object ``b$base$count``; a co-object base keeps its co bit
    on the counter itself (rendered ``~b$a$n``) so files stay parseable."""
    if base.startswith("~"):
        return Symbol(f"b${base[1:]}${count}", True)
    return Symbol(f"b${base}${count}")


def parse_counter(sym: Symbol) -> tuple[str, int] | None:
    m = _COUNTER_RE.match(sym.name)
    if not m:
        return None
    base = ("~" if sym.is_co else "") + m.group(1)
    return base, int(m.group(2))


def _rule_products(rules: Sequence[Rule]):
    for rule in rules:
        if isinstance(rule, RewriteRule):
            yield from rule.rhs
        else:
            yield from rule.w
            yield from rule.w2


def lifetime(sym: Symbol, config: Configuration, rules: Sequence[Rule]) -> int:
    """Maximum timer with which ``sym`` is ever created; errors when the
    maximum is infinite or the symbol is never created."""
    timers: list[Timer] = []
    for node in config.skin.walk():
        for (s, t), _n in node.content.items():
            if s == sym:
                timers.append(t)
    for s, spec in _rule_products(rules):
        if s == sym and isinstance(spec, Fresh):
            timers.append(spec.timer)
    if not timers:
        raise CompileError(f"lifetime({sym}) undefined: the symbol is never created")
    top = max(timers)
    if top == INF:
        raise CompileError(f"infinite lifetime: {sym} is created with timer inf")
    return int(top)


def embed_infinite(config: UConfig, rules: Sequence[Rule]) -> tuple[Configuration, tuple]:
    """Timed twin of an untimed system: INF on every membrane, object, and
    fresh right-hand side; left sides match any timer."""

    def lift(node: UNode) -> MembraneNode:
        return MembraneNode(
            node.label,
            INF,
            Multiset({(sym, INF): n for sym, n in node.content.items()}),
            tuple(lift(c) for c in node.children),
            uid=node.uid,
        )

    def lift_prods(prods) -> tuple:
        return tuple((sym, Fresh(INF) if isinstance(spec, Fresh) else spec) for sym, spec in prods)

    lifted_rules = []
    for rule in rules:
        if isinstance(rule, RewriteRule):
            lifted_rules.append(RewriteRule(rule.at, rule.lhs, lift_prods(rule.rhs), rule.name))
        elif isinstance(rule, EndoRule):
            lifted_rules.append(
                EndoRule(rule.h, rule.m, rule.u, rule.v, rule.v2,
                         lift_prods(rule.w), lift_prods(rule.w2), rule.name)
            )
        else:
            lifted_rules.append(
                ExoRule(rule.h, rule.m, rule.u, rule.v, rule.v2,
                        lift_prods(rule.w), lift_prods(rule.w2), rule.name)
            )
    return Configuration(lift(config.skin), config.output_label), tuple(lifted_rules)


# ---------------------------------------------------------------------------
# Timer elimination

def _alphabet(config: Configuration, rules: Sequence[Rule]) -> set[Symbol]:
    syms: set[Symbol] = set()
    for node in config.skin.walk():
        for (s, _t), _n in node.content.items():
            syms.add(s)
    for rule in rules:
        for side in (rule.u, rule.v, rule.u_bar, rule.v2):
            syms.update(side)
        for s, _spec in rule.w + rule.w2:
            syms.add(s)
    return syms


def _label_timers(config: Configuration) -> dict[str, Timer]:
    timers: dict[str, Timer] = {}
    for node in config.skin.walk():
        if node.label in timers and timers[node.label] != node.timer:
            raise CompileError(
                f"label {node.label} is shared by membranes with different timers"
            )
        timers[node.label] = node.timer
    return timers


def _check_input(config: Configuration, rules: Sequence[Rule], label_timers: dict) -> None:
    for rule in rules:
        if isinstance(rule, RewriteRule):
            raise CompileError("timer elimination covers endo/exo systems only")
    for node in config.skin.walk():
        for (s, t), _n in node.content.items():
            if t == INF:
                raise CompileError(f"object {s} has timer inf; only membranes may be untimed")
    for sym in _alphabet(config, rules):
        if "$" in sym.name:
            raise CompileError(f"symbol {sym} collides with the counter spelling")
        if sym.name == DELTA_NAME:
            raise CompileError("the dissolution marker cannot be compiled")
        if not sym.is_co and sym.name in label_timers and label_timers[sym.name] != INF:
            raise CompileError(
                f"object name {sym.name} collides with a finite-timer membrane label"
            )
    for s, spec in _rule_products(rules):
        if isinstance(spec, Fresh) and spec.timer == INF:
            raise CompileError(f"rule creates {s} with timer inf")


def eliminate_timers(config: Configuration, rules: Sequence[Rule]) -> tuple[UConfig, tuple]:
    """Untimed system with the same evolution and output, per the counter
    construction. The skin and any INF-timer membrane get no counter and no
    kill family."""
    label_timers = _label_timers(config)
    _check_input(config, rules, label_timers)

    lifetimes: dict[Symbol, int] = {}
    for sym in _alphabet(config, rules):
        try:
            lifetimes[sym] = lifetime(sym, config, rules)
        except CompileError as err:
            if "never created" in str(err):
                continue  # consumed-only symbol: its rules can never fire
            raise

    def strip(node: MembraneNode) -> UNode:
        counts: dict[Symbol, int] = {}
        for (sym, _t), n in node.content.items():
            counts[sym] = counts.get(sym, 0) + n
            counter = make_counter(str(sym), 0)
            counts[counter] = counts.get(counter, 0) + n
        if node.timer != INF:
            counts[make_counter(node.label, 0)] = 1
        return UNode(node.label, Multiset(counts), tuple(strip(c) for c in node.children), uid=node.uid)

    uconfig = UConfig(strip(config.skin), config.output_label)

    out: list[Rule] = []
    for sym, life in sorted(lifetimes.items(), key=lambda kv: str(kv[0])):
        for t in range(life):
            out.append(RewriteRule(
                None,
                Multiset([sym, make_counter(str(sym), t)]),
                ((sym, Fresh(INF)), (make_counter(str(sym), t + 1), Fresh(INF))),
                name=f"tick:{sym}:{t}",
            ))
        out.append(RewriteRule(
            None,
            Multiset([sym, make_counter(str(sym), life)]),
            (),
            name=f"kill:{sym}",
        ))
    for label in sorted(label_timers):
        t_mem = label_timers[label]
        if t_mem == INF:
            continue
        t_mem = int(t_mem)
        for t in range(t_mem):
            out.append(RewriteRule(
                None,
                Multiset([make_counter(label, t)]),
                ((make_counter(label, t + 1), Fresh(INF)),),
                name=f"tick:{label}:{t}",
            ))
        out.append(RewriteRule(
            label,
            Multiset([make_counter(label, t_mem)]),
            ((DELTA, Fresh(INF)),),
            name=f"kill:{label}",
        ))

    for rule in rules:
        out.extend(_move_family(rule, lifetimes, label_timers))
    return uconfig, tuple(out)


def _counter_ranges(slots, lifetimes) -> list[list[int]] | None:
    ranges = []
    for sym in slots:
        life = lifetimes.get(sym)
        if life is None or life == 0:
            return None  # the symbol never exists with a positive timer
        ranges.append(list(range(life)))
    return ranges


def _move_family(rule, lifetimes, label_timers) -> list[Rule]:
    """Untimed rules for one timed endo/exo rule, enumerated over all
    admissible counter vectors. Carried objects advance their counter by
    one; fresh objects start at 0; the active membrane's counter advances;
    the passive membrane's counter is bound and advanced, which also
    enforces the "passive timer greater than 0" precondition."""
    from itertools import product

    active_slots = rule.active_slots
    passive_slots = rule.passive_slots
    a_ranges = _counter_ranges(active_slots, lifetimes)
    p_ranges = _counter_ranges(passive_slots, lifetimes)
    if a_ranges is None or p_ranges is None:
        return []

    def mem_range(label) -> list[int] | None:
        t_mem = label_timers.get(label)
        if t_mem is None or t_mem == INF:
            return None  # no counter for unknown or untimed membranes
        return list(range(int(t_mem)))

    h_range = mem_range(rule.h)
    m_range = mem_range(rule.m)
    out: list[Rule] = []
    axes = a_ranges + p_ranges + ([h_range] if h_range is not None else []) + (
        [m_range] if m_range is not None else []
    )
    for vector in product(*axes):
        pos = 0
        a_vec = vector[pos:pos + len(active_slots)]; pos += len(active_slots)
        p_vec = vector[pos:pos + len(passive_slots)]; pos += len(passive_slots)
        t3 = None
        t6 = None
        if h_range is not None:
            t3 = vector[pos]; pos += 1
        if m_range is not None:
            t6 = vector[pos]; pos += 1

        v = rule.v
        for sym, j in zip(active_slots, a_vec):
            v = v.add(make_counter(str(sym), j))
        if t3 is not None:
            v = v.add(make_counter(rule.h, t3))
        v2 = rule.v2
        for sym, j in zip(passive_slots, p_vec):
            v2 = v2.add(make_counter(str(sym), j))
        if t6 is not None:
            v2 = v2.add(make_counter(rule.m, t6))

        def compile_prods(prods, vec):
            compiled = []
            for sym, spec in prods:
                compiled.append((sym, Fresh(INF)))
                if isinstance(spec, Fresh):
                    compiled.append((make_counter(str(sym), 0), Fresh(INF)))
                else:
                    compiled.append((make_counter(str(sym), vec[spec.slot] + 1), Fresh(INF)))
            return compiled

        w = compile_prods(rule.w, a_vec)
        if t3 is not None:
            w.append((make_counter(rule.h, t3 + 1), Fresh(INF)))
        w2 = compile_prods(rule.w2, p_vec)
        if t6 is not None:
            w2.append((make_counter(rule.m, t6 + 1), Fresh(INF)))

        name = f"{rule.name or 'move'}:{','.join(map(str, vector))}"
        cls = EndoRule if isinstance(rule, EndoRule) else ExoRule
        out.append(cls(rule.h, rule.m, rule.u, v, v2, tuple(w), tuple(w2), name=name))
    return out


# ---------------------------------------------------------------------------
# Projection

def project(config) -> UConfig:
    """Comparison lens: erase all timers and all counter objects, keeping
    the bare (label, object multiset) tree. Idempotent; accepts timed and
    untimed configurations."""
    if isinstance(config, Configuration):
        skin, out_label = config.skin, config.output_label
        timed = True
    else:
        skin, out_label = config.skin, config.output_label
        timed = False

    def strip(node) -> UNode:
        counts: dict[Symbol, int] = {}
        for entry, n in node.content.items():
            sym = entry[0] if timed else entry
            if parse_counter(sym) is not None:
                continue
            counts[sym] = counts.get(sym, 0) + n
        return UNode(node.label, Multiset(counts), tuple(strip(c) for c in node.children), uid=node.uid)

    return UConfig(strip(skin), out_label)


def counter_soundness_violations(config: UConfig, counter_labels: set[str]) -> list[str]:
    """Invariant of compiled reachable states: object counters pair up with
    their objects one-to-one, and every finite-lifetime membrane holds
    exactly one label counter."""
    problems = []
    for node in config.skin.walk():
        object_counts: dict[str, int] = {}
        counter_counts: dict[str, int] = {}
        label_counters = 0
        for sym, n in node.content.items():
            parsed = parse_counter(sym)
            if parsed is None:
                object_counts[str(sym)] = object_counts.get(str(sym), 0) + n
            elif parsed[0] == node.label and parsed[0] in counter_labels:
                label_counters += n
            else:
                counter_counts[parsed[0]] = counter_counts.get(parsed[0], 0) + n
        for base in sorted(set(object_counts) | set(counter_counts)):
            if object_counts.get(base, 0) != counter_counts.get(base, 0):
                problems.append(
                    f"membrane {node.label}: {object_counts.get(base, 0)} x {base} vs "
                    f"{counter_counts.get(base, 0)} counters"
                )
        if node.label in counter_labels and label_counters != 1:
            problems.append(f"membrane {node.label}: {label_counters} label counters")
    return problems
