"""Core data model for mobile membrane systems with timers.

A configuration is a tree of labelled membranes rooted at the skin. Every
membrane and every object carries a timer: a natural number, or ``INF`` for
resources that never expire. Objects come in dual pairs ``a`` / ``~a``; the
co-object marks the passive side of a movement rule. Rules are mutual
endocytosis, mutual exocytosis, or local multiset rewrites.

All values here are immutable once constructed and safe to share between
concurrent workers.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Union

INF = float("inf")

Timer = Union[int, float]

#: Reserved name of the dissolution marker. A rule right-hand side may emit
#: it; the step engine consumes it while dissolving the host membrane. It
#: must never appear in an at-rest configuration.
DELTA_NAME = "delta"


def decrement(t: Timer) -> Timer:
    """One clock tick: ``INF - 1 == INF``; 0 cannot be decremented."""
    if t == INF:
        return INF
    if t <= 0:
        raise ValueError("cannot decrement a timer at 0")
    return t - 1


def timer_str(t: Timer) -> str:
    return "inf" if t == INF else str(int(t))


@dataclass(frozen=True, order=True)
class Symbol:
    """An object name, possibly the co-form ``~name``."""

    name: str
    is_co: bool = False

    def dual(self) -> "Symbol":
        return Symbol(self.name, not self.is_co)

    def __str__(self) -> str:
        return ("~" if self.is_co else "") + self.name


def dual(s: Symbol) -> Symbol:
    """Map ``a`` to ``~a`` and back; an involution without fixpoints."""
    return s.dual()


DELTA = Symbol(DELTA_NAME)


class Multiset:
    """Immutable multiset with counted items.

    Items must be hashable and mutually comparable; entries with count 0 are
    never stored. Used for membrane contents (``(Symbol, timer)`` pairs),
    rule sides (``Symbol``), and output readings.
    """

    __slots__ = ("_counts", "_items", "_hash")

    def __init__(self, items: Iterable = ()):
        counts: dict = {}
        if isinstance(items, dict):
            pairs = items.items()
        else:
            pairs = ((x, 1) for x in items)
        for item, n in pairs:
            if n < 0:
                raise ValueError("negative multiplicity")
            if n:
                counts[item] = counts.get(item, 0) + n
        object.__setattr__(self, "_counts", counts)
        object.__setattr__(self, "_items", tuple(sorted(counts.items())))
        object.__setattr__(self, "_hash", hash(self._items))

    @classmethod
    def _from_counts(cls, counts: dict) -> "Multiset":
        ms = cls.__new__(cls)
        clean = {k: n for k, n in counts.items() if n}
        object.__setattr__(ms, "_counts", clean)
        object.__setattr__(ms, "_items", tuple(sorted(clean.items())))
        object.__setattr__(ms, "_hash", hash(ms._items))
        return ms

    def count(self, item) -> int:
        return self._counts.get(item, 0)

    def items(self) -> tuple:
        """Sorted ``(item, count)`` pairs."""
        return self._items

    def distinct(self) -> Iterator:
        return iter(self._counts)

    def __iter__(self) -> Iterator:
        for item, n in self._items:
            for _ in range(n):
                yield item

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __contains__(self, item) -> bool:
        return item in self._counts

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Multiset({list(self)!r})"

    def add(self, item, n: int = 1) -> "Multiset":
        counts = dict(self._counts)
        counts[item] = counts.get(item, 0) + n
        return Multiset._from_counts(counts)

    def union(self, other: "Multiset") -> "Multiset":
        """Additive union (multiset sum)."""
        counts = dict(self._counts)
        for item, n in other._counts.items():
            counts[item] = counts.get(item, 0) + n
        return Multiset._from_counts(counts)

    def contains(self, other: "Multiset") -> bool:
        return all(self.count(i) >= n for i, n in other._counts.items())

    def difference(self, other: "Multiset") -> "Multiset":
        """Multiset difference; ``other`` must be contained in ``self``."""
        if not self.contains(other):
            raise ValueError("difference without containment")
        counts = dict(self._counts)
        for item, n in other._counts.items():
            counts[item] -= n
        return Multiset._from_counts(counts)

    def remove(self, item, n: int = 1) -> "Multiset":
        return self.difference(Multiset({item: n}))


_uid_counter = itertools.count(1)


def fresh_uid() -> int:
    return next(_uid_counter)


@dataclass(frozen=True)
class MembraneNode:
    """A membrane: label, remaining lifetime, contents, child membranes.

    ``uid`` is an engine-assigned identity used by traces and rule
    instances; it is excluded from canonical keys. Labels need not be
    unique, and a node is elementary iff it has no children.
    """

    label: str
    timer: Timer
    content: Multiset
    children: tuple = ()
    uid: int = field(default_factory=fresh_uid)

    @property
    def elementary(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["MembraneNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


def mem(label: str, timer: Timer, objects: Iterable = (), children: Iterable = ()) -> MembraneNode:
    """Convenience constructor; ``objects`` holds ``(Symbol, timer)`` pairs."""
    return MembraneNode(label, timer, Multiset(objects), tuple(children))


@dataclass(frozen=True)
class Configuration:
    """A membrane tree plus the output membrane label."""

    skin: MembraneNode
    output_label: str = "skin"

    def find(self, uid: int) -> MembraneNode | None:
        for node in self.skin.walk():
            if node.uid == uid:
                return node
        return None


# ---------------------------------------------------------------------------
# Rules

@dataclass(frozen=True)
class Fresh:
    """Right-hand-side timer given by the rule itself."""

    timer: Timer


@dataclass(frozen=True)
class Carry:
    """Timer carried over from left-hand-side slot ``slot`` minus one tick.

    The slot indexes the same side's bound occurrence list (`u` then `v` for
    products in ``w``; the dual trigger then `v'` for products in ``w2``).
    """

    slot: int


Prod = tuple  # (Symbol, Fresh | Carry)


def _slot_tuple(u: Multiset, v: Multiset) -> tuple:
    return tuple(u) + tuple(v)


@dataclass(frozen=True)
class EndoRule:
    """Mutual endocytosis: an elementary ``h`` enters a sibling ``m``.

    The active side consumes ``u + v`` inside ``h``; the passive side
    consumes ``dual(u) + v2`` inside ``m``. ``w`` is produced inside the
    moved ``h``, ``w2`` inside ``m``. ``keep_active_timer`` switches off the
    active membrane's timer decrement (literal translation mode).
    """

    h: str
    m: str
    u: Multiset
    v: Multiset = Multiset()
    v2: Multiset = Multiset()
    w: tuple = ()
    w2: tuple = ()
    name: str = ""
    keep_active_timer: bool = False

    @property
    def u_bar(self) -> Multiset:
        return Multiset([dual(s) for s in self.u])

    @property
    def active_slots(self) -> tuple:
        return _slot_tuple(self.u, self.v)

    @property
    def passive_slots(self) -> tuple:
        return _slot_tuple(self.u_bar, self.v2)


@dataclass(frozen=True)
class ExoRule:
    """Mutual exocytosis: an elementary ``h`` exits its parent ``m``.

    The active side consumes ``u + v`` inside the child ``h``; the passive
    side consumes ``dual(u) + v2`` inside the parent ``m``.
    """

    h: str
    m: str
    u: Multiset
    v: Multiset = Multiset()
    v2: Multiset = Multiset()
    w: tuple = ()
    w2: tuple = ()
    name: str = ""
    keep_active_timer: bool = False

    @property
    def u_bar(self) -> Multiset:
        return Multiset([dual(s) for s in self.u])

    @property
    def active_slots(self) -> tuple:
        return _slot_tuple(self.u, self.v)

    @property
    def passive_slots(self) -> tuple:
        return _slot_tuple(self.u_bar, self.v2)


@dataclass(frozen=True)
class RewriteRule:
    """Local multiset rewrite inside one membrane.

    ``at`` restricts the host membrane label; ``None`` matches any membrane.
    This is the target form of the timer-elimination compiler.
    """

    at: str | None
    lhs: Multiset
    rhs: tuple = ()
    name: str = ""

    @property
    def active_slots(self) -> tuple:
        return tuple(self.lhs)


Rule = Union[EndoRule, ExoRule, RewriteRule]


# ---------------------------------------------------------------------------
# Canonicalization and readings

def canonical_render(node: MembraneNode, with_timers: bool = True) -> str:
    """Deterministic rendering, invariant under sibling and entry order."""
    objs = []
    for (sym, t), n in node.content.items():
        text = f"{sym}:{timer_str(t)}" if with_timers else str(sym)
        objs.extend([text] * n)
    kids = sorted(canonical_render(c, with_timers) for c in node.children)
    head = f"{node.label}:{timer_str(node.timer)}" if with_timers else node.label
    return head + "{" + ",".join(objs) + "}[" + " ".join(kids) + "]"


def canonicalize(config: Configuration) -> str:
    """Canonical key: equal keys iff configurations are equal up to sibling
    membrane order and multiset entry order. uids are excluded."""
    return canonical_render(config.skin) + "|out=" + config.output_label


def erase_timers_key(config: Configuration) -> str:
    """Canonical key after forgetting every timer."""
    return canonical_render(config.skin, with_timers=False) + "|out=" + config.output_label


def output_reading(config: Configuration) -> Multiset:
    """Multiset of symbols (timers erased) held by output-labelled membranes.

    Sums over all membranes carrying the output label; empty if none exists.
    """
    out = Multiset()
    for node in config.skin.walk():
        if node.label == config.output_label:
            out = out.union(Multiset([sym for (sym, _t) in node.content]))
    return out


def per_membrane_readings(config: Configuration) -> tuple:
    """One (uid, symbol multiset) pair per output-labelled membrane."""
    readings = []
    for node in config.skin.walk():
        if node.label == config.output_label:
            readings.append((node.uid, Multiset([sym for (sym, _t) in node.content])))
    return tuple(readings)


# ---------------------------------------------------------------------------
# Validation

def _check_prods(side: str, prods: tuple, slots: tuple, out: list, rule_name: str) -> None:
    for sym, spec in prods:
        if isinstance(spec, Carry):
            if not 0 <= spec.slot < len(slots):
                out.append(f"rule {rule_name}: carry slot {spec.slot} out of range in {side}")
            elif slots[spec.slot] != sym:
                out.append(
                    f"rule {rule_name}: carry slot {spec.slot} binds {slots[spec.slot]},"
                    f" not {sym}, in {side}"
                )


_NAME_RE = re.compile(r"^[A-Za-z0-9_$]+$")


def validate(config: Configuration, rules: Iterable[Rule] = ()) -> list[str]:
    """Static well-formedness check; returns a list of violations (empty = ok)."""
    violations: list[str] = []
    if config.skin.timer != INF:
        violations.append("skin membrane must have timer inf")
    seen_uids: set[int] = set()
    for node in config.skin.walk():
        if node.uid in seen_uids:
            violations.append(f"duplicate membrane uid {node.uid}")
        seen_uids.add(node.uid)
        if not node.label or not _NAME_RE.match(node.label):
            violations.append(f"membrane label {node.label!r} is not a plain name")
        for (sym, t), _n in node.content.items():
            if not _NAME_RE.match(sym.name):
                violations.append(f"object name {sym.name!r} is not a plain name")
            if sym.name == DELTA_NAME:
                violations.append(f"dissolution marker at rest inside {node.label}")
            if t != INF and (not isinstance(t, int) or t < 0):
                violations.append(f"object {sym} has invalid timer {t!r}")
    for rule in rules:
        name = rule.name or type(rule).__name__
        if isinstance(rule, (EndoRule, ExoRule)):
            if not rule.u:
                violations.append(f"rule {name}: trigger multiset u is empty")
            _check_prods("w", rule.w, rule.active_slots, violations, name)
            _check_prods("w2", rule.w2, rule.passive_slots, violations, name)
        elif isinstance(rule, RewriteRule):
            if not rule.lhs:
                violations.append(f"rule {name}: rewrite left side is empty")
            _check_prods("rhs", rule.rhs, rule.active_slots, violations, name)
    return violations


def replace_node(node: MembraneNode, **changes) -> MembraneNode:
    return replace(node, **changes)


def renumber(config: Configuration) -> Configuration:
    """Reassign uids 1..n in depth-first order. Parsers and translators
    canonicalize uids this way so that equal sources give byte-equal traces
    and graph labels within one process."""
    counter = itertools.count(1)

    def rebuild(node: MembraneNode) -> MembraneNode:
        uid = next(counter)
        return MembraneNode(
            node.label, node.timer, node.content,
            tuple(rebuild(c) for c in node.children), uid=uid,
        )

    return Configuration(rebuild(config.skin), config.output_label)
