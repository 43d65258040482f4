"""Timed safe mobile ambients: syntax, time progress, and reduction.

Processes are inactivity ``0``, capability prefixes ``C:t n . P`` with C in
{in, out, ~in, ~out}, ambients ``n:t[P]``, and parallel composition. Every
capability and ambient carries a timer (``inf`` allowed). Ambients carry an
active/passive tag: a mover becomes passive for the rest of the time unit
and is re-activated by the global clock tick.

One reduction step either fires a nonempty set of independent movement
redexes (an entering ambient must be active and its target's body exactly
one matching co-prefix; an exiting ambient must be active next to the
co-prefix inside its parent), or, when no redex exists anywhere, applies
the global time progress function to the whole term: prefixes and ambients
at timer 0 release their continuation or body, everything else loses one
tick (``inf`` stays), and all tags become active. The released body of a
timer-0 ambient is not itself ticked; with a mover inside, its passive tag
can survive the tick. All four timers of a redex must be positive; an
expired capability never fires.

Parallel composition is kept in normal form (flattened, no ``0`` parts,
parts canonically sorted), which makes structural congruence a syntactic
equality check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .core import INF, Timer, decrement, timer_str


@dataclass(frozen=True)
class Capability:
    kind: str  # "in" or "out"
    co: bool
    target: str
    timer: Timer

    def __str__(self) -> str:
        return f"{'~' if self.co else ''}{self.kind}:{timer_str(self.timer)} {self.target}"


@dataclass(frozen=True)
class Zero:
    def __str__(self) -> str:
        return "0"


ZERO = Zero()


@dataclass(frozen=True)
class Prefix:
    cap: Capability
    cont: "Process" = ZERO


@dataclass(frozen=True)
class Amb:
    name: str
    timer: Timer
    body: "Process" = ZERO
    tag: str = "a"  # "a" active, "p" passive


@dataclass(frozen=True)
class Par:
    parts: tuple


Process = Union[Zero, Prefix, Amb, Par]


def canonical_key(p: Process) -> str:
    """Deterministic rendering with tags; equal keys iff congruent."""
    if isinstance(p, Zero):
        return "0"
    if isinstance(p, Prefix):
        return f"{p.cap}.{canonical_key(p.cont)}"
    if isinstance(p, Amb):
        return f"{p.name}:{timer_str(p.timer)}^{p.tag}[{canonical_key(p.body)}]"
    return "(" + " | ".join(canonical_key(x) for x in p.parts) + ")"


def par(*parts: Process) -> Process:
    """Smart parallel composition: flatten, drop 0, sort canonically."""
    flat: list[Process] = []
    for p in parts:
        if isinstance(p, Par):
            flat.extend(p.parts)
        elif not isinstance(p, Zero):
            flat.append(p)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Par(tuple(sorted(flat, key=canonical_key)))


def normalize(p: Process) -> Process:
    if isinstance(p, Par):
        return par(*(normalize(x) for x in p.parts))
    if isinstance(p, Amb):
        return Amb(p.name, p.timer, normalize(p.body), p.tag)
    if isinstance(p, Prefix):
        return Prefix(p.cap, normalize(p.cont))
    return p


def congruent(p: Process, q: Process) -> bool:
    """Structural congruence: equality up to parallel reordering and 0."""
    return canonical_key(normalize(p)) == canonical_key(normalize(q))


def erase_tags(p: Process) -> Process:
    """The same process with every ambient re-tagged active."""
    if isinstance(p, Par):
        return par(*(erase_tags(x) for x in p.parts))
    if isinstance(p, Amb):
        return Amb(p.name, p.timer, erase_tags(p.body), "a")
    if isinstance(p, Prefix):
        return Prefix(p.cap, erase_tags(p.cont))
    return p


def soup(p: Process) -> list[Process]:
    """Parallel components of a normalized process."""
    if isinstance(p, Par):
        return list(p.parts)
    if isinstance(p, Zero):
        return []
    return [p]


def ambient_names(p: Process) -> set[str]:
    names: set[str] = set()

    def walk(q: Process):
        if isinstance(q, Amb):
            names.add(q.name)
            walk(q.body)
        elif isinstance(q, Prefix):
            walk(q.cont)
        elif isinstance(q, Par):
            for x in q.parts:
                walk(x)

    walk(p)
    return names


def capabilities(p: Process) -> list[Capability]:
    caps: list[Capability] = []

    def walk(q: Process):
        if isinstance(q, Prefix):
            caps.append(q.cap)
            walk(q.cont)
        elif isinstance(q, Amb):
            walk(q.body)
        elif isinstance(q, Par):
            for x in q.parts:
                walk(x)

    walk(p)
    return caps


# ---------------------------------------------------------------------------
# Global time progress

def phi_delta(p: Process) -> Process:
    """One tick of the universal clock over the whole term."""
    if isinstance(p, Zero):
        return p
    if isinstance(p, Prefix):
        if p.cap.timer == 0:
            return p.cont
        cap = Capability(p.cap.kind, p.cap.co, p.cap.target, decrement(p.cap.timer))
        return Prefix(cap, p.cont)
    if isinstance(p, Amb):
        if p.timer == 0:
            return p.body
        return Amb(p.name, decrement(p.timer), phi_delta(p.body), "a")
    return par(*(phi_delta(x) for x in p.parts))


# ---------------------------------------------------------------------------
# Redexes and reduction

@dataclass(frozen=True)
class Redex:
    """One movement opportunity: the path addresses the enclosing soup
    (indices of ambient components from the top), then the component
    slots taking part."""

    kind: str  # "in" or "out"
    path: tuple
    mover: str
    target: str
    slots: tuple  # component indices consumed at that soup

    def describe(self) -> str:
        where = "/".join(map(str, self.path)) or "top"
        return f"{self.kind}:{self.mover}->{self.target}@{where}"


def _in_prefix_slots(body_parts: list[Process], target: str) -> list[int]:
    out = []
    for c, comp in enumerate(body_parts):
        if (
            isinstance(comp, Prefix)
            and comp.cap.kind == "in"
            and not comp.cap.co
            and comp.cap.target == target
            and comp.cap.timer > 0
        ):
            out.append(c)
    return out


def _local_redexes(parts: list[Process], path: tuple) -> list[tuple]:
    """(redex, firing data) pairs whose participants are components of this
    soup. R-In takes two sibling slots; R-Out takes one."""
    found = []
    for j, comp in enumerate(parts):
        if not isinstance(comp, Amb) or not comp.timer > 0:
            continue
        # R-In target: body is exactly one matching co-in prefix.
        body = soup(comp.body)
        if len(body) == 1 and isinstance(body[0], Prefix):
            cap = body[0].cap
            if cap.kind == "in" and cap.co and cap.target == comp.name and cap.timer > 0:
                for i, mover in enumerate(parts):
                    if i == j or not isinstance(mover, Amb):
                        continue
                    if mover.tag != "a" or not mover.timer > 0:
                        continue
                    for c in _in_prefix_slots(soup(mover.body), comp.name):
                        redex = Redex("in", path, mover.name, comp.name, (i, j))
                        found.append((redex, ("in", i, j, c)))
        # R-Out: body is exactly the mover plus one matching co-out prefix.
        if len(body) == 2:
            for a_idx, co_idx in ((0, 1), (1, 0)):
                mover, co = body[a_idx], body[co_idx]
                if not isinstance(mover, Amb) or not isinstance(co, Prefix):
                    continue
                if mover.tag != "a" or not mover.timer > 0:
                    continue
                cap = co.cap
                if not (cap.kind == "out" and cap.co and cap.target == comp.name and cap.timer > 0):
                    continue
                for c in _out_prefix_slots(soup(mover.body), comp.name):
                    redex = Redex("out", path, mover.name, comp.name, (j,))
                    found.append((redex, ("out", j, a_idx, co_idx, c)))
    return found


def _out_prefix_slots(body_parts: list[Process], target: str) -> list[int]:
    out = []
    for c, comp in enumerate(body_parts):
        if (
            isinstance(comp, Prefix)
            and comp.cap.kind == "out"
            and not comp.cap.co
            and comp.cap.target == target
            and comp.cap.timer > 0
        ):
            out.append(c)
    return out


def redexes(p: Process) -> list[Redex]:
    """Every movement opportunity anywhere in the term."""
    p = normalize(p)
    found: list[Redex] = []

    def walk(parts: list[Process], path: tuple):
        found.extend(r for r, _f in _local_redexes(parts, path))
        for idx, comp in enumerate(parts):
            if isinstance(comp, Amb):
                walk(soup(comp.body), path + (idx,))

    walk(soup(p), ())
    return found


def _fire_in(parts: list[Process], i: int, j: int, c: int) -> list[Process]:
    mover, target = parts[i], parts[j]
    mbody = soup(mover.body)
    prefix = mbody[c]
    new_mover = Amb(mover.name, mover.timer, par(*(mbody[:c] + mbody[c + 1:]), prefix.cont), "p")
    co = soup(target.body)[0]
    new_target = Amb(target.name, target.timer, par(new_mover, co.cont), target.tag)
    rest = [x for k, x in enumerate(parts) if k not in (i, j)]
    return rest + [new_target]


def _fire_out(parts: list[Process], j: int, a_idx: int, co_idx: int, c: int) -> list[Process]:
    parent = parts[j]
    body = soup(parent.body)
    mover, co = body[a_idx], body[co_idx]
    mbody = soup(mover.body)
    prefix = mbody[c]
    new_mover = Amb(mover.name, mover.timer, par(*(mbody[:c] + mbody[c + 1:]), prefix.cont), "p")
    new_parent = Amb(parent.name, parent.timer, co.cont, parent.tag)
    rest = [x for k, x in enumerate(parts) if k != j]
    return rest + [new_parent, new_mover]


def _soup_variants(parts: list[Process]) -> list[tuple[int, list[Process]]]:
    """All (fired count, components) results of firing an independent set
    of redexes within this soup and below. Count 0 is the unchanged soup."""
    local = _local_redexes(parts, ())

    def inner_variants(comp: Process) -> list[tuple[int, Process]]:
        if not isinstance(comp, Amb):
            return [(0, comp)]
        out = []
        for cnt, new_body in _soup_variants(soup(comp.body)):
            out.append((cnt, comp if cnt == 0 else Amb(comp.name, comp.timer, par(*new_body), comp.tag)))
        return out

    results: list[tuple[int, list[Process]]] = []

    def choose(rdx_idx: int, used: frozenset, fired: list):
        if rdx_idx == len(local):
            from itertools import product

            free = [k for k in range(len(parts)) if k not in used]
            options = [inner_variants(parts[k]) for k in free]
            for combo in product(*options) if options else [()]:
                count = sum(c for c, _x in combo)
                comps = [x for _c, x in combo]
                for _redex, data in fired:
                    if data[0] == "in":
                        _kind, i, j, c = data
                        sub = _fire_in(parts, i, j, c)
                        comps.append(sub[-1])
                        count += 1
                    else:
                        _kind, j, a_idx, co_idx, c = data
                        sub = _fire_out(parts, j, a_idx, co_idx, c)
                        comps.extend(sub[-2:])
                        count += 1
                results.append((count, comps))
            return
        choose(rdx_idx + 1, used, fired)
        redex, data = local[rdx_idx]
        if not used & set(redex.slots):
            choose(rdx_idx + 1, used | set(redex.slots), fired + [(redex, data)])

    choose(0, frozenset(), [])
    return results


def reduce_step(p: Process) -> list[Process]:
    """All one-step reducts: every nonempty independent redex set fired
    simultaneously, or the single clock tick when no redex exists."""
    p = normalize(p)
    seen: dict[str, Process] = {}
    any_redex = False
    for count, comps in _soup_variants(soup(p)):
        if count == 0:
            continue
        any_redex = True
        result = par(*comps)
        seen.setdefault(canonical_key(result), result)
    if not any_redex:
        tick = normalize(phi_delta(p))
        return [tick]
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# Concrete syntax

class AmbientSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_PUNCT = {":", "[", "]", "(", ")", "|", ".", "~"}
_KEYWORDS = {"in", "out", "inf"}


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch in _PUNCT:
            tokens.append((ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise AmbientSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str):
        _kind, _val, line, col = self.peek()
        raise AmbientSyntaxError(message, line, col)

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            raise AmbientSyntaxError(f"expected {kind!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def parse(self) -> Process:
        p = self.process()
        if self.peek()[0] != "eof":
            self.fail(f"trailing input {self.peek()[1]!r}")
        return p

    def process(self) -> Process:
        parts = [self.term()]
        while self.peek()[0] == "|":
            self.next()
            parts.append(self.term())
        return par(*parts)

    def timer(self) -> Timer:
        tok = self.next()
        if tok[0] == "int":
            return int(tok[1])
        if tok[0] == "ident" and tok[1] == "inf":
            return INF
        raise AmbientSyntaxError("expected a timer (natural number or inf)", tok[2], tok[3])

    def term(self) -> Process:
        kind, val, line, col = self.peek()
        if kind == "int" and val == "0":
            self.next()
            return ZERO
        if kind == "(":
            self.next()
            p = self.process()
            self.expect(")")
            return p
        if kind == "~":
            self.next()
            tok = self.expect("ident")
            if tok[1] not in ("in", "out"):
                raise AmbientSyntaxError("expected in or out after ~", tok[2], tok[3])
            return self.prefix(tok[1], co=True)
        if kind == "ident" and val in ("in", "out"):
            self.next()
            return self.prefix(val, co=False)
        if kind == "ident":
            self.next()
            if val in _KEYWORDS:
                raise AmbientSyntaxError(f"{val!r} is reserved", line, col)
            self.expect(":")
            t = self.timer()
            self.expect("[")
            if self.peek()[0] == "]":
                self.next()
                return Amb(val, t, ZERO)
            body = self.process()
            self.expect("]")
            return Amb(val, t, body)
        raise AmbientSyntaxError(f"unexpected token {val!r}", line, col)

    def prefix(self, kind: str, co: bool) -> Process:
        self.expect(":")
        t = self.timer()
        tok = self.expect("ident")
        if tok[1] in _KEYWORDS:
            raise AmbientSyntaxError(f"{tok[1]!r} cannot name an ambient", tok[2], tok[3])
        cap = Capability(kind, co, tok[1], t)
        if self.peek()[0] == ".":
            self.next()
            return Prefix(cap, self.term())
        return Prefix(cap, ZERO)


def parse_ambient(text: str) -> Process:
    """Parse the concrete syntax into a normal-form process, all tags
    active. Raises AmbientSyntaxError with a position on bad input."""
    return _Parser(text).parse()


def render_process(p: Process) -> str:
    """Source text for an initial (all-active) process; round-trips
    through parse_ambient."""
    if isinstance(p, Zero):
        return "0"
    if isinstance(p, Prefix):
        head = str(p.cap)
        if isinstance(p.cont, Zero):
            return head
        cont = render_process(p.cont)
        if isinstance(p.cont, Par):
            cont = f"({cont})"
        return f"{head} . {cont}"
    if isinstance(p, Amb):
        if p.tag != "a":
            raise ValueError("only initial (all-active) processes have a source form")
        if isinstance(p.body, Zero):
            return f"{p.name}:{timer_str(p.timer)}[]"
        return f"{p.name}:{timer_str(p.timer)}[ {render_process(p.body)} ]"
    return " | ".join(
        f"({render_process(x)})" if isinstance(x, Par) else render_process(x) for x in p.parts
    )
