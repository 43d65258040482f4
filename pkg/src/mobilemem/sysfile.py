"""The .mms membrane-system file format.

::

    mms 1 timed            # or: untimed, optionally followed by
    output skin            # "compiled" and/or "strict"

    skin:inf[ a:2, ~b:3 ; h:3[ x:1 ] m:inf[] ]

    endo h m : a | b , ~a | x => c:+7 a:- | x:-
    exo  h m : a |   , ~a |   =>      |
    rw   h   : a a => b:+3
    rw   *   : a => delta

Membranes are ``label:timer[ objects ; children ]``; objects are comma
separated, co-objects carry ``~``. Rule sides are space-separated symbol
lists; in right-hand sides ``sym:+t`` creates a fresh timer, ``sym:-``
carries the timer of the matching left occurrence (the k-th ``sym:-``
carries the k-th left occurrence of ``sym``), and bare ``delta`` marks the
host for dissolution. Untimed files omit every ``:timer`` and write bare
symbols on both rule sides. ``inf`` is the only spelling of infinity.
``strict`` in the header makes movement rules keep the moving membrane's
timer. Rule names are positional (``r0``, ``r1``, ...) and not serialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .core import (
    DELTA_NAME,
    INF,
    Carry,
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
    dual,
    renumber,
    timer_str,
)
from .untimed import UConfig, UNode, u_renumber


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass
class SystemFile:
    timed: bool
    output: str
    config: Union[Configuration, UConfig]
    rules: tuple
    version: int = 1
    compiled: bool = False
    strict: bool = False


_PUNCT = {"[", "]", ";", ",", "|", ":", "+", "-", "*", "~"}


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if text.startswith("=>", i):
            tokens.append(("=>", "=>", line, col))
            i += 2
            col += 2
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
        if ch.isalpha() or ch in "_$":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_$"):
                j += 1
            tokens.append(("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str):
        _k, _v, line, col = self.peek()
        raise ParseError(message, line, col)

    def expect(self, kind: str, what: str = ""):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {what or kind!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def ident(self, what: str = "identifier") -> str:
        return self.expect("ident", what)[1]

    # -- header ------------------------------------------------------------
    def header(self) -> tuple[bool, bool, bool]:
        tok = self.expect("ident", "mms header")
        if tok[1] != "mms":
            raise ParseError("file must start with 'mms'", tok[2], tok[3])
        version = self.expect("int", "format version")
        if version[1] != "1":
            raise ParseError(f"unsupported version {version[1]}", version[2], version[3])
        mode = self.ident("'timed' or 'untimed'")
        if mode not in ("timed", "untimed"):
            self.fail("expected 'timed' or 'untimed'")
        compiled = strict = False
        while self.peek()[0] == "ident" and self.peek()[1] in ("compiled", "strict"):
            flag = self.next()[1]
            compiled = compiled or flag == "compiled"
            strict = strict or flag == "strict"
        return mode == "timed", compiled, strict

    def timer(self) -> Timer:
        tok = self.next()
        if tok[0] == "int":
            return int(tok[1])
        if tok[0] == "ident" and tok[1] == "inf":
            return INF
        raise ParseError("expected a timer (natural number or inf)", tok[2], tok[3])

    def symbol(self) -> Symbol:
        co = False
        if self.peek()[0] == "~":
            self.next()
            co = True
        return Symbol(self.ident("object name"), co)

    # -- membranes ----------------------------------------------------------
    def membrane(self, timed: bool):
        label = self.ident("membrane label")
        timer = INF
        if timed:
            self.expect(":", "':timer'")
            timer = self.timer()
        self.expect("[")
        objects = []
        if self.peek()[0] in ("~", "ident"):
            objects.append(self.obj(timed))
            while self.peek()[0] == ",":
                self.next()
                objects.append(self.obj(timed))
        children = []
        if self.peek()[0] == ";":
            self.next()
        while self.peek()[0] != "]":
            children.append(self.membrane(timed))
        self.expect("]")
        if timed:
            return MembraneNode(label, timer, Multiset(objects), tuple(children))
        return UNode(label, Multiset(objects), tuple(children))

    def obj(self, timed: bool):
        sym = self.symbol()
        if not timed:
            return sym
        self.expect(":", "':timer'")
        return (sym, self.timer())

    # -- rules --------------------------------------------------------------
    def symbols_until(self, stops: set) -> list[Symbol]:
        out = []
        while True:
            kind, val, _l, _c = self.peek()
            if kind in stops or kind == "eof":
                return out
            if kind == "ident" and val in ("endo", "exo", "rw"):
                return out
            out.append(self.symbol())

    def products_until(self, stops: set, timed: bool, slots: tuple) -> tuple:
        used: dict[Symbol, int] = {}
        prods = []
        while True:
            kind, val, line, col = self.peek()
            if kind in stops or kind == "eof":
                return tuple(prods)
            if kind == "ident" and val in ("endo", "exo", "rw"):
                return tuple(prods)
            sym = self.symbol()
            if not timed:
                prods.append((sym, Fresh(INF)))
                continue
            if self.peek()[0] != ":":
                if sym.name == DELTA_NAME and not sym.is_co:
                    prods.append((sym, Fresh(INF)))
                    continue
                self.fail(f"product {sym} needs ':+timer' or ':-'")
            self.next()
            kind2, _v2, line2, col2 = self.peek()
            if kind2 == "+":
                self.next()
                prods.append((sym, Fresh(self.timer())))
            elif kind2 == "-":
                self.next()
                skip = used.get(sym, 0)
                slot = None
                seen = 0
                for idx, slot_sym in enumerate(slots):
                    if slot_sym == sym:
                        if seen == skip:
                            slot = idx
                            break
                        seen += 1
                if slot is None:
                    raise ParseError(
                        f"no left occurrence of {sym} left to carry", line2, col2
                    )
                used[sym] = skip + 1
                prods.append((sym, Carry(slot)))
            else:
                raise ParseError("expected '+timer' or '-' after ':'", line2, col2)

    def move_rule(self, keyword: str, timed: bool, index: int) -> Rule:
        h = self.ident("active label")
        m = self.ident("passive label")
        self.expect(":")
        u = Multiset(self.symbols_until({"|"}))
        self.expect("|")
        v = Multiset(self.symbols_until({","}))
        self.expect(",")
        u_bar_listed = Multiset(self.symbols_until({"|"}))
        self.expect("|")
        v2 = Multiset(self.symbols_until({"=>"}))
        self.expect("=>")
        cls = EndoRule if keyword == "endo" else ExoRule
        active_slots = tuple(u) + tuple(v)
        passive_slots = tuple(Multiset([dual(s) for s in u])) + tuple(v2)
        w = self.products_until({"|"}, timed, active_slots)
        self.expect("|")
        w2 = self.products_until(set(), timed, passive_slots)
        rule = cls(h, m, u, v, v2, w, w2, name=f"r{index}")
        if u_bar_listed != rule.u_bar:
            self.fail(f"passive trigger must be the duals of u ({'/'.join(map(str, rule.u_bar))})")
        return rule

    def rw_rule(self, timed: bool, index: int) -> Rule:
        if self.peek()[0] == "*":
            self.next()
            at = None
        else:
            at = self.ident("host label or *")
        self.expect(":")
        lhs = Multiset(self.symbols_until({"=>"}))
        self.expect("=>")
        rhs = self.products_until(set(), timed, tuple(lhs))
        return RewriteRule(at, lhs, rhs, name=f"r{index}")

    def rules(self, timed: bool) -> tuple:
        out = []
        while self.peek()[0] != "eof":
            tok = self.expect("ident", "rule keyword")
            if tok[1] == "endo" or tok[1] == "exo":
                out.append(self.move_rule(tok[1], timed, len(out)))
            elif tok[1] == "rw":
                out.append(self.rw_rule(timed, len(out)))
            else:
                raise ParseError(f"expected a rule keyword, found {tok[1]!r}", tok[2], tok[3])
        return tuple(out)

    def system(self) -> SystemFile:
        timed, compiled, strict = self.header()
        tok = self.expect("ident", "'output'")
        if tok[1] != "output":
            raise ParseError("expected 'output <label>'", tok[2], tok[3])
        output = self.ident("output label")
        skin = self.membrane(timed)
        if timed and skin.timer != INF:
            self.fail("the outermost membrane must have timer inf")
        rules = self.rules(timed)
        if strict:
            rules = tuple(
                type(r)(r.h, r.m, r.u, r.v, r.v2, r.w, r.w2, r.name, True)
                if isinstance(r, (EndoRule, ExoRule)) else r
                for r in rules
            )
        if timed:
            config = renumber(Configuration(skin, output))
        else:
            config = u_renumber(UConfig(skin, output))
        return SystemFile(timed, output, config, rules, 1, compiled, strict)


def parse_system(text: str) -> SystemFile:
    """Parse an .mms file; positioned ParseError on bad syntax."""
    return _Parser(text).system()


# ---------------------------------------------------------------------------
# Rendering

def _render_obj(entry, timed: bool) -> str:
    if timed:
        sym, t = entry
        return f"{sym}:{timer_str(t)}"
    return str(entry)


def _render_membrane(node, timed: bool) -> str:
    head = f"{node.label}:{timer_str(node.timer)}" if timed else node.label
    objs = []
    for entry, n in node.content.items():
        objs.extend([_render_obj(entry, timed)] * n)
    kids = sorted(_render_membrane(c, timed) for c in node.children)
    if not objs and not kids:
        return head + "[]"
    inner = ", ".join(sorted(objs))
    if kids:
        inner += " ; " + " ".join(kids)
    return f"{head}[ {inner} ]"


def _render_prods(prods, timed: bool) -> str:
    if not timed:
        return " ".join(str(sym) for sym, _spec in prods)
    parts = []
    for sym, spec in prods:
        if isinstance(spec, Carry):
            parts.append(f"{sym}:-")
        elif sym.name == DELTA_NAME and not sym.is_co:
            parts.append(str(sym))
        else:
            parts.append(f"{sym}:+{timer_str(spec.timer)}")
    return " ".join(parts)


def _render_rule(rule: Rule, timed: bool) -> str:
    if isinstance(rule, RewriteRule):
        lhs = " ".join(str(s) for s in rule.lhs)
        return f"rw {rule.at if rule.at is not None else '*'} : {lhs} => {_render_prods(rule.rhs, timed)}"
    kw = "endo" if isinstance(rule, EndoRule) else "exo"
    u = " ".join(str(s) for s in rule.u)
    v = " ".join(str(s) for s in rule.v)
    ub = " ".join(str(s) for s in rule.u_bar)
    v2 = " ".join(str(s) for s in rule.v2)
    w = _render_prods(rule.w, timed)
    w2 = _render_prods(rule.w2, timed)
    return f"{kw} {rule.h} {rule.m} : {u} | {v} , {ub} | {v2} => {w} | {w2}"


def render_system(sf: SystemFile) -> str:
    """Canonical source text; parse(render(x)) reproduces x with
    positional rule names."""
    flags = ("timed" if sf.timed else "untimed")
    if sf.compiled:
        flags += " compiled"
    if sf.strict:
        flags += " strict"
    lines = [f"mms {sf.version} {flags}", f"output {sf.output}", ""]
    lines.append(_render_membrane(sf.config.skin, sf.timed))
    if sf.rules:
        lines.append("")
        lines.extend(_render_rule(r, sf.timed) for r in sf.rules)
    return "\n".join(lines) + "\n"
