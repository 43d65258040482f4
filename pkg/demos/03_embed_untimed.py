"""Embedding an untimed system into the timed semantics.

Assigning `inf` to every timer makes all clock machinery inert: ticks do
nothing, nothing ever expires, and because an inf-timer object has no tick
to fall back on, every enabled move is forced, which is exactly classic
maximal parallelism. The timed engine and the plain untimed engine then
produce the same reach graph.
"""

from mobilemem import (
    EndoRule,
    ExoRule,
    Fresh,
    INF,
    Multiset,
    Symbol,
    UConfig,
    check_embedding,
    embed_infinite,
    umem,
)
from mobilemem.core import canonicalize

a, b = Symbol("a"), Symbol("b")

untimed = UConfig(umem("skin", [], [
    umem("h", [a, b]),
    umem("m", [a.dual(), b.dual()]),
]))
rules = (
    EndoRule("h", "m", Multiset([a]), name="enter"),
    ExoRule("h", "m", Multiset([b]), name="leave"),
)

timed, lifted = embed_infinite(untimed, rules)
print("embedded configuration (every timer is inf):")
print(" ", canonicalize(timed))

verdict = check_embedding(untimed, rules, 5)
print("\nreach graphs canonically equal to depth 5:",
      "yes" if verdict.ok else verdict.details)
print("untimed states:", verdict.details["untimed_nodes"],
      "| embedded states:", verdict.details["embedded_nodes"])
