"""Timed mobile ambients.

An ambient is a named, timered place; capabilities `in n`/`out n` move it,
co-capabilities `~in n`/`~out n` grant permission. When nothing can move,
a global clock tick decrements every timer, drops expired capabilities,
dissolves expired ambients, and re-activates movers that acted this unit
of time.
"""

from mobilemem import parse_ambient, phi_delta, redexes, reduce_step
from mobilemem.ambient import canonical_key

process = parse_ambient("n:4[ in:1 m . in:2 k . out:3 s ] | m:6[ ~in:5 m ]")
print("process:")
print(" ", canonical_key(process))

print("\nmovement opportunities:")
for r in redexes(process):
    print(" ", r.describe())

(reduct,) = reduce_step(process)
print("\nafter n enters m (n is now tagged passive, its in-capability is gone):")
print(" ", canonical_key(reduct))

print("\nnothing can move now, so the next step is a clock tick:")
(ticked,) = reduce_step(reduct)
print(" ", canonical_key(ticked))
print("(timers dropped by one and n is active again)")

print("\nticking a process where a capability and an ambient expire:")
p = parse_ambient("k:1[ in:0 m . w:2[] ]")
for _ in range(3):
    print(" ", canonical_key(p))
    p = phi_delta(p)
print(" ", canonical_key(p))
